#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "acit/encoder_stub.hpp"
#include "acit/tsr.hpp"
#include "test_support.hpp"

using namespace acit;
using acit::testing::random_tensor;
using D = Tensor<double>;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

PatchEmbedParams<double> random_stub(std::size_t c, CounterRng& rng,
                                     bool requires_grad = false) {
  return {random_tensor({32 * 32 * 3, c}, rng, requires_grad, 0.02),
          Tensor<double>::zeros({c}, requires_grad)};
}

}  // namespace

TEST(PatchEmbed, ZeroFrameGivesZeroMap) {
  CounterRng rng(1);
  auto p = random_stub(4, rng);
  auto out = patch_embed(D::zeros({256, 256, 3}), p);
  ASSERT_EQ(out.shape(), (Shape{8, 8, 4}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(PatchEmbed, SummingKernelGivesPatchSums) {
  CounterRng rng(2);
  auto frame = random_tensor({256, 256, 3}, rng);
  PatchEmbedParams<double> p{Tensor<double>::filled({32 * 32 * 3, 1}, 1.0),
                             Tensor<double>::zeros({1})};
  auto out = patch_embed(frame, p);
  ASSERT_EQ(out.shape(), (Shape{8, 8, 1}));
  for (int gr = 0; gr < 8; ++gr) {
    for (int gc = 0; gc < 8; ++gc) {
      double want = 0;
      for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
          for (int ch = 0; ch < 3; ++ch) {
            want += frame[((gr * 32 + r) * 256 + gc * 32 + c) * 3 + ch];
          }
        }
      }
      EXPECT_NEAR(out[gr * 8 + gc], want, 1e-8);
    }
  }
}

TEST(PatchEmbed, SwappingPatchesSwapsCellsOnly) {
  CounterRng rng(3);
  auto frame = random_tensor({256, 256, 3}, rng);
  auto p = random_stub(4, rng);
  auto base = patch_embed(frame, p);

  // swap patches (0,0) and (3,5)
  auto swapped = frame.detached_copy();
  auto idx = [](int gr, int gc, int r, int c, int ch) {
    return ((gr * 32 + r) * 256 + gc * 32 + c) * 3 + ch;
  };
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        std::swap(swapped.values()[idx(0, 0, r, c, ch)],
                  swapped.values()[idx(3, 5, r, c, ch)]);
      }
    }
  }
  auto out = patch_embed(swapped, p);
  for (int gr = 0; gr < 8; ++gr) {
    for (int gc = 0; gc < 8; ++gc) {
      for (int ch = 0; ch < 4; ++ch) {
        const double got = out[(gr * 8 + gc) * 4 + ch];
        double want;
        if (gr == 0 && gc == 0) {
          want = base[(3 * 8 + 5) * 4 + ch];
        } else if (gr == 3 && gc == 5) {
          want = base[(0 * 8 + 0) * 4 + ch];
        } else {
          want = base[(gr * 8 + gc) * 4 + ch];
        }
        EXPECT_EQ(got, want);
      }
    }
  }
}

TEST(PatchEmbed, WrongExtentsRejected) {
  CounterRng rng(4);
  auto p = random_stub(4, rng);
  EXPECT_THROW(patch_embed(D::zeros({128, 256, 3}), p), DimensionError);
  EXPECT_THROW(patch_embed(D::zeros({256, 256, 1}), p), DimensionError);
}

TEST(EncodeClip, SharedWeightsAcrossFrames) {
  CounterRng rng(5);
  auto frame = random_tensor({256, 256, 3}, rng);
  std::vector<double> clip_data;
  clip_data.reserve(16 * frame.size());
  for (int t = 0; t < 16; ++t) {
    clip_data.insert(clip_data.end(), frame.values().begin(),
                     frame.values().end());
  }
  auto clip = D::from_data({16, 256, 256, 3}, std::move(clip_data));
  auto p = random_stub(4, rng);
  auto feats = encode_clip(clip, p);
  ASSERT_EQ(feats.shape(), (Shape{16, 8, 8, 4}));
  const std::size_t stride = 8 * 8 * 4;
  for (int t = 1; t < 16; ++t) {
    for (std::size_t i = 0; i < stride; ++i) {
      EXPECT_EQ(feats[t * stride + i], feats[i]);
    }
  }
}

TEST(EncodeClip, ZeroClipAndWrongLength) {
  CounterRng rng(6);
  auto p = random_stub(2, rng);
  auto feats = encode_clip(D::zeros({16, 256, 256, 3}), p);
  for (std::size_t i = 0; i < feats.size(); ++i) EXPECT_EQ(feats[i], 0.0);
  EXPECT_THROW(encode_clip(D::zeros({15, 256, 256, 3}), p), ContractError);
}

TEST(EncodeClip, FrameWiseIndependence) {
  CounterRng rng(7);
  auto clip = random_tensor({16, 256, 256, 3}, rng);
  auto p = random_stub(2, rng);
  auto base = encode_clip(clip, p);

  auto perturbed = clip.detached_copy();
  const std::size_t frame_len = 256 * 256 * 3;
  for (std::size_t i = 0; i < frame_len; ++i) {
    perturbed.values()[7 * frame_len + i] += 1.0;
  }
  auto out = encode_clip(perturbed, p);
  const std::size_t stride = 8 * 8 * 2;
  for (int t = 0; t < 16; ++t) {
    bool changed = false;
    for (std::size_t i = 0; i < stride; ++i) {
      if (out[t * stride + i] != base[t * stride + i]) changed = true;
    }
    EXPECT_EQ(changed, t == 7);
  }
}

TEST(GradCheck, PatchEmbedParameters) {
  CounterRng rng(8);
  auto frame = random_tensor({256, 256, 3}, rng, false, 0.05);
  auto w = random_tensor({32 * 32 * 3, 2}, rng, true, 0.02);
  auto b = Tensor<double>::zeros({2}, true);
  auto r = acit::testing::check_gradients({b}, [&] {
    PatchEmbedParams<double> p{w, b};
    return acit::testing::weighted_sum(patch_embed(frame, p), 60);
  });
  EXPECT_LT(r.max_rel_err, 1e-5);
}

// --- TSR format -------------------------------------------------------------

TEST(Tsr, RoundTripBitExactF32) {
  CounterRng rng(9);
  auto t = acit::testing::random_tensor_f32({16, 8, 8, 4}, rng);
  const auto path = temp_path("acit_rt_f32.tsr");
  write_tsr(path, t);
  auto back = load_tensor<float>(path);
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(back.values(), t.values());
  std::filesystem::remove(path);
}

TEST(Tsr, RoundTripBitExactF64) {
  CounterRng rng(10);
  auto t = random_tensor({3, 5}, rng);
  const auto path = temp_path("acit_rt_f64.tsr");
  write_tsr(path, t);
  auto d = read_tsr(path);
  EXPECT_EQ(d.dtype, TsrDtype::f64);
  EXPECT_EQ(d.shape, t.shape());
  EXPECT_EQ(d.f64, t.values());
  std::filesystem::remove(path);
}

TEST(Tsr, TruncatedFileIsFormatErrorNotCrash) {
  CounterRng rng(11);
  auto t = acit::testing::random_tensor_f32({4, 4}, rng);
  const auto path = temp_path("acit_trunc.tsr");
  write_tsr(path, t);
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  EXPECT_THROW(read_tsr(path), FormatError);
  std::filesystem::resize_file(path, 3);  // inside the magic
  EXPECT_THROW(read_tsr(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Tsr, BadHeaderFieldsNameByteOffset) {
  const auto path = temp_path("acit_bad.tsr");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
    f.put(1);
    f.put(0);
    f.put(0);
    f.put(0);
  }
  try {
    read_tsr(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 0"), std::string::npos);
  }
  {
    std::ofstream f(path, std::ios::binary);
    f << "ACIT";
    f.put(1);
    f.put(9);  // unknown dtype
    f.put(0);
    f.put(0);
  }
  try {
    read_tsr(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 5"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Tsr, PaperScaleFeatureDimsAccepted) {
  // (16,8,8,1024) header + zero payload
  const auto path = temp_path("acit_paper.tsr");
  std::vector<float> zeros(16 * 8 * 8 * 1024, 0.0f);
  write_tsr(path, Shape{16, 8, 8, 1024}, zeros.data());
  auto feats = load_features<float>(path);
  EXPECT_EQ(feats.shape(), (Shape{16, 8, 8, 1024}));
  std::filesystem::remove(path);
}

TEST(Tsr, LoadFeaturesChecksRankAndDims) {
  const auto path = temp_path("acit_rank.tsr");
  std::vector<float> v(6, 1.0f);
  write_tsr(path, Shape{2, 3}, v.data());
  EXPECT_THROW(load_features<float>(path), FormatError);

  std::vector<float> v2(5 * 8 * 8 * 2, 0.0f);
  write_tsr(path, Shape{5, 8, 8, 2}, v2.data());
  EXPECT_THROW(load_features<float>(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Tsr, WritesAreByteIdenticalAcrossRuns) {
  CounterRng rng(12);
  auto t = acit::testing::random_tensor_f32({4, 7}, rng);
  const auto p1 = temp_path("acit_det1.tsr");
  const auto p2 = temp_path("acit_det2.tsr");
  write_tsr(p1, t);
  write_tsr(p2, t);
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  EXPECT_EQ(sa, sb);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}
