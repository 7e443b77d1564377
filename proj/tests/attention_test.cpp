#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "acit/attention.hpp"
#include "acit/ops.hpp"
#include "test_support.hpp"

using namespace acit;
using acit::testing::random_tensor;

using D = Tensor<double>;

namespace {

// plain-loop scalar oracle, independent of the tensor ops
std::vector<double> oracle_sdpa(const std::vector<double>& q,
                                const std::vector<double>& k,
                                const std::vector<double>& v, int lq, int lk,
                                int d, int dv) {
  std::vector<double> out(lq * dv, 0.0);
  for (int i = 0; i < lq; ++i) {
    std::vector<double> logits(lk, 0.0);
    for (int j = 0; j < lk; ++j) {
      for (int l = 0; l < d; ++l) logits[j] += q[i * d + l] * k[j * d + l];
      logits[j] /= std::sqrt(double(d));
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double& e : logits) {
      e = std::exp(e - mx);
      z += e;
    }
    for (int j = 0; j < lk; ++j) {
      for (int c = 0; c < dv; ++c) out[i * dv + c] += logits[j] / z * v[j * dv + c];
    }
  }
  return out;
}

AttentionParams<double> identity_params(std::size_t d) {
  std::vector<double> eye(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  AttentionParams<double> p;
  p.w_q = {D::from_data({d, d}, eye)};
  p.w_k = {D::from_data({d, d}, eye)};
  p.w_v = {D::from_data({d, d}, eye)};
  p.w_o = D::from_data({d, d}, eye);
  return p;
}

}  // namespace

TEST(Sdpa, ZeroQueryGivesUniformAttention) {
  CounterRng rng(1);
  auto q = D::zeros({3, 4});
  auto k = random_tensor({5, 4}, rng);
  auto v = random_tensor({5, 2}, rng);
  auto out = sdpa(q, k, v);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      double mean = 0;
      for (int j = 0; j < 5; ++j) mean += v[j * 2 + c];
      mean /= 5;
      EXPECT_NEAR(out[i * 2 + c], mean, 1e-12);
    }
  }
}

TEST(Sdpa, SingleKeyBroadcastsValue) {
  CounterRng rng(2);
  auto q = random_tensor({4, 3}, rng);
  auto k = random_tensor({1, 3}, rng);
  auto v = random_tensor({1, 5}, rng);
  auto out = sdpa(q, k, v);
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 5; ++c) EXPECT_NEAR(out[i * 5 + c], v[c], 1e-12);
  }
}

TEST(Sdpa, TwoByTwoHandCase) {
  std::vector<double> eye{1, 0, 0, 1};
  auto q = D::from_data({2, 2}, eye);
  auto k = D::from_data({2, 2}, eye);
  auto v = D::from_data({2, 2}, eye);
  auto out = sdpa(q, k, v);
  // logits = I/sqrt(2); per row softmax over {1/sqrt2, 0}
  const double hi = std::exp(1.0 / std::sqrt(2.0));
  const double w_on = hi / (hi + 1.0), w_off = 1.0 / (hi + 1.0);
  EXPECT_NEAR(out[0], w_on, 1e-9);
  EXPECT_NEAR(out[1], w_off, 1e-9);
  EXPECT_NEAR(out[2], w_off, 1e-9);
  EXPECT_NEAR(out[3], w_on, 1e-9);
}

TEST(Sdpa, MatchesScalarOracle) {
  CounterRng rng(3);
  for (int it = 0; it < 10; ++it) {
    auto q = random_tensor({3, 4}, rng);
    auto k = random_tensor({5, 4}, rng);
    auto v = random_tensor({5, 2}, rng);
    auto out = sdpa(q, k, v);
    auto want = oracle_sdpa(q.values(), k.values(), v.values(), 3, 5, 4, 2);
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_NEAR(out[i], want[i], 1e-9);
    }
  }
}

TEST(Sdpa, DimensionErrors) {
  EXPECT_THROW(sdpa(D::zeros({2, 3}), D::zeros({4, 5}), D::zeros({4, 2})),
               DimensionError);
  EXPECT_THROW(sdpa(D::zeros({2, 3}), D::zeros({4, 3}), D::zeros({5, 2})),
               DimensionError);
}

TEST(Sdpa, RowStochasticWeights) {
  CounterRng rng(4);
  for (int it = 0; it < 200; ++it) {
    auto q = random_tensor({4, 3}, rng, false, it % 2 ? 1.0 : 50.0);
    auto k = random_tensor({6, 3}, rng, false, it % 2 ? 1.0 : 50.0);
    auto w = attention_weights(q, k);
    for (int i = 0; i < 4; ++i) {
      double s = 0;
      for (int j = 0; j < 6; ++j) {
        EXPECT_GE(w[i * 6 + j], 0.0);
        s += w[i * 6 + j];
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Sdpa, KeyOrderInvariantAndQueryEquivariant) {
  CounterRng rng(5);
  auto q = random_tensor({3, 4}, rng);
  auto k = random_tensor({5, 4}, rng);
  auto v = random_tensor({5, 2}, rng);
  auto out = sdpa(q, k, v);

  // permute key/value rows together: output unchanged
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<double> kp(5 * 4), vp(5 * 2);
  for (int j = 0; j < 5; ++j) {
    for (int l = 0; l < 4; ++l) kp[j * 4 + l] = k[perm[j] * 4 + l];
    for (int c = 0; c < 2; ++c) vp[j * 2 + c] = v[perm[j] * 2 + c];
  }
  auto out_p = sdpa(q, D::from_data({5, 4}, kp), D::from_data({5, 2}, vp));
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_NEAR(out_p[i], out[i], 1e-12);
  }

  // permute query rows: output rows permute identically
  std::vector<int> qperm{2, 0, 1};
  std::vector<double> qp(3 * 4);
  for (int i = 0; i < 3; ++i) {
    for (int l = 0; l < 4; ++l) qp[i * 4 + l] = q[qperm[i] * 4 + l];
  }
  auto out_q = sdpa(D::from_data({3, 4}, qp), k, v);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(out_q[i * 2 + c], out[qperm[i] * 2 + c], 1e-12);
    }
  }
}

TEST(Sdpa, ScaleCheck) {
  CounterRng rng(6);
  auto q = random_tensor({3, 4}, rng);
  auto k = random_tensor({5, 4}, rng);
  // logits scale by c^2 when q and k both scale by c
  const double c = 1.7;
  auto logits1 = matmul_nt(q, k);
  auto logits2 = matmul_nt(scale(q, c), scale(k, c));
  for (std::size_t i = 0; i < logits1.size(); ++i) {
    EXPECT_NEAR(logits2[i], c * c * logits1[i], 1e-9);
  }
  // c = 0 collapses to the uniform mean of v
  auto v = random_tensor({5, 2}, rng);
  auto out = sdpa(scale(q, 0.0), scale(k, 0.0), v);
  for (int i = 0; i < 3; ++i) {
    for (int col = 0; col < 2; ++col) {
      double mean = 0;
      for (int j = 0; j < 5; ++j) mean += v[j * 2 + col];
      EXPECT_NEAR(out[i * 2 + col], mean / 5, 1e-12);
    }
  }
}

TEST(Mha, SingleHeadIdentityReducesToSdpa) {
  CounterRng rng(7);
  auto x_q = random_tensor({3, 4}, rng);
  auto x_kv = random_tensor({5, 4}, rng);
  auto p = identity_params(4);
  auto got = mha(x_q, x_kv, p, 1);
  auto want = sdpa(x_q, x_kv, x_kv);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Mha, SingleRowIdentityPassThrough) {
  CounterRng rng(8);
  auto x = random_tensor({1, 4}, rng);
  auto p = identity_params(4);
  auto got = mha(x, x, p, 1);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], x[i], 1e-12);
}

TEST(Mha, TwoHeadsMatchSlicedOracle) {
  CounterRng rng(9);
  const std::size_t L = 3, dm = 4, dh = 2;
  auto x = random_tensor({L, dm}, rng);
  AttentionParams<double> p;
  for (int h = 0; h < 2; ++h) {
    p.w_q.push_back(random_tensor({dm, dh}, rng));
    p.w_k.push_back(random_tensor({dm, dh}, rng));
    p.w_v.push_back(random_tensor({dm, dh}, rng));
  }
  p.w_o = random_tensor({dm, dm}, rng);
  auto got = mha(x, x, p, 2);

  // oracle: two explicit sdpa slices + concat + projection, all plain loops
  auto project = [&](const Tensor<double>& w) {
    std::vector<double> out(L * dh, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < dh; ++j) {
        for (std::size_t l = 0; l < dm; ++l) {
          out[i * dh + j] += x[i * dm + l] * w[l * dh + j];
        }
      }
    }
    return out;
  };
  std::vector<double> concat(L * dm, 0.0);
  for (int h = 0; h < 2; ++h) {
    auto qh = project(p.w_q[h]);
    auto kh = project(p.w_k[h]);
    auto vh = project(p.w_v[h]);
    auto oh = oracle_sdpa(qh, kh, vh, L, L, dh, dh);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < dh; ++j) {
        concat[i * dm + h * dh + j] = oh[i * dh + j];
      }
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < dm; ++j) {
      double want = 0;
      for (std::size_t l = 0; l < dm; ++l) {
        want += concat[i * dm + l] * p.w_o[l * dm + j];
      }
      EXPECT_NEAR(got[i * dm + j], want, 1e-9);
    }
  }
}

TEST(Mha, IndivisibleHeadsIsConfigError) {
  auto p = identity_params(4);
  EXPECT_THROW(mha(D::zeros({2, 4}), D::zeros({2, 4}), p, 3), ConfigError);
}

TEST(PositionalEncoding, ZeroPositionPattern) {
  auto pe = positional_encoding<double>(3, 6);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(pe[2 * i], 0.0);      // sin 0
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(pe[2 * i + 1], 1.0);  // cos 0
}

TEST(PositionalEncoding, DeterministicAndFormula) {
  auto a = positional_encoding<double>(16, 8);
  auto b = positional_encoding<double>(16, 8);
  EXPECT_EQ(a.values(), b.values());

  auto pe = positional_encoding<double>(2, 4);
  EXPECT_NEAR(pe[1 * 4 + 0], std::sin(1.0), 1e-12);  // ~0.841471
  EXPECT_NEAR(pe[1 * 4 + 0], 0.841471, 1e-6);
  EXPECT_NEAR(pe[1 * 4 + 1], std::cos(1.0), 1e-12);
  EXPECT_NEAR(pe[1 * 4 + 2], std::sin(1.0 / 100.0), 1e-12);
}

TEST(PositionalEncoding, OddDimsRejected) {
  EXPECT_THROW(positional_encoding<double>(4, 5), ConfigError);
}

TEST(PrependCls, EmptySequenceEdge) {
  auto cls = D::from_data({3}, {1, 2, 3});
  auto out = prepend_cls(D::zeros({0, 3}), cls);
  ASSERT_EQ(out.shape(), (Shape{1, 3}));
  EXPECT_EQ(out.values(), (std::vector<double>{1, 2, 3}));
}

TEST(PrependCls, RowsPreservedBitExact) {
  CounterRng rng(10);
  auto seq = random_tensor({5, 4}, rng);
  auto cls = D::zeros({4});
  auto out = prepend_cls(seq, cls);
  ASSERT_EQ(out.shape(), (Shape{6, 4}));
  for (int j = 0; j < 4; ++j) EXPECT_EQ(out[j], 0.0);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(out[(i + 1) * 4 + j], seq[i * 4 + j]);  // bit-exact
    }
  }
  EXPECT_THROW(prepend_cls(seq, D::zeros({5})), DimensionError);
}

TEST(GradCheck, SdpaAndMha) {
  CounterRng rng(11);
  auto q = random_tensor({3, 4}, rng, true);
  auto k = random_tensor({5, 4}, rng, true);
  auto v = random_tensor({5, 4}, rng, true);
  auto r = acit::testing::check_gradients(
      {q, k, v}, [&] { return acit::testing::weighted_sum(sdpa(q, k, v), 50); });
  EXPECT_LT(r.max_rel_err, 1e-5);

  AttentionParams<double> p;
  for (int h = 0; h < 2; ++h) {
    p.w_q.push_back(random_tensor({4, 2}, rng, true));
    p.w_k.push_back(random_tensor({4, 2}, rng, true));
    p.w_v.push_back(random_tensor({4, 2}, rng, true));
  }
  p.w_o = random_tensor({4, 4}, rng, true);
  auto x = random_tensor({3, 4}, rng, true);
  std::vector<Tensor<double>> leaves{x, p.w_o};
  for (int h = 0; h < 2; ++h) {
    leaves.push_back(p.w_q[h]);
    leaves.push_back(p.w_k[h]);
    leaves.push_back(p.w_v[h]);
  }
  auto r2 = acit::testing::check_gradients(
      leaves, [&] { return acit::testing::weighted_sum(mha(x, x, p, 2), 51); });
  EXPECT_LT(r2.max_rel_err, 1e-5);
}
