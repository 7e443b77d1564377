#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <vector>

#include "acit/model.hpp"
#include "test_support.hpp"

using namespace acit;
using acit::testing::random_tensor;
using D = Tensor<double>;

namespace {

ModelConfig reduced_config(Variant v = Variant::full) {
  ModelConfig c;
  c.variant = v;
  c.n_steps = 3;
  c.grid = 2;
  c.channels = 3;
  c.token_dim = 8;
  c.ammi_heads = 2;
  c.ammi_ffn_dim = 8;
  c.tfa_layers = 1;
  c.tfa_heads = 3;
  c.tfa_ffn_dim = 16;
  c.mlp_hidden = 4;
  c.v5_heads = 2;
  c.image_size = 64;
  c.patch = 32;
  return c;
}

ClipInput<double> random_clip(const ModelConfig& cfg, CounterRng& rng) {
  ClipInput<double> clip;
  const Shape vs{cfg.n_steps, cfg.grid, cfg.grid, cfg.channels};
  clip.local_rgb = random_tensor(vs, rng, false, 0.5);
  clip.local_flow = random_tensor(vs, rng, false, 0.5);
  clip.global_sem = random_tensor(vs, rng, false, 0.5);
  clip.global_flow = random_tensor(vs, rng, false, 0.5);
  std::vector<double> speed(cfg.n_steps);
  for (auto& s : speed) s = rng.uniform(3.0, 12.0);
  std::vector<double> bbox(cfg.n_steps * 4);
  for (std::size_t t = 0; t < cfg.n_steps; ++t) {
    bbox[t * 4 + 0] = 500 + 10.0 * double(t);
    bbox[t * 4 + 1] = 400;
    bbox[t * 4 + 2] = 600 + 10.0 * double(t);
    bbox[t * 4 + 3] = 700;
  }
  clip.motion.speed = D::from_data({cfg.n_steps, 1}, std::move(speed));
  clip.motion.bbox = D::from_data({cfg.n_steps, 4}, std::move(bbox));
  return clip;
}

}  // namespace

TEST(Model, DeterministicInitAndForward) {
  auto cfg = reduced_config();
  auto m1 = AcitModel<double>::build(cfg, 42);
  auto m2 = AcitModel<double>::build(cfg, 42);
  EXPECT_EQ(m1.avmi_local.sa_q.values(), m2.avmi_local.sa_q.values());
  EXPECT_EQ(m1.tfa.head.w1.values(), m2.tfa.head.w1.values());

  CounterRng rng(7);
  auto clip = random_clip(cfg, rng);
  RunContext<double> ctx;
  auto l1 = m1.forward(clip, ctx);
  auto l2 = m2.forward(clip, ctx);
  EXPECT_EQ(l1.item(), l2.item());  // bit-identical

  auto m3 = AcitModel<double>::build(cfg, 43);
  EXPECT_NE(m3.avmi_local.sa_q.values(), m1.avmi_local.sa_q.values());
}

TEST(Model, SharedNamesAlignAcrossVariants) {
  auto full = AcitModel<double>::build(reduced_config(Variant::full), 42);
  auto v4 = AcitModel<double>::build(reduced_config(Variant::v4), 42);
  EXPECT_EQ(full.ammi.speed_w.values(), v4.ammi.speed_w.values());
  EXPECT_EQ(full.tfa.head.w1.values(), v4.tfa.head.w1.values());
}

TEST(Model, ParameterCountsByVariant) {
  std::map<Variant, std::size_t> counts;
  for (Variant v : {Variant::full, Variant::v1, Variant::v2, Variant::v3,
                    Variant::v4, Variant::v5}) {
    auto m = AcitModel<double>::build(reduced_config(v), 42);
    counts[v] = m.parameter_count();
    auto m2 = AcitModel<double>::build(reduced_config(v), 42);
    EXPECT_EQ(counts[v], m2.parameter_count());
  }
  // no temporal encoder in v1
  EXPECT_LT(counts[Variant::v1], counts[Variant::full]);
  // v3 rewires but keeps shapes
  EXPECT_EQ(counts[Variant::v3], counts[Variant::full]);
  // v4 drops the dual-path projections and gates
  EXPECT_LT(counts[Variant::v4], counts[Variant::full]);
}

TEST(Model, V4HasNoGateParameter) {
  auto m = AcitModel<double>::build(reduced_config(Variant::v4), 42);
  std::set<std::string> names;
  for (auto& p : m.parameters()) names.insert(p.name);
  EXPECT_EQ(names.count("avmi_local.alpha"), 0u);
  EXPECT_EQ(names.count("avmi_global.alpha"), 0u);
  EXPECT_EQ(names.count("avmi_local.reduce_primary"), 1u);

  auto full = AcitModel<double>::build(reduced_config(Variant::full), 42);
  std::set<std::string> full_names;
  for (auto& p : full.parameters()) full_names.insert(p.name);
  EXPECT_EQ(full_names.count("avmi_local.alpha"), 1u);
}

TEST(Model, AvmiInstancesShareNoParameters) {
  auto cfg = reduced_config();
  auto m = AcitModel<double>::build(cfg, 42);
  CounterRng rng(8);
  auto clip = random_clip(cfg, rng);

  auto feat_global_before =
      avmi_forward(clip.global_sem, clip.global_flow, m.avmi_global);
  for (auto* t : {&m.avmi_local.reduce_primary, &m.avmi_local.sa_q,
                  &m.avmi_local.ga_v, &m.avmi_local.alpha}) {
    for (auto& v : t->values()) v += 0.7;
  }
  auto feat_global_after =
      avmi_forward(clip.global_sem, clip.global_flow, m.avmi_global);
  EXPECT_EQ(feat_global_before.values(), feat_global_after.values());
  EXPECT_NE(m.avmi_local.sa_q.node().get(), m.avmi_global.sa_q.node().get());
}

TEST(Model, AllVariantsProduceFiniteLogits) {
  CounterRng rng(9);
  for (Variant v : {Variant::full, Variant::v1, Variant::v2, Variant::v3,
                    Variant::v4, Variant::v5}) {
    auto cfg = reduced_config(v);
    auto m = AcitModel<double>::build(cfg, 42);
    auto clip = random_clip(cfg, rng);
    RunContext<double> ctx;
    auto logit = m.forward(clip, ctx);
    EXPECT_TRUE(std::isfinite(logit.item())) << variant_name(v);

    // training mode with live dropout streams
    RunContext<double> train_ctx{true, CounterRng(5)};
    auto logit2 = m.forward(clip, train_ctx);
    EXPECT_TRUE(std::isfinite(logit2.item())) << variant_name(v);
  }
}

TEST(Model, FrameModeRunsThePatchStub) {
  auto cfg = reduced_config();
  auto m = AcitModel<double>::build(cfg, 42);
  CounterRng rng(10);
  ClipInput<double> clip;
  const Shape fs{cfg.n_steps, cfg.image_size, cfg.image_size, 3};
  clip.local_rgb = random_tensor(fs, rng, false, 0.3);
  clip.local_flow = random_tensor(fs, rng, false, 0.3);
  clip.global_sem = random_tensor(fs, rng, false, 0.3);
  clip.global_flow = random_tensor(fs, rng, false, 0.3);
  clip.visuals_are_frames = true;
  auto motion = random_clip(cfg, rng).motion;
  clip.motion = motion;
  RunContext<double> ctx;
  EXPECT_TRUE(std::isfinite(m.forward(clip, ctx).item()));
}

TEST(Model, FeatureShapeMismatchRejected) {
  auto cfg = reduced_config();
  auto m = AcitModel<double>::build(cfg, 42);
  CounterRng rng(11);
  auto clip = random_clip(cfg, rng);
  clip.local_rgb = D::zeros({cfg.n_steps, cfg.grid, cfg.grid, 5});
  RunContext<double> ctx;
  EXPECT_THROW(m.forward(clip, ctx), DimensionError);
}

TEST(Model, CheckpointRoundTrip) {
  namespace fs = std::filesystem;
  auto cfg = reduced_config(Variant::v5);
  auto m = AcitModel<double>::build(cfg, 42);
  m.norm.speed_mean = 7.25;
  m.norm.speed_std = 2.5;
  const auto dir = (fs::temp_directory_path() / "acit_ckpt_test").string();
  fs::remove_all(dir);
  m.save_checkpoint(dir);

  auto loaded = AcitModel<double>::load_checkpoint(dir);
  EXPECT_EQ(loaded.cfg.variant, Variant::v5);
  EXPECT_EQ(loaded.cfg.token_dim, cfg.token_dim);
  EXPECT_DOUBLE_EQ(loaded.norm.speed_mean, 7.25);
  EXPECT_DOUBLE_EQ(loaded.norm.speed_std, 2.5);

  auto params = m.parameters();
  auto loaded_params = loaded.parameters();
  ASSERT_EQ(params.size(), loaded_params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_EQ(params[i].name, loaded_params[i].name);
    EXPECT_EQ(params[i].tensor.values(), loaded_params[i].tensor.values());
  }

  CounterRng rng(12);
  auto clip = random_clip(cfg, rng);
  RunContext<double> ctx;
  EXPECT_EQ(m.forward(clip, ctx).item(), loaded.forward(clip, ctx).item());
  fs::remove_all(dir);
}

TEST(Model, CheckpointMissingParameterRejected) {
  namespace fs = std::filesystem;
  auto cfg = reduced_config();
  auto m = AcitModel<double>::build(cfg, 42);
  const auto dir = (fs::temp_directory_path() / "acit_ckpt_broken").string();
  fs::remove_all(dir);
  m.save_checkpoint(dir);
  fs::remove(fs::path(dir) / "tfa_head_w1.tsr");
  EXPECT_THROW(AcitModel<double>::load_checkpoint(dir), Error);
  fs::remove_all(dir);
}

TEST(GradCheck, FullModelReducedDims) {
  auto cfg = reduced_config();
  auto m = AcitModel<double>::build(cfg, 42);
  CounterRng rng(13);
  auto clip = random_clip(cfg, rng);

  std::vector<D> leaves;
  m.for_each_param([&](const std::string& name, Tensor<double>& t, ParamKind,
                       bool) {
    if (name.rfind("encoder.", 0) == 0) return;  // inert in feature mode
    leaves.push_back(t);
  });
  auto r = acit::testing::check_gradients(leaves, [&] {
    RunContext<double> ctx;  // eval mode: no dropout in the FD path
    return m.forward(clip, ctx);
  });
  EXPECT_LT(r.max_rel_err, 1e-4);
  EXPECT_GT(r.checked, 1000u);
}

TEST(Model, PaperScaleConfigValidates) {
  auto cfg = ModelConfig::paper_scale();
  cfg.validate();
  EXPECT_EQ(cfg.channels, 1024u);
  EXPECT_EQ(cfg.token_dim, 256u);
  EXPECT_EQ(cfg.fused_dim(), 768u);
  EXPECT_EQ(cfg.tfa_ffn_dim, 2048u);
  EXPECT_EQ(cfg.tfa_heads, 6u);
  EXPECT_EQ(cfg.tfa_layers, 2u);
}

TEST(Model, ConfigValidationCatchesBadCombos) {
  auto cfg = reduced_config();
  cfg.tfa_heads = 5;  // 24 % 5 != 0
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = reduced_config();
  cfg.patch = 16;  // image/patch != grid
  EXPECT_THROW(cfg.validate(), ConfigError);
}
