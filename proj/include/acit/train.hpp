#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acit/data.hpp"
#include "acit/metrics.hpp"
#include "acit/model.hpp"
#include "acit/tfa.hpp"

namespace acit {

struct TrainConfig {
  double lr = 2e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 20;
  std::uint64_t seed = 42;
  double l2 = 1e-3;          // applies to the MLP head weights only
  std::size_t patience = 5;  // early stop on validation AUC
  bool class_weighting = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // optional early exit once validation reaches both targets (0 disables)
  double target_val_acc = 0.0;
  double target_val_auc = 0.0;

  void validate() const {
    if (!(lr >= 0)) throw ConfigError("train: lr must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
      throw ConfigError("train: betas must lie in [0,1)");
    }
    if (adam_eps <= 0) throw ConfigError("train: adam eps must be positive");
    if (l2 < 0) throw ConfigError("train: l2 must be >= 0");
  }
};

// Canonical Adam with bias correction on one parameter tensor.
template <typename T>
void adam_update(std::vector<T>& param, const std::vector<T>& grad,
                 std::vector<T>& m, std::vector<T>& v, long step, double lr,
                 double beta1, double beta2, double eps) {
  if (param.size() != grad.size() || param.size() != m.size() ||
      param.size() != v.size()) {
    throw ContractError("adam_update: state extents do not match parameter");
  }
  const double bc1 = 1.0 - std::pow(beta1, double(step));
  const double bc2 = 1.0 - std::pow(beta2, double(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = double(grad[i]);
    const double mi = beta1 * double(m[i]) + (1.0 - beta1) * g;
    const double vi = beta2 * double(v[i]) + (1.0 - beta2) * g * g;
    m[i] = T(mi);
    v[i] = T(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    param[i] -= T(lr * mhat / (std::sqrt(vhat) + eps));
  }
}

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  long step = 0;

  template <typename Params>
  static AdamState for_parameters(const Params& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.tensor.size(), T(0));
      s.v.emplace_back(p.tensor.size(), T(0));
    }
    return s;
  }
};

// One optimizer step over the whole registry; grads are read from the
// parameters' accumulated gradients and then cleared.
template <typename T>
void adam_step(std::vector<typename AcitModel<T>::NamedParam>& params,
               AdamState<T>& state, const TrainConfig& tc) {
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params[i].tensor;
    if (!t.has_grad()) continue;
    adam_update(t.values(), t.grad(), state.m[i], state.v[i], state.step,
                tc.lr, tc.beta1, tc.beta2, tc.adam_eps);
  }
  for (auto& p : params) p.tensor.zero_grad();
}

// ---------------------------------------------------------------------------
// scoring and evaluation

template <typename T>
std::pair<std::vector<double>, std::vector<int>> score_clips(
    const AcitModel<T>& model, const std::vector<ClipSample<T>>& clips) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(clips.size());
  labels.reserve(clips.size());
  for (const auto& c : clips) {
    RunContext<T> ctx;  // eval mode
    const T logit = model.forward(c.input, ctx).item();
    scores.push_back(double(sigmoid_value(logit)));
    labels.push_back(c.label);
  }
  return {scores, labels};
}

template <typename T>
MetricsReport evaluate(const AcitModel<T>& model,
                       const std::vector<ClipSample<T>>& clips) {
  auto [scores, labels] = score_clips(model, clips);
  return compute_metrics(scores, labels);
}

template <typename T>
std::vector<ClipSample<T>> load_split(const std::string& root,
                                      const DatasetManifest& manifest,
                                      const std::string& split,
                                      const GenConfig& gen_cfg,
                                      std::size_t limit = 0) {
  std::vector<ClipSample<T>> out;
  for (const ClipRecord* rec : manifest.split(split)) {
    if (limit && out.size() >= limit) break;
    out.push_back(load_clip<T>(root, *rec, gen_cfg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// training loop

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  MetricsReport val;
};

struct TrainResult {
  std::vector<EpochRow> log;
  int best_epoch = 0;
  MetricsReport best_val;
  std::pair<double, double> weights{1.0, 1.0};  // applied (w_pos, w_neg)
};

// Deterministic minibatch training: fixed shuffle and dropout streams from
// the seed, gradient accumulation in sample order, weighted BCE plus the L2
// penalty on the head weights. Keeps the best-validation-AUC parameters.
template <typename T>
TrainResult train(AcitModel<T>& model, std::vector<ClipSample<T>>& train_clips,
                  const std::vector<ClipSample<T>>& val_clips,
                  const TrainConfig& tc, std::ostream* progress = nullptr) {
  tc.validate();
  if (train_clips.empty() || val_clips.empty()) {
    throw ConfigError("train: train and val splits must both be nonempty");
  }

  // class weights from the training split
  std::size_t n_pos = 0;
  for (const auto& c : train_clips) n_pos += std::size_t(c.label);
  const std::size_t n_neg = train_clips.size() - n_pos;
  TrainResult result;
  if (tc.class_weighting) {
    result.weights = class_weights(n_pos, n_neg);
  }
  const T w_pos = T(result.weights.first);
  const T w_neg = T(result.weights.second);

  // speed standardization from the training split
  double mean = 0.0;
  std::size_t count = 0;
  for (const auto& c : train_clips) {
    for (T v : c.input.motion.speed.values()) {
      mean += double(v);
      ++count;
    }
  }
  mean /= double(count);
  double var = 0.0;
  for (const auto& c : train_clips) {
    for (T v : c.input.motion.speed.values()) {
      var += (double(v) - mean) * (double(v) - mean);
    }
  }
  var /= double(count);
  model.norm.speed_mean = mean;
  model.norm.speed_std = std::max(std::sqrt(var), 1e-6);

  auto params = model.parameters();
  auto adam = AdamState<T>::for_parameters(params);
  std::vector<std::size_t> head_weight_ids;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].head_weight) head_weight_ids.push_back(i);
  }

  const std::uint64_t shuffle_seed = CounterRng::derive(tc.seed, "shuffle");
  const std::uint64_t dropout_seed = CounterRng::derive(tc.seed, "dropout");

  std::vector<std::vector<T>> best_values;
  double best_auc = -1.0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_clips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= int(tc.epochs); ++epoch) {
    CounterRng shuffle_rng(CounterRng::derive(shuffle_seed, std::uint64_t(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
    }

    double loss_sum = 0.0;
    std::size_t global_index = 0;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += tc.batch_size) {
      const std::size_t batch_end =
          std::min(batch_start + tc.batch_size, order.size());
      const T inv_batch = T(1.0 / double(batch_end - batch_start));
      for (std::size_t k = batch_start; k < batch_end; ++k, ++global_index) {
        auto& clip = train_clips[order[k]];
        RunContext<T> ctx;
        ctx.training = true;
        ctx.dropout_rng = CounterRng(CounterRng::derive(
            dropout_seed, (std::uint64_t(epoch) << 32) + global_index));
        auto logit = model.forward(clip.input, ctx);
        auto loss = weighted_bce(logit, clip.label, w_pos, w_neg);
        const double loss_value = double(loss.item());
        if (!std::isfinite(loss_value)) {
          throw NumericError("train: non-finite loss in epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(batch_start / tc.batch_size) +
                             ", clip " + clip.clip_id);
        }
        loss_sum += loss_value;
        backward(scale(loss, inv_batch));
      }
      if (tc.l2 > 0) {
        Tensor<T> penalty;
        for (std::size_t id : head_weight_ids) {
          auto sq = sum_squares(params[id].tensor);
          penalty = penalty.defined() ? add(penalty, sq) : sq;
        }
        if (penalty.defined()) backward(scale(penalty, T(tc.l2)));
      }
      adam_step<T>(params, adam, tc);
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / double(train_clips.size());
    row.val = evaluate(model, val_clips);
    result.log.push_back(row);
    if (progress) {
      *progress << "epoch " << epoch << " loss " << row.train_loss
                << " val_acc " << MetricsReport::fmt(row.val.acc) << " val_auc "
                << MetricsReport::fmt(row.val.auc) << "\n";
    }

    const double auc = row.val.auc.value_or(-1.0);
    if (auc > best_auc) {
      best_auc = auc;
      result.best_epoch = epoch;
      result.best_val = row.val;
      best_values.clear();
      for (auto& p : params) best_values.push_back(p.tensor.values());
      since_best = 0;
    } else {
      ++since_best;
    }
    const bool targets_met =
        tc.target_val_acc > 0 && tc.target_val_auc > 0 &&
        row.val.acc.value_or(0) >= tc.target_val_acc &&
        row.val.auc.value_or(0) >= tc.target_val_auc;
    if (since_best >= tc.patience || targets_met) break;
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].tensor.values() = best_values[i];
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// ablation runner and profiling

struct AblationRow {
  Variant variant = Variant::full;
  MetricsReport metrics;
  std::size_t parameter_count = 0;
};

// Trains all six variants from one base config under one seed; every
// variant consumes identical batches in identical order.
template <typename T>
std::vector<AblationRow> run_ablation(const ModelConfig& base_cfg,
                                      std::vector<ClipSample<T>>& train_clips,
                                      const std::vector<ClipSample<T>>& val_clips,
                                      const TrainConfig& tc,
                                      std::ostream* progress = nullptr) {
  std::vector<AblationRow> rows;
  for (Variant v : {Variant::full, Variant::v1, Variant::v2, Variant::v3,
                    Variant::v4, Variant::v5}) {
    ModelConfig cfg = base_cfg;
    cfg.variant = v;
    AcitModel<T> model;
    try {
      model = AcitModel<T>::build(cfg, tc.seed);
    } catch (const Error& e) {
      throw ConfigError("ablation: variant " + variant_name(v) +
                        " failed to construct: " + e.what());
    }
    if (progress) *progress << "[ablate] training " << variant_name(v) << "\n";
    train(model, train_clips, val_clips, tc, progress);
    AblationRow row;
    row.variant = v;
    row.metrics = evaluate(model, val_clips);
    row.parameter_count = model.parameter_count();
    rows.push_back(row);
  }
  return rows;
}

struct ProfileReport {
  double median_ms = 0.0;
  std::size_t parameter_count = 0;
  std::size_t runs = 0;
};

// Median per-clip forward wall time over `runs` passes after warm-up.
template <typename T>
ProfileReport profile(AcitModel<T>& model, const ClipSample<T>& sample,
                      std::size_t runs = 100) {
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < 3; ++i) {
    RunContext<T> ctx;
    (void)model.forward(sample.input, ctx);
  }
  std::vector<double> times;
  times.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    RunContext<T> ctx;
    const auto t0 = clock::now();
    (void)model.forward(sample.input, ctx);
    const auto t1 = clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  ProfileReport r;
  r.median_ms = times[times.size() / 2];
  r.parameter_count = model.parameter_count();
  r.runs = runs;
  return r;
}

// ---------------------------------------------------------------------------
// CSV outputs (stable formatting; identical runs give identical bytes)

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_opt(const std::optional<double>& v) {
  return v ? csv_num(*v) : "nan";
}

inline void write_epoch_csv(const std::string& path,
                            const std::vector<EpochRow>& log) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write epoch log: " + path);
  f << "epoch,train_loss,val_acc,val_auc,val_f1,val_precision,val_recall\n";
  for (const auto& row : log) {
    f << row.epoch << ',' << csv_num(row.train_loss) << ','
      << csv_opt(row.val.acc) << ',' << csv_opt(row.val.auc) << ','
      << csv_opt(row.val.f1) << ',' << csv_opt(row.val.precision) << ','
      << csv_opt(row.val.recall) << '\n';
  }
}

inline void write_metrics_csv(const std::string& path, const MetricsReport& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write metrics: " + path);
  f << "acc,auc,f1,precision,recall,tp,fp,tn,fn\n";
  f << csv_opt(m.acc) << ',' << csv_opt(m.auc) << ',' << csv_opt(m.f1) << ','
    << csv_opt(m.precision) << ',' << csv_opt(m.recall) << ',' << m.tp << ','
    << m.fp << ',' << m.tn << ',' << m.fn << '\n';
}

inline void write_ablation_csv(const std::string& path,
                               const std::vector<AblationRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write ablation table: " + path);
  f << "variant,acc,auc,f1,precision,recall,parameters\n";
  for (const auto& r : rows) {
    f << variant_name(r.variant) << ',' << csv_opt(r.metrics.acc) << ','
      << csv_opt(r.metrics.auc) << ',' << csv_opt(r.metrics.f1) << ','
      << csv_opt(r.metrics.precision) << ',' << csv_opt(r.metrics.recall)
      << ',' << r.parameter_count << '\n';
  }
}

}  // namespace acit
