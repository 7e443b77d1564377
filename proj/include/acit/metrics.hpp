#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "acit/errors.hpp"

namespace acit {

// Threshold metrics at 0.5 plus rank-based AUC. Degenerate denominators
// leave the metric unset rather than silently zero.
struct MetricsReport {
  std::optional<double> acc, auc, f1, precision, recall;
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  double per_clip_ms = 0.0;
  std::size_t parameter_count = 0;

  static std::string fmt(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  }
};

// AUC by the rank statistic with average ranks on ties (Mann-Whitney).
inline std::optional<double> rank_auc(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += std::size_t(l);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (double(i + 1) + double(j + 1)) / 2.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
  return u / (double(n_pos) * double(n_neg));
}

inline MetricsReport compute_metrics(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ContractError("compute_metrics: need equal nonempty score/label lists");
  }
  MetricsReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ContractError("compute_metrics: labels must be binary");
    }
    const bool pred = scores[i] >= 0.5;
    if (pred && labels[i] == 1) ++r.tp;
    else if (pred && labels[i] == 0) ++r.fp;
    else if (!pred && labels[i] == 0) ++r.tn;
    else ++r.fn;
  }
  const double n = double(scores.size());
  r.acc = double(r.tp + r.tn) / n;
  if (r.tp + r.fp > 0) r.precision = double(r.tp) / double(r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = double(r.tp) / double(r.tp + r.fn);
  if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  r.auc = rank_auc(scores, labels);
  return r;
}

}  // namespace acit
