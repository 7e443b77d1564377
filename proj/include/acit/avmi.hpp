#pragma once

#include <vector>

#include "acit/attention.hpp"
#include "acit/ops.hpp"
#include "acit/tensor.hpp"

namespace acit {

// Visual interaction pair parameters: channel reductions for the primary and
// auxiliary feature maps, single-head projections for the self-attention and
// flow-guided paths, and the learnable residual gate.
template <typename T>
struct DualPathParams {
  Tensor<T> reduce_primary;  // [C, d_tok]
  Tensor<T> reduce_aux;      // [C, d_tok]
  Tensor<T> sa_q, sa_k, sa_v;  // [d_tok, d_tok], self-attention path
  Tensor<T> ga_q, ga_k, ga_v;  // [d_tok, d_tok], flow-guided path
  Tensor<T> alpha;             // [1], scales the guided path
};

enum class AvmiMode {
  dual_path,  // full architecture
  pool_add,   // ablation: per-map average pooling, then addition
};

// 1x1 convolution over channels: position-wise [N,g,g,C] . [C,d] -> [N,g,g,d]
template <typename T>
Tensor<T> reduce_channels(const Tensor<T>& fmap, const Tensor<T>& w) {
  if (fmap.rank() != 4 || w.rank() != 2 || fmap.shape()[3] != w.shape()[0]) {
    throw DimensionError("reduce_channels: channel extents differ, fmap " +
                         shape_str(fmap.shape()) + " vs w " +
                         shape_str(w.shape()));
  }
  const auto& s = fmap.shape();
  auto flat = reshape(fmap, {s[0] * s[1] * s[2], s[3]});
  return reshape(matmul(flat, w), {s[0], s[1], s[2], w.shape()[1]});
}

// One feature-map step flattened row-major into g*g tokens, plus the
// sinusoidal position table over token index.
template <typename T>
Tensor<T> tokenize(const Tensor<T>& fmap_step, const Tensor<T>& pos_table) {
  if (fmap_step.rank() != 3 || fmap_step.shape()[0] != fmap_step.shape()[1]) {
    throw DimensionError("tokenize: need a square (g,g,d) step, got " +
                         shape_str(fmap_step.shape()));
  }
  const std::size_t g = fmap_step.shape()[0], d = fmap_step.shape()[2];
  if (pos_table.shape() != Shape{g * g, d}) {
    throw DimensionError("tokenize: position table " +
                         shape_str(pos_table.shape()) + " does not match " +
                         std::to_string(g * g) + " tokens of width " +
                         std::to_string(d));
  }
  return add(reshape(fmap_step, {g * g, d}), pos_table);
}

template <typename T>
Tensor<T> tokenize(const Tensor<T>& fmap_step) {
  if (fmap_step.rank() != 3) {
    throw DimensionError("tokenize: need a (g,g,d) step, got " +
                         shape_str(fmap_step.shape()));
  }
  const std::size_t g = fmap_step.shape()[0], d = fmap_step.shape()[2];
  return tokenize(fmap_step, positional_encoding<T>(g * g, d));
}

// Dual-path attention over one step's token sequences. The self-attention
// result joins the primary tokens as a residual; the flow-guided result is
// scaled by alpha and added on top. Both query projections read the original
// primary tokens.
template <typename T>
Tensor<T> dual_path(const Tensor<T>& primary_tokens,
                    const Tensor<T>& aux_tokens, const DualPathParams<T>& p) {
  detail::require_same_shape(primary_tokens, aux_tokens, "dual_path");
  auto sa_out = sdpa(matmul(primary_tokens, p.sa_q),
                     matmul(primary_tokens, p.sa_k),
                     matmul(primary_tokens, p.sa_v));
  auto after_sa = add(primary_tokens, sa_out);
  auto ga_out = sdpa(matmul(primary_tokens, p.ga_q),
                     matmul(aux_tokens, p.ga_k), matmul(aux_tokens, p.ga_v));
  return add(after_sa, gate(ga_out, p.alpha));
}

// Global average pooling over the token axis: [N,g*g,d] -> [N,d].
template <typename T>
Tensor<T> pool_pair(const Tensor<T>& tokens_seq) {
  return mean_axis1(tokens_seq);
}

// Full visual-pair interaction: reduce channels, tokenize each step, run
// dual-path attention per step, pool tokens to one vector per step.
// pool_add mode instead averages each reduced map independently and sums.
template <typename T>
Tensor<T> avmi_forward(const Tensor<T>& primary, const Tensor<T>& aux,
                       const DualPathParams<T>& p,
                       AvmiMode mode = AvmiMode::dual_path) {
  if (primary.rank() != 4 || aux.rank() != 4 ||
      primary.shape() != aux.shape()) {
    throw ConfigError("avmi_forward: modality pairing mismatch, primary " +
                      shape_str(primary.shape()) + " vs aux " +
                      shape_str(aux.shape()));
  }
  const std::size_t n = primary.shape()[0];
  const std::size_t g = primary.shape()[1];
  auto reduced_p = reduce_channels(primary, p.reduce_primary);
  auto reduced_a = reduce_channels(aux, p.reduce_aux);
  const std::size_t d = reduced_p.shape()[3];

  if (mode == AvmiMode::pool_add) {
    auto pooled_p = mean_axis1(reshape(reduced_p, {n, g * g, d}));
    auto pooled_a = mean_axis1(reshape(reduced_a, {n, g * g, d}));
    return add(pooled_p, pooled_a);
  }

  auto pos_table = positional_encoding<T>(g * g, d);
  std::vector<Tensor<T>> steps;
  steps.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto tok_p = tokenize(row(reduced_p, t), pos_table);
    auto tok_a = tokenize(row(reduced_a, t), pos_table);
    steps.push_back(dual_path(tok_p, tok_a, p));
  }
  return pool_pair(stack(steps));
}

}  // namespace acit
