#pragma once

#include "acit/attention.hpp"
#include "acit/ops.hpp"
#include "acit/tensor.hpp"

namespace acit {

// Raw motion tracks for one clip: ego speed per step and the pedestrian box
// as top-left / bottom-right pixel coordinates.
template <typename T>
struct MotionInputs {
  Tensor<T> speed;  // [N,1]
  Tensor<T> bbox;   // [N,4] = x1,y1,x2,y2
};

// Standardization constants applied before embedding; speed stats come from
// the training split, box coordinates are divided by the frame extents.
struct MotionNorm {
  double speed_mean = 0.0;
  double speed_std = 1.0;
  double frame_w = 1920.0;
  double frame_h = 1080.0;
};

template <typename T>
struct AmmiParams {
  Tensor<T> speed_w, speed_b;      // [1,d], [d]
  Tensor<T> bbox_w, bbox_b;        // [4,d], [d]
  Tensor<T> ln_speed_g, ln_speed_b;
  Tensor<T> ln_bbox_g, ln_bbox_b;
  AttentionParams<T> attn_a;       // full: Q from speed, K/V from bbox
  AttentionParams<T> attn_b;       // full: Q from bbox, K/V from speed
  Tensor<T> ln_merged_g, ln_merged_b;
  Tensor<T> ffn_w1, ffn_b1;        // [d, d_ffn]
  Tensor<T> ffn_w2, ffn_b2;        // [d_ffn, d]
};

enum class AmmiMode {
  cross,      // full architecture: bidirectional cross-modal attention
  self_add,   // ablation: per-modality self-attention, then addition
};

// Per-modality embedding into [N,d] followed by layer normalization.
// Validates and standardizes the raw tracks first.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> embed_motion(const MotionInputs<T>& in,
                                             const AmmiParams<T>& p,
                                             const MotionNorm& norm,
                                             T ln_eps = T(1e-5)) {
  if (in.speed.rank() != 2 || in.speed.shape()[1] != 1 ||
      in.bbox.rank() != 2 || in.bbox.shape()[1] != 4 ||
      in.speed.shape()[0] != in.bbox.shape()[0]) {
    throw DimensionError("embed_motion: expected (N,1) speed and (N,4) bbox, got " +
                         shape_str(in.speed.shape()) + " and " +
                         shape_str(in.bbox.shape()));
  }
  const std::size_t n = in.speed.shape()[0];
  for (std::size_t t = 0; t < n; ++t) {
    const T x1 = in.bbox[t * 4 + 0], y1 = in.bbox[t * 4 + 1];
    const T x2 = in.bbox[t * 4 + 2], y2 = in.bbox[t * 4 + 3];
    if (x1 > x2 || y1 > y2) {
      throw ValidationError("embed_motion: bbox ordering violated at step " +
                            std::to_string(t));
    }
  }

  std::vector<T> sp(n);
  for (std::size_t t = 0; t < n; ++t) {
    sp[t] = T((double(in.speed[t]) - norm.speed_mean) / norm.speed_std);
  }
  std::vector<T> bb(n * 4);
  for (std::size_t t = 0; t < n; ++t) {
    bb[t * 4 + 0] = T(double(in.bbox[t * 4 + 0]) / norm.frame_w);
    bb[t * 4 + 1] = T(double(in.bbox[t * 4 + 1]) / norm.frame_h);
    bb[t * 4 + 2] = T(double(in.bbox[t * 4 + 2]) / norm.frame_w);
    bb[t * 4 + 3] = T(double(in.bbox[t * 4 + 3]) / norm.frame_h);
  }
  auto speed_std = Tensor<T>::from_data({n, 1}, std::move(sp));
  auto bbox_std = Tensor<T>::from_data({n, 4}, std::move(bb));

  auto x_speed = layer_norm(linear(speed_std, p.speed_w, p.speed_b),
                            p.ln_speed_g, p.ln_speed_b, ln_eps);
  auto x_bbox = layer_norm(linear(bbox_std, p.bbox_w, p.bbox_b), p.ln_bbox_g,
                           p.ln_bbox_b, ln_eps);
  return {x_speed, x_bbox};
}

// The two attention branches, each a residual over its query-side input
// after dropout. In cross mode the speed-query branch attends over bbox
// values and vice versa; self_add replaces both with per-modality
// self-attention.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_modal_branches(
    const Tensor<T>& x_speed, const Tensor<T>& x_bbox, const AmmiParams<T>& p,
    std::size_t heads, double dropout_p, CounterRng& rng, bool training,
    AmmiMode mode = AmmiMode::cross) {
  detail::require_same_shape(x_speed, x_bbox, "cross_modal_block");
  Tensor<T> attn_speed_q, attn_bbox_q;
  if (mode == AmmiMode::cross) {
    attn_speed_q = mha(x_speed, x_bbox, p.attn_a, heads);
    attn_bbox_q = mha(x_bbox, x_speed, p.attn_b, heads);
  } else {
    attn_speed_q = mha(x_speed, x_speed, p.attn_a, heads);
    attn_bbox_q = mha(x_bbox, x_bbox, p.attn_b, heads);
  }
  auto branch_speed =
      add(x_speed, dropout(attn_speed_q, dropout_p, rng, training));
  auto branch_bbox =
      add(x_bbox, dropout(attn_bbox_q, dropout_p, rng, training));
  return {branch_speed, branch_bbox};
}

// Bidirectional cross-modal attention between the embedded motion tracks:
// branches sum, get normalized, then pass an FFN with its own residual.
template <typename T>
Tensor<T> cross_modal_block(const Tensor<T>& x_speed, const Tensor<T>& x_bbox,
                            const AmmiParams<T>& p, std::size_t heads,
                            double dropout_p, CounterRng& rng, bool training,
                            AmmiMode mode = AmmiMode::cross,
                            T ln_eps = T(1e-5)) {
  auto [branch_speed, branch_bbox] = cross_modal_branches(
      x_speed, x_bbox, p, heads, dropout_p, rng, training, mode);
  auto merged = add(branch_speed, branch_bbox);
  auto normed = layer_norm(merged, p.ln_merged_g, p.ln_merged_b, ln_eps);
  auto hidden = gelu(linear(normed, p.ffn_w1, p.ffn_b1));
  auto enhanced = linear(hidden, p.ffn_w2, p.ffn_b2);
  return add(enhanced, normed);
}

}  // namespace acit
