#pragma once

#include <array>
#include <vector>

#include "acit/attention.hpp"
#include "acit/ops.hpp"
#include "acit/tensor.hpp"

namespace acit {

// Inter-modal fusion parameters over the three step features
// {local visual, global visual, motion}, indexed in that order.
template <typename T>
struct MmffParams {
  std::array<Tensor<T>, 3> w_q;  // [d,d] per modality
  std::array<Tensor<T>, 3> w_k;
  std::array<Tensor<T>, 3> w_v;
  // ablation: elementwise-sum fusion, widened to the head input
  Tensor<T> sum_w;  // [d, 3d]
  Tensor<T> sum_b;  // [3d]
};

enum class MmffMode {
  inter_modal,  // full architecture
  elem_add,     // ablation: elementwise addition + learned widening
};

// 3x3 row-stochastic weight matrix over modality pairs: row i is the softmax
// over j of q_i . k_j / sqrt(d).
template <typename T>
Tensor<T> intermodal_weights(const std::array<Tensor<T>, 3>& q,
                             const std::array<Tensor<T>, 3>& k) {
  const std::size_t d = q[0].size();
  for (int i = 0; i < 3; ++i) {
    if (q[i].rank() != 1 || k[i].rank() != 1 || q[i].size() != d ||
        k[i].size() != d) {
      throw DimensionError("intermodal_weights: all six vectors must be (" +
                           std::to_string(d) + "), got q " +
                           shape_str(q[i].shape()) + " / k " +
                           shape_str(k[i].shape()));
    }
  }
  auto qm = stack<T>({q[0], q[1], q[2]});
  auto km = stack<T>({k[0], k[1], k[2]});
  return attention_weights(qm, km);
}

// One step of inter-modal refinement: project each modality feature to
// q/k/v, weight values by the 3x3 attention matrix. Returns the three
// refined vectors stacked as [3,d] in {L,G,M} order.
template <typename T>
Tensor<T> refine_step(const std::array<Tensor<T>, 3>& features,
                      const MmffParams<T>& p) {
  std::array<Tensor<T>, 3> q, k, v;
  for (int i = 0; i < 3; ++i) {
    q[i] = linear(features[i], p.w_q[i]);
    k[i] = linear(features[i], p.w_k[i]);
    v[i] = linear(features[i], p.w_v[i]);
  }
  auto weights = intermodal_weights(q, k);
  return matmul(weights, stack<T>({v[0], v[1], v[2]}));
}

// Frame-wise fusion of the three [N,d] feature sequences into [N,3d]:
// refine_step independently at each step, refined vectors concatenated.
// elem_add mode sums the three sequences and widens by an affine map.
template <typename T>
Tensor<T> mmff_forward(const Tensor<T>& feat_local, const Tensor<T>& feat_global,
                       const Tensor<T>& feat_motion, const MmffParams<T>& p,
                       MmffMode mode = MmffMode::inter_modal) {
  if (feat_local.rank() != 2 || feat_local.shape() != feat_global.shape() ||
      feat_local.shape() != feat_motion.shape()) {
    throw ContractError("mmff_forward: step-feature shapes differ: " +
                        shape_str(feat_local.shape()) + ", " +
                        shape_str(feat_global.shape()) + ", " +
                        shape_str(feat_motion.shape()));
  }
  const std::size_t n = feat_local.shape()[0];
  const std::size_t d = feat_local.shape()[1];

  if (mode == MmffMode::elem_add) {
    auto summed = add(add(feat_local, feat_global), feat_motion);
    return linear(summed, p.sum_w, p.sum_b);
  }

  std::vector<Tensor<T>> fused_rows;
  fused_rows.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::array<Tensor<T>, 3> f{row(feat_local, t), row(feat_global, t),
                               row(feat_motion, t)};
    fused_rows.push_back(reshape(refine_step(f, p), {3 * d}));
  }
  return stack(fused_rows);
}

}  // namespace acit
