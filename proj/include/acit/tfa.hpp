#pragma once

#include <vector>

#include "acit/attention.hpp"
#include "acit/ops.hpp"
#include "acit/tensor.hpp"

namespace acit {

template <typename T>
struct EncoderLayerParams {
  AttentionParams<T> mhsa;
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> ffn_w1, ffn_b1;
  Tensor<T> ffn_w2, ffn_b2;
  Tensor<T> ln2_g, ln2_b;
};

// Classification head: one hidden layer with ReLU and dropout before the
// output unit.
template <typename T>
struct MlpHeadParams {
  Tensor<T> w1, b1;  // [d_in, hidden]
  Tensor<T> w2, b2;  // [hidden, 1]
};

template <typename T>
struct TfaParams {
  Tensor<T> cls;  // [d_model]
  std::vector<EncoderLayerParams<T>> layers;
  MlpHeadParams<T> head;
};

enum class TfaMode {
  encoder,    // full architecture: CLS + positional encoding + encoder stack
  mean_pool,  // ablation: mean over the steps, straight into the head
};

// Post-norm encoder layer: normalize after each residual join.
template <typename T>
Tensor<T> encoder_layer(const Tensor<T>& x, const EncoderLayerParams<T>& p,
                        std::size_t heads, T ln_eps = T(1e-5)) {
  auto attended = layer_norm(add(x, mha(x, x, p.mhsa, heads)), p.ln1_g,
                             p.ln1_b, ln_eps);
  auto hidden = relu(linear(attended, p.ffn_w1, p.ffn_b1));
  auto enhanced = linear(hidden, p.ffn_w2, p.ffn_b2);
  return layer_norm(add(attended, enhanced), p.ln2_g, p.ln2_b, ln_eps);
}

template <typename T>
Tensor<T> mlp_head(const Tensor<T>& summary, const MlpHeadParams<T>& p,
                   double dropout_p, CounterRng& rng, bool training) {
  auto hidden = relu(linear(summary, p.w1, p.b1));
  auto dropped = dropout(hidden, dropout_p, rng, training);
  return linear(dropped, p.w2, p.b2);  // [1]
}

// Temporal aggregation to a scalar logit. The caller applies the sigmoid.
// expected_steps pins the fused sequence length (CLS makes it length+1).
template <typename T>
Tensor<T> tfa_forward(const Tensor<T>& fused, const TfaParams<T>& p,
                      std::size_t heads, std::size_t expected_steps,
                      bool use_positional_encoding, double dropout_p,
                      CounterRng& rng, bool training,
                      TfaMode mode = TfaMode::encoder, T ln_eps = T(1e-5)) {
  if (fused.rank() != 2 || fused.shape()[0] != expected_steps) {
    throw ContractError("tfa_forward: fused sequence must have " +
                        std::to_string(expected_steps) + " steps, got " +
                        shape_str(fused.shape()));
  }
  if (mode == TfaMode::mean_pool) {
    return mlp_head(mean_rows(fused), p.head, dropout_p, rng, training);
  }
  auto x = prepend_cls(fused, p.cls);
  if (use_positional_encoding) {
    x = add(x, positional_encoding<T>(x.shape()[0], x.shape()[1]));
  }
  for (const auto& layer : p.layers) {
    x = encoder_layer(x, layer, heads, ln_eps);
  }
  return mlp_head(row(x, 0), p.head, dropout_p, rng, training);
}

// Class-weighted binary cross-entropy on a logit, in the stable
// softplus form: w(label) * (softplus(z) - label * z).
template <typename T>
Tensor<T> weighted_bce(const Tensor<T>& logit, int label, T w_pos, T w_neg) {
  if (!(w_pos > T(0)) || !(w_neg > T(0))) {
    throw ConfigError("weighted_bce: class weights must be positive");
  }
  if (label != 0 && label != 1) {
    throw ContractError("weighted_bce: label must be 0 or 1, got " +
                        std::to_string(label));
  }
  return bce_with_logits(logit, T(label), label == 1 ? w_pos : w_neg);
}

template <typename T>
T sigmoid_value(T z) {
  return detail::stable_sigmoid(z);
}

}  // namespace acit
