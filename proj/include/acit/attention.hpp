#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "acit/ops.hpp"
#include "acit/tensor.hpp"

namespace acit {

// Multi-head projection set: one q/k/v matrix triple per head plus the
// output projection applied to the concatenated heads.
template <typename T>
struct AttentionParams {
  std::vector<Tensor<T>> w_q;  // per head, [d_in, d_head]
  std::vector<Tensor<T>> w_k;
  std::vector<Tensor<T>> w_v;
  Tensor<T> w_o;  // [heads * d_head, d_model]

  std::size_t heads() const { return w_q.size(); }
};

// softmax(q k^T / sqrt(d)): the row-stochastic attention matrix
template <typename T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k) {
  const std::size_t d = q.shape().back();
  if (d == 0) throw DimensionError("attention_weights: zero feature dim");
  if (k.shape().back() != d) {
    throw DimensionError("attention_weights: feature dims differ, q " +
                         shape_str(q.shape()) + " vs k " + shape_str(k.shape()));
  }
  return softmax_last(scale(matmul_nt(q, k), T(1) / T(std::sqrt(double(d)))));
}

// scaled dot-product attention
template <typename T>
Tensor<T> sdpa(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  if (k.rank() < 2 || v.rank() < 2 ||
      k.shape()[k.rank() - 2] != v.shape()[v.rank() - 2]) {
    throw DimensionError("sdpa: key/value lengths differ, k " +
                         shape_str(k.shape()) + " vs v " + shape_str(v.shape()));
  }
  return matmul(attention_weights(q, k), v);
}

// Multi-head attention: per-head sdpa over projected inputs, heads
// concatenated along features, then the output projection.
template <typename T>
Tensor<T> mha(const Tensor<T>& x_q, const Tensor<T>& x_kv,
              const AttentionParams<T>& p, std::size_t heads) {
  const std::size_t d_model = x_q.shape().back();
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("mha: model width " + std::to_string(d_model) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  if (p.w_q.size() != heads || p.w_k.size() != heads || p.w_v.size() != heads) {
    throw ConfigError("mha: parameter set holds " +
                      std::to_string(p.w_q.size()) + " heads, expected " +
                      std::to_string(heads));
  }
  std::vector<Tensor<T>> head_outs;
  head_outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto q = matmul(x_q, p.w_q[h]);
    auto k = matmul(x_kv, p.w_k[h]);
    auto v = matmul(x_kv, p.w_v[h]);
    head_outs.push_back(sdpa(q, k, v));
  }
  return matmul(concat_cols(head_outs), p.w_o);
}

// Sinusoidal position table: pe[pos, 2i] = sin(pos / 10000^(2i/d)),
// pe[pos, 2i+1] = cos(...). Deterministic, parameter-free.
template <typename T>
Tensor<T> positional_encoding(std::size_t length, std::size_t dims) {
  if (length < 1) throw ConfigError("positional_encoding: length must be >= 1");
  if (dims == 0 || dims % 2 != 0) {
    throw ConfigError("positional_encoding: dims must be even, got " +
                      std::to_string(dims));
  }
  std::vector<T> v(length * dims);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dims / 2; ++i) {
      const double rate =
          std::pow(10000.0, double(2 * i) / double(dims));
      const double angle = double(pos) / rate;
      v[pos * dims + 2 * i] = T(std::sin(angle));
      v[pos * dims + 2 * i + 1] = T(std::cos(angle));
    }
  }
  return Tensor<T>::from_data({length, dims}, std::move(v));
}

// Places cls as row 0 in front of the sequence: [L,d] -> [L+1,d].
template <typename T>
Tensor<T> prepend_cls(const Tensor<T>& seq, const Tensor<T>& cls) {
  if (seq.rank() != 2 || cls.rank() != 1 || seq.shape()[1] != cls.shape()[0]) {
    throw DimensionError("prepend_cls: dims differ, seq " +
                         shape_str(seq.shape()) + " vs cls " +
                         shape_str(cls.shape()));
  }
  auto cls_row = reshape(cls, {1, cls.shape()[0]});
  return concat_rows<T>({cls_row, seq});
}

}  // namespace acit
