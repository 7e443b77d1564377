#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "acit/rng.hpp"
#include "acit/tensor.hpp"

namespace acit {

namespace detail {

// C[m,n] (+)= A[m,k] . B[k,n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, T(0));
    const T* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const T ail = ai[l];
      const T* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
}

// C[m,n] (+)= A[m,k] . B[n,k]^T  (rows of B are the contraction vectors)
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      if (accumulate) {
        ci[j] += acc;
      } else {
        ci[j] = acc;
      }
    }
  }
}

// C[k,n] (+)= A[m,k]^T . B[m,n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + k * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const T ail = ai[l];
      T* cl = c + l * n;
      for (std::size_t j = 0; j < n; ++j) cl[j] += ail * bi[j];
    }
  }
}

template <typename T>
std::shared_ptr<Node<T>> make_result(const char* op, Shape shape,
                                     std::vector<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  return n;
}

template <typename T>
void attach(const std::shared_ptr<Node<T>>& out,
            std::vector<std::shared_ptr<Node<T>>> parents,
            std::function<void(Node<T>&)> fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (!rg) return;
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backward_fn = std::move(fn);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> v(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
  auto out = detail::make_result("add", a.shape(), std::move(v));
  detail::attach<T>(out, {a.node(), b.node()}, [](Node<T>& self) {
    const auto& g = self.grad;
    for (int side = 0; side < 2; ++side) {
      auto& p = self.parents[side];
      if (!p->requires_grad) continue;
      auto& pg = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> v(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] - bv[i];
  auto out = detail::make_result("sub", a.shape(), std::move(v));
  detail::attach<T>(out, {a.node(), b.node()}, [](Node<T>& self) {
    const auto& g = self.grad;
    if (self.parents[0]->requires_grad) {
      auto& pg = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& pg = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] -= g[i];
    }
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> v(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  auto out = detail::make_result("mul", a.shape(), std::move(v));
  detail::attach<T>(out, {a.node(), b.node()}, [](Node<T>& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      auto& pg = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * bv[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& pg = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * av[i];
    }
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> v(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * c;
  auto out = detail::make_result("scale", a.shape(), std::move(v));
  detail::attach<T>(out, {a.node()}, [c](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * c;
  });
  return Tensor<T>(out);
}

// out = s[0] * a, with s a trainable one-element tensor (the residual gate).
template <typename T>
Tensor<T> gate(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.size() != 1) {
    throw ContractError("gate: gate tensor must hold exactly one scalar, got " +
                        shape_str(s.shape()));
  }
  const T sv = s[0];
  std::vector<T> v(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * sv;
  auto out = detail::make_result("gate", a.shape(), std::move(v));
  detail::attach<T>(out, {a.node(), s.node()}, [sv](Node<T>& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    if (self.parents[0]->requires_grad) {
      auto& pg = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * sv;
    }
    if (self.parents[1]->requires_grad) {
      auto& sg = self.parents[1]->grad_buffer();
      T acc = T(0);
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      sg[0] += acc;
    }
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}

// ---------------------------------------------------------------------------
// matrix products (batched over equal leading extents)

namespace detail {

struct MatLayout {
  std::size_t batch, m, k, n;
};

template <typename T>
MatLayout matmul_layout(const Tensor<T>& a, const Tensor<T>& b, bool nt,
                        const char* op) {
  if (a.rank() < 2 || b.rank() < 2 || a.rank() != b.rank()) {
    throw DimensionError(std::string(op) + ": ranks must match and be >= 2, got " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t r = a.rank();
  for (std::size_t i = 0; i + 2 < r; ++i) {
    if (a.shape()[i] != b.shape()[i]) {
      throw DimensionError(std::string(op) + ": batch extents differ, " +
                           shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
  }
  MatLayout L{};
  L.batch = 1;
  for (std::size_t i = 0; i + 2 < r; ++i) L.batch *= a.shape()[i];
  L.m = a.shape()[r - 2];
  L.k = a.shape()[r - 1];
  const std::size_t bk = nt ? b.shape()[r - 1] : b.shape()[r - 2];
  L.n = nt ? b.shape()[r - 2] : b.shape()[r - 1];
  if (bk != L.k) {
    throw DimensionError(std::string(op) + ": inner extents differ, " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  return L;
}

}  // namespace detail

// a[..,m,k] . b[..,k,n] -> [..,m,n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto L = detail::matmul_layout(a, b, false, "matmul");
  Shape os(a.shape().begin(), a.shape().end() - 1);
  os.back() = L.m;
  os.push_back(L.n);
  std::vector<T> v(L.batch * L.m * L.n);
  for (std::size_t bi = 0; bi < L.batch; ++bi) {
    detail::gemm_nn(a.values().data() + bi * L.m * L.k,
                    b.values().data() + bi * L.k * L.n, v.data() + bi * L.m * L.n,
                    L.m, L.k, L.n, false);
  }
  auto out = detail::make_result("matmul", std::move(os), std::move(v));
  detail::attach<T>(out, {a.node(), b.node()}, [L](Node<T>& self) {
    const T* g = self.grad.data();
    const auto& an = self.parents[0];
    const auto& bn = self.parents[1];
    for (std::size_t bi = 0; bi < L.batch; ++bi) {
      const T* gb = g + bi * L.m * L.n;
      if (an->requires_grad) {
        detail::gemm_nt(gb, bn->value.data() + bi * L.k * L.n,
                        an->grad_buffer().data() + bi * L.m * L.k, L.m, L.n, L.k,
                        true);
      }
      if (bn->requires_grad) {
        detail::gemm_tn(an->value.data() + bi * L.m * L.k, gb,
                        bn->grad_buffer().data() + bi * L.k * L.n, L.m, L.k, L.n,
                        true);
      }
    }
  });
  return Tensor<T>(out);
}

// a[..,m,k] . b[..,n,k]^T -> [..,m,n]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  const auto L = detail::matmul_layout(a, b, true, "matmul_nt");
  Shape os(a.shape().begin(), a.shape().end() - 1);
  os.back() = L.m;
  os.push_back(L.n);
  std::vector<T> v(L.batch * L.m * L.n);
  for (std::size_t bi = 0; bi < L.batch; ++bi) {
    detail::gemm_nt(a.values().data() + bi * L.m * L.k,
                    b.values().data() + bi * L.n * L.k, v.data() + bi * L.m * L.n,
                    L.m, L.k, L.n, false);
  }
  auto out = detail::make_result("matmul_nt", std::move(os), std::move(v));
  detail::attach<T>(out, {a.node(), b.node()}, [L](Node<T>& self) {
    const T* g = self.grad.data();
    const auto& an = self.parents[0];
    const auto& bn = self.parents[1];
    for (std::size_t bi = 0; bi < L.batch; ++bi) {
      const T* gb = g + bi * L.m * L.n;
      if (an->requires_grad) {
        // dA = G . B
        detail::gemm_nn(gb, bn->value.data() + bi * L.n * L.k,
                        an->grad_buffer().data() + bi * L.m * L.k, L.m, L.n, L.k,
                        true);
      }
      if (bn->requires_grad) {
        // dB = G^T . A
        detail::gemm_tn(gb, an->value.data() + bi * L.m * L.k,
                        bn->grad_buffer().data() + bi * L.n * L.k, L.m, L.n, L.k,
                        true);
      }
    }
  });
  return Tensor<T>(out);
}

// x[..,k] . w[k,n] + b[n]; rows of x are flattened leading extents
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b) {
  if (x.rank() < 1 || w.rank() != 2) {
    throw DimensionError("linear: need x rank >= 1 and 2-d w, got " +
                         shape_str(x.shape()) + " and " + shape_str(w.shape()));
  }
  const std::size_t k = x.shape().back();
  if (k != w.shape()[0]) {
    throw DimensionError("linear: inner extents differ, x " +
                         shape_str(x.shape()) + " vs w " + shape_str(w.shape()));
  }
  const std::size_t n = w.shape()[1];
  const std::size_t rows = x.size() / std::max<std::size_t>(k, 1);
  if (b && (b->rank() != 1 || b->shape()[0] != n)) {
    throw DimensionError("linear: bias shape " + shape_str(b->shape()) +
                         " does not match output width " + std::to_string(n));
  }
  std::vector<T> v(rows * n);
  detail::gemm_nn(x.values().data(), w.values().data(), v.data(), rows, k, n,
                  false);
  if (b) {
    const auto& bv = b->values();
    for (std::size_t r = 0; r < rows; ++r) {
      T* vr = v.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) vr[j] += bv[j];
    }
  }
  Shape os(x.shape());
  os.back() = n;
  auto out = detail::make_result("linear", std::move(os), std::move(v));
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), w.node()};
  if (b) parents.push_back(b->node());
  detail::attach<T>(out, std::move(parents), [rows, k, n](Node<T>& self) {
    const T* g = self.grad.data();
    const auto& xn = self.parents[0];
    const auto& wn = self.parents[1];
    if (xn->requires_grad) {
      detail::gemm_nt(g, wn->value.data(), xn->grad_buffer().data(), rows, n, k,
                      true);
    }
    if (wn->requires_grad) {
      detail::gemm_tn(xn->value.data(), g, wn->grad_buffer().data(), rows, k, n,
                      true);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      auto& bg = self.parents[2]->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g + r * n;
        for (std::size_t j = 0; j < n; ++j) bg[j] += gr[j];
      }
    }
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w) {
  return linear(x, w, static_cast<const Tensor<T>*>(nullptr));
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return linear(x, w, &b);
}

// ---------------------------------------------------------------------------
// normalization and activations

// softmax over the last axis, max-subtracted for stability
template <typename T>
Tensor<T> softmax_last(const Tensor<T>& x) {
  if (x.rank() < 1 || x.shape().back() == 0) {
    throw DimensionError("softmax_last: empty last axis in " +
                         shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.size() / d;
  std::vector<T> v(x.size());
  const auto& xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T* vr = v.data() + r * d;
    T mx = xr[0];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      vr[j] = std::exp(xr[j] - mx);
      sum += vr[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < d; ++j) vr[j] *= inv;
  }
  auto out = detail::make_result("softmax_last", x.shape(), std::move(v));
  detail::attach<T>(out, {x.node()}, [d, rows](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    const auto& s = self.value;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* gr = g.data() + r * d;
      const T* sr = s.data() + r * d;
      T dot = T(0);
      for (std::size_t j = 0; j < d; ++j) dot += gr[j] * sr[j];
      T* pgr = pg.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) pgr[j] += (gr[j] - dot) * sr[j];
    }
  });
  return Tensor<T>(out);
}

// per-slice standardization over the last axis, then gain/bias
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps) {
  if (x.rank() < 1 || x.shape().back() < 2) {
    throw DimensionError(
        "layer_norm: last axis must have extent >= 2, got " +
        shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) +
                         " / bias " + shape_str(bias.shape()) +
                         " must both be (" + std::to_string(d) + ")");
  }
  if (!(eps > T(0))) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t rows = x.size() / d;
  std::vector<T> v(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(rows);
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T mean = T(0);
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      const T c = xr[j] - mean;
      var += c * c;
    }
    var /= T(d);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    T* hr = xhat.data() + r * d;
    T* vr = v.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mean) * inv;
      vr[j] = gv[j] * hr[j] + bv[j];
    }
  }
  auto out = detail::make_result("layer_norm", x.shape(), std::move(v));
  detail::attach<T>(
      out, {x.node(), gain.node(), bias.node()},
      [d, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Node<T>& self) {
        const auto& g = self.grad;
        const auto& gv = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
          auto& xg = self.parents[0]->grad_buffer();
          std::vector<T> ghat(d);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.data() + r * d;
            const T* hr = xhat.data() + r * d;
            T m1 = T(0), m2 = T(0);
            for (std::size_t j = 0; j < d; ++j) {
              ghat[j] = gr[j] * gv[j];
              m1 += ghat[j];
              m2 += ghat[j] * hr[j];
            }
            m1 /= T(d);
            m2 /= T(d);
            T* xgr = xg.data() + r * d;
            const T inv = inv_std[r];
            for (std::size_t j = 0; j < d; ++j) {
              xgr[j] += inv * (ghat[j] - m1 - hr[j] * m2);
            }
          }
        }
        if (self.parents[1]->requires_grad) {
          auto& gg = self.parents[1]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.data() + r * d;
            const T* hr = xhat.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * hr[j];
          }
        }
        if (self.parents[2]->requires_grad) {
          auto& bg = self.parents[2]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) bg[j] += gr[j];
          }
        }
      });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> v(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] > T(0) ? xv[i] : T(0);
  auto out = detail::make_result("relu", x.shape(), std::move(v));
  detail::attach<T>(out, {x.node()}, [](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& xv = self.parents[0]->value;
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) pg[i] += g[i];
    }
  });
  return Tensor<T>(out);
}

// exact erf-based GELU
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kInvSqrt2 = T(0.7071067811865475244);
  std::vector<T> v(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * kInvSqrt2));
  }
  auto out = detail::make_result("gelu", x.shape(), std::move(v));
  detail::attach<T>(out, {x.node()}, [](Node<T>& self) {
    constexpr T kInvSqrt2Pi = T(0.3989422804014326779);
    auto& pg = self.parents[0]->grad_buffer();
    const auto& xv = self.parents[0]->value;
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T xi = xv[i];
      const T cdf = T(0.5) * (T(1) + std::erf(xi * T(0.7071067811865475244)));
      const T pdf = std::exp(T(-0.5) * xi * xi) * kInvSqrt2Pi;
      pg[i] += g[i] * (cdf + xi * pdf);
    }
  });
  return Tensor<T>(out);
}

// Inverted dropout: keep with probability 1-p and scale kept values by
// 1/(1-p); identity when not training. The mask always consumes one stream
// value per element so the stream position does not depend on grad flags.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, CounterRng& rng,
                  bool training) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout: probability must lie in [0,1), got " +
                      std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - p));
  std::vector<T> mask(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() >= p ? keep_scale : T(0);
  }
  std::vector<T> v(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] * mask[i];
  auto out = detail::make_result("dropout", x.shape(), std::move(v));
  detail::attach<T>(out, {x.node()}, [mask = std::move(mask)](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * mask[i];
  });
  return Tensor<T>(out);
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.values()) acc += v;
  auto out = detail::make_result("sum", Shape{1}, std::vector<T>{acc});
  detail::attach<T>(out, {x.node()}, [](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const T g0 = self.grad[0];
    for (auto& v : pg) v += g0;
  });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> sum_squares(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.values()) acc += v * v;
  auto out = detail::make_result("sum_squares", Shape{1}, std::vector<T>{acc});
  detail::attach<T>(out, {x.node()}, [](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& xv = self.parents[0]->value;
    const T g0 = self.grad[0];
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += T(2) * xv[i] * g0;
  });
  return Tensor<T>(out);
}

// mean over the leading axis of a 2-d tensor: [L,d] -> [d]
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
  if (x.rank() != 2 || x.shape()[0] == 0) {
    throw DimensionError("mean_rows: need nonempty 2-d input, got " +
                         shape_str(x.shape()));
  }
  const std::size_t L = x.shape()[0], d = x.shape()[1];
  std::vector<T> v(d, T(0));
  const auto& xv = x.values();
  for (std::size_t i = 0; i < L; ++i) {
    const T* xr = xv.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) v[j] += xr[j];
  }
  const T inv = T(1) / T(L);
  for (auto& e : v) e *= inv;
  auto out = detail::make_result("mean_rows", Shape{d}, std::move(v));
  detail::attach<T>(out, {x.node()}, [L, d, inv](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < L; ++i) {
      T* pr = pg.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) pr[j] += g[j] * inv;
    }
  });
  return Tensor<T>(out);
}

// mean over the middle axis of a 3-d tensor: [A,B,d] -> [A,d]
template <typename T>
Tensor<T> mean_axis1(const Tensor<T>& x) {
  if (x.rank() != 3 || x.shape()[1] == 0) {
    throw DimensionError("mean_axis1: need 3-d input with nonempty middle axis, got " +
                         shape_str(x.shape()));
  }
  const std::size_t A = x.shape()[0], B = x.shape()[1], d = x.shape()[2];
  std::vector<T> v(A * d, T(0));
  const auto& xv = x.values();
  for (std::size_t a = 0; a < A; ++a) {
    T* va = v.data() + a * d;
    for (std::size_t b = 0; b < B; ++b) {
      const T* xr = xv.data() + (a * B + b) * d;
      for (std::size_t j = 0; j < d; ++j) va[j] += xr[j];
    }
  }
  const T inv = T(1) / T(B);
  for (auto& e : v) e *= inv;
  auto out = detail::make_result("mean_axis1", Shape{A, d}, std::move(v));
  detail::attach<T>(out, {x.node()}, [A, B, d, inv](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t a = 0; a < A; ++a) {
      const T* ga = g.data() + a * d;
      for (std::size_t b = 0; b < B; ++b) {
        T* pr = pg.data() + (a * B + b) * d;
        for (std::size_t j = 0; j < d; ++j) pr[j] += ga[j] * inv;
      }
    }
  });
  return Tensor<T>(out);
}

// ---------------------------------------------------------------------------
// structure: slicing, stacking, concatenation, reshape

// slice index i off the leading axis: [A, rest...] -> [rest...]
template <typename T>
Tensor<T> row(const Tensor<T>& x, std::size_t i) {
  if (x.rank() < 2) {
    throw DimensionError("row: need rank >= 2, got " + shape_str(x.shape()));
  }
  if (i >= x.shape()[0]) {
    throw DimensionError("row: index " + std::to_string(i) +
                         " out of range for " + shape_str(x.shape()));
  }
  Shape os(x.shape().begin() + 1, x.shape().end());
  const std::size_t stride = shape_numel(os);
  std::vector<T> v(x.values().begin() + i * stride,
                   x.values().begin() + (i + 1) * stride);
  auto out = detail::make_result("row", std::move(os), std::move(v));
  detail::attach<T>(out, {x.node()}, [i, stride](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    T* dst = pg.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) dst[j] += g[j];
  });
  return Tensor<T>(out);
}

// stack equal-shape tensors along a new leading axis
template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ContractError("stack: no tensors given");
  const Shape& inner = parts[0].shape();
  for (const auto& p : parts) {
    if (p.shape() != inner) {
      throw DimensionError("stack: mixed shapes " + shape_str(inner) + " vs " +
                           shape_str(p.shape()));
    }
  }
  const std::size_t stride = shape_numel(inner);
  Shape os{parts.size()};
  os.insert(os.end(), inner.begin(), inner.end());
  std::vector<T> v(parts.size() * stride);
  std::vector<std::shared_ptr<Node<T>>> parents;
  parents.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::copy(parts[i].values().begin(), parts[i].values().end(),
              v.begin() + i * stride);
    parents.push_back(parts[i].node());
  }
  auto out = detail::make_result("stack", std::move(os), std::move(v));
  detail::attach<T>(out, std::move(parents), [stride](Node<T>& self) {
    const auto& g = self.grad;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      if (!self.parents[i]->requires_grad) continue;
      auto& pg = self.parents[i]->grad_buffer();
      const T* src = g.data() + i * stride;
      for (std::size_t j = 0; j < stride; ++j) pg[j] += src[j];
    }
  });
  return Tensor<T>(out);
}

// concatenate 2-d tensors with equal column counts along the row axis
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no tensors given");
  const std::size_t d = parts[0].rank() == 2 ? parts[0].shape()[1] : 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.shape()[1] != d) {
      throw DimensionError("concat_rows: parts must be 2-d with equal columns, got " +
                           shape_str(p.shape()));
    }
    total += p.shape()[0];
  }
  std::vector<T> v;
  v.reserve(total * d);
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::vector<std::size_t> row_counts;
  for (const auto& p : parts) {
    v.insert(v.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node());
    row_counts.push_back(p.shape()[0]);
  }
  auto out = detail::make_result("concat_rows", Shape{total, d}, std::move(v));
  detail::attach<T>(out, std::move(parents),
                    [d, row_counts = std::move(row_counts)](Node<T>& self) {
                      const auto& g = self.grad;
                      std::size_t offset = 0;
                      for (std::size_t i = 0; i < self.parents.size(); ++i) {
                        const std::size_t len = row_counts[i] * d;
                        if (self.parents[i]->requires_grad) {
                          auto& pg = self.parents[i]->grad_buffer();
                          const T* src = g.data() + offset;
                          for (std::size_t j = 0; j < len; ++j) pg[j] += src[j];
                        }
                        offset += len;
                      }
                    });
  return Tensor<T>(out);
}

// concatenate 2-d tensors with equal row counts along the column axis
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no tensors given");
  const std::size_t L = parts[0].rank() == 2 ? parts[0].shape()[0] : 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.shape()[0] != L) {
      throw DimensionError("concat_cols: parts must be 2-d with equal rows, got " +
                           shape_str(p.shape()));
    }
    total += p.shape()[1];
  }
  std::vector<T> v(L * total);
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[1];
    for (std::size_t r = 0; r < L; ++r) {
      std::copy(p.values().begin() + r * w, p.values().begin() + (r + 1) * w,
                v.begin() + r * total + offset);
    }
    offset += w;
    parents.push_back(p.node());
    widths.push_back(w);
  }
  auto out = detail::make_result("concat_cols", Shape{L, total}, std::move(v));
  detail::attach<T>(out, std::move(parents),
                    [L, total, widths = std::move(widths)](Node<T>& self) {
                      const auto& g = self.grad;
                      std::size_t off = 0;
                      for (std::size_t i = 0; i < self.parents.size(); ++i) {
                        const std::size_t w = widths[i];
                        if (self.parents[i]->requires_grad) {
                          auto& pg = self.parents[i]->grad_buffer();
                          for (std::size_t r = 0; r < L; ++r) {
                            const T* src = g.data() + r * total + off;
                            T* dst = pg.data() + r * w;
                            for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                          }
                        }
                        off += w;
                      }
                    });
  return Tensor<T>(out);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("reshape: element count mismatch, " +
                         shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  auto out = detail::make_result("reshape", std::move(shape),
                                 std::vector<T>(x.values()));
  detail::attach<T>(out, {x.node()}, [](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
  });
  return Tensor<T>(out);
}

// split a [H,W,C] frame into non-overlapping p x p patches, each flattened
// row-major (row, col, channel): -> [(H/p)*(W/p), p*p*C]
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& frame, std::size_t p) {
  if (frame.rank() != 3) {
    throw DimensionError("extract_patches: need 3-d frame, got " +
                         shape_str(frame.shape()));
  }
  const std::size_t H = frame.shape()[0], W = frame.shape()[1],
                    C = frame.shape()[2];
  if (p == 0 || H % p != 0 || W % p != 0) {
    throw DimensionError("extract_patches: patch size " + std::to_string(p) +
                         " does not tile frame " + shape_str(frame.shape()));
  }
  const std::size_t gh = H / p, gw = W / p, plen = p * p * C;
  std::vector<T> v(gh * gw * plen);
  const auto& fv = frame.values();
  for (std::size_t gr = 0; gr < gh; ++gr) {
    for (std::size_t gc = 0; gc < gw; ++gc) {
      T* dst = v.data() + (gr * gw + gc) * plen;
      for (std::size_t pr = 0; pr < p; ++pr) {
        const T* src = fv.data() + ((gr * p + pr) * W + gc * p) * C;
        std::copy(src, src + p * C, dst + pr * p * C);
      }
    }
  }
  auto out = detail::make_result("extract_patches", Shape{gh * gw, plen},
                                 std::move(v));
  detail::attach<T>(out, {frame.node()}, [H, W, C, p, gh, gw, plen](Node<T>& self) {
    auto& pg = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t gr = 0; gr < gh; ++gr) {
      for (std::size_t gc = 0; gc < gw; ++gc) {
        const T* src = g.data() + (gr * gw + gc) * plen;
        for (std::size_t pr = 0; pr < p; ++pr) {
          T* dst = pg.data() + ((gr * p + pr) * W + gc * p) * C;
          const T* s = src + pr * p * C;
          for (std::size_t j = 0; j < p * C; ++j) dst[j] += s[j];
        }
      }
    }
  });
  return Tensor<T>(out);
}

// ---------------------------------------------------------------------------
// loss

namespace detail {

template <typename T>
T stable_sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
T softplus(T z) {
  // max(z,0) + log1p(exp(-|z|)), finite for any |z| a logit can reach
  const T m = z > T(0) ? z : T(0);
  return m + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace detail

// weight * (softplus(z) - label * z): binary cross-entropy on a logit,
// in log-sum-exp form so saturated logits stay finite.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logit, T label, T weight) {
  if (logit.size() != 1) {
    throw ContractError("bce_with_logits: logit must be scalar, got " +
                        shape_str(logit.shape()));
  }
  const T z = logit[0];
  const T loss = weight * (detail::softplus(z) - label * z);
  auto out = detail::make_result("bce_with_logits", Shape{1},
                                 std::vector<T>{loss});
  detail::attach<T>(out, {logit.node()}, [label, weight](Node<T>& self) {
    const T z = self.parents[0]->value[0];
    auto& pg = self.parents[0]->grad_buffer();
    pg[0] += self.grad[0] * weight * (detail::stable_sigmoid(z) - label);
  });
  return Tensor<T>(out);
}

}  // namespace acit
