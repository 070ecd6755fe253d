#pragma once

#include <cmath>
#include <cstdio>
#include <utility>

#include "pref/tensor.hpp"
#include "pref/threading.hpp"

namespace pref::ad {

// ---------------------------------------------------------------------------
// Recording helpers

namespace detail {

template <typename T>
inline void ensure_grad(TensorImpl<T>& t) {
  if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), T(0));
}

template <typename T>
void check_finite_strict(const char* op, const Tensor<T>& x) {
  if (!strict_numerics()) return;
  for (T v : x.data())
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input value");
}

template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> data,
                  std::vector<std::shared_ptr<TensorImpl<T>>> inputs,
                  std::function<void(TensorImpl<T>&)> bwd) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  bool needs_grad = false;
  if (grad_enabled())
    for (const auto& in : inputs)
      if (in->requires_grad) needs_grad = true;
  if (needs_grad) {
    impl->requires_grad = true;
    impl->op = op;
    impl->inputs = std::move(inputs);
    impl->backward_fn = std::move(bwd);
  }
  return Tensor<T>(std::move(impl));
}

// Elementwise binary ops accept equal shapes, or a right operand that
// broadcasts across the leading batch dimension of the left one:
// either rhs.shape == lhs.shape[1:], or rhs with a leading 1.
enum class BinaryMode { kSame, kBroadcastRhs };

template <typename T>
BinaryMode binary_mode(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) return BinaryMode::kSame;
  bool dropped = sb.size() + 1 == sa.size() &&
                 std::equal(sb.begin(), sb.end(), sa.begin() + 1);
  bool leading_one = sb.size() == sa.size() && !sb.empty() && sb[0] == 1 &&
                     std::equal(sb.begin() + 1, sb.end(), sa.begin() + 1);
  if (dropped || leading_one) return BinaryMode::kBroadcastRhs;
  throw ShapeError(std::string(op) + ": incompatible shapes " + format_shape(sa) + " and " +
                   format_shape(sb));
}

}  // namespace detail

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

// ---------------------------------------------------------------------------
// Elementwise binary primitives

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> binary_elementwise(const char* op, const Tensor<T>& a, const Tensor<T>& b, FwdFn fwd,
                             BwdFn bwd_pair) {
  detail::check_finite_strict(op, a);
  detail::check_finite_strict(op, b);
  const auto mode = detail::binary_mode(op, a, b);
  const std::int64_t n = a.numel();
  const std::int64_t nb = b.numel();
  std::vector<T> out(static_cast<std::size_t>(n));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.data();
  if (mode == detail::BinaryMode::kSame) {
    parallel_for(0, n, 1 << 14, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) po[i] = fwd(pa[i], pb[i]);
    });
  } else {
    parallel_for(0, n, 1 << 14, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) po[i] = fwd(pa[i], pb[i % nb]);
    });
  }
  auto bwd = [mode, bwd_pair](TensorImpl<T>& self) {
    auto& a_in = *self.inputs[0];
    auto& b_in = *self.inputs[1];
    const std::int64_t n = static_cast<std::int64_t>(self.data.size());
    const std::int64_t nb = static_cast<std::int64_t>(b_in.data.size());
    const T* g = self.grad.data();
    if (a_in.requires_grad) {
      detail::ensure_grad(a_in);
      T* ga = a_in.grad.data();
      const T* pa = a_in.data.data();
      const T* pb = b_in.data.data();
      for (std::int64_t i = 0; i < n; ++i) {
        auto d = bwd_pair(pa[i], pb[mode == detail::BinaryMode::kSame ? i : i % nb]);
        ga[i] += g[i] * d.first;
      }
    }
    if (b_in.requires_grad) {
      detail::ensure_grad(b_in);
      T* gb = b_in.grad.data();
      const T* pa = a_in.data.data();
      const T* pb = b_in.data.data();
      for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t j = mode == detail::BinaryMode::kSame ? i : i % nb;
        auto d = bwd_pair(pa[i], pb[j]);
        gb[j] += g[i] * d.second;
      }
    }
  };
  return detail::make_op<T>(op, a.shape(), std::move(out), {a.impl(), b.impl()}, std::move(bwd));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "add", a, b, [](T x, T y) { return x + y; },
      [](T, T) { return std::pair<T, T>(T(1), T(1)); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T x, T y) { return std::pair<T, T>(y, x); });
}

// (a - b)^2, the building block of the reconstruction and prediction losses.
template <typename T>
Tensor<T> sqdiff(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "sqdiff", a, b, [](T x, T y) { return (x - y) * (x - y); },
      [](T x, T y) { return std::pair<T, T>(T(2) * (x - y), T(-2) * (x - y)); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "sub", a, b, [](T x, T y) { return x - y; },
      [](T, T) { return std::pair<T, T>(T(1), T(-1)); });
}

// ---------------------------------------------------------------------------
// Elementwise unary primitives

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> unary_elementwise(const char* op, const Tensor<T>& x, FwdFn fwd, BwdFn dfdx) {
  detail::check_finite_strict(op, x);
  const std::int64_t n = x.numel();
  std::vector<T> out(static_cast<std::size_t>(n));
  const T* px = x.data().data();
  T* po = out.data();
  parallel_for(0, n, 1 << 14, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) po[i] = fwd(px[i]);
  });
  auto bwd = [dfdx](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const std::int64_t n = static_cast<std::int64_t>(self.data.size());
    const T* g = self.grad.data();
    const T* px = in.data.data();
    const T* py = self.data.data();
    T* gx = in.grad.data();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * dfdx(px[i], py[i]);
  };
  return detail::make_op<T>(op, x.shape(), std::move(out), {x.impl()}, std::move(bwd));
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "neg", x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> sin(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "sin", x, [](T v) { return std::sin(v); }, [](T v, T) { return std::cos(v); });
}

template <typename T>
Tensor<T> cos(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "cos", x, [](T v) { return std::cos(v); }, [](T v, T) { return -std::sin(v); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary_elementwise<T>(
      "sigmoid", x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

// out = s * x with a compile-time-constant style scalar.
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary_elementwise<T>(
      "scale", x, [s](T v) { return s * v; }, [s](T, T) { return s; });
}

// Saturating clamp; gradient passes through strictly inside [lo, hi].
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (!(lo < hi)) throw ShapeError("clamp: requires lo < hi");
  return unary_elementwise<T>(
      "clamp", x, [lo, hi](T v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](T v, T) { return v > lo && v < hi ? T(1) : T(0); });
}

// ---------------------------------------------------------------------------
// Matrix multiply

namespace detail {

// C[N,M] = A[N,K] * B[K,M], row-major, accumulating into C.
template <typename T>
void mm_nn_acc(const T* a, const T* b, T* c, std::int64_t n, std::int64_t k, std::int64_t m) {
  parallel_for(0, n, 8, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      T* __restrict ci = c + i * m;
      const T* ai = a + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        const T av = ai[p];
        const T* __restrict bp = b + p * m;
        for (std::int64_t j = 0; j < m; ++j) ci[j] += av * bp[j];
      }
    }
  });
}

// C[N,K] += G[N,M] * B[K,M]^T
template <typename T>
void mm_nt_acc(const T* g, const T* b, T* c, std::int64_t n, std::int64_t k, std::int64_t m) {
  parallel_for(0, n, 8, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      T* __restrict ci = c + i * k;
      const T* gi = g + i * m;
      for (std::int64_t p = 0; p < k; ++p) {
        const T* __restrict bp = b + p * m;
        T acc = T(0);
        for (std::int64_t j = 0; j < m; ++j) acc += gi[j] * bp[j];
        ci[p] += acc;
      }
    }
  });
}

// C[K,M] += A[N,K]^T * G[N,M]
template <typename T>
void mm_tn_acc(const T* a, const T* g, T* c, std::int64_t n, std::int64_t k, std::int64_t m) {
  parallel_for(0, k, 8, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      T* __restrict cp = c + p * m;
      for (std::int64_t i = 0; i < n; ++i) {
        const T av = a[i * k + p];
        const T* __restrict gi = g + i * m;
        for (std::int64_t j = 0; j < m; ++j) cp[j] += av * gi[j];
      }
    }
  });
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_finite_strict("matmul", a);
  detail::check_finite_strict("matmul", b);
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul: expects rank-2 operands, got " + format_shape(a.shape()) + " and " +
                     format_shape(b.shape()));
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul: inner dimensions differ, " + format_shape(a.shape()) + " vs " +
                     format_shape(b.shape()));
  const std::int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<T> out(static_cast<std::size_t>(n * m), T(0));
  detail::mm_nn_acc(a.data().data(), b.data().data(), out.data(), n, k, m);
  auto bwd = [n, k, m](TensorImpl<T>& self) {
    auto& a_in = *self.inputs[0];
    auto& b_in = *self.inputs[1];
    if (a_in.requires_grad) {
      detail::ensure_grad(a_in);
      detail::mm_nt_acc(self.grad.data(), b_in.data.data(), a_in.grad.data(), n, k, m);
    }
    if (b_in.requires_grad) {
      detail::ensure_grad(b_in);
      detail::mm_tn_acc(a_in.data.data(), self.grad.data(), b_in.grad.data(), n, k, m);
    }
  };
  return detail::make_op<T>("matmul", {n, m}, std::move(out), {a.impl(), b.impl()},
                            std::move(bwd));
}

// ---------------------------------------------------------------------------
// Shape primitives

// Concatenates rank-2 tensors along columns.
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::int64_t n = parts[0].rank() == 2 ? parts[0].dim(0) : -1;
  std::int64_t total = 0;
  for (const auto& p : parts) {
    detail::check_finite_strict("concat", p);
    if (p.rank() != 2 || p.dim(0) != n)
      throw ShapeError("concat: expects rank-2 inputs with matching rows, got " +
                       format_shape(parts[0].shape()) + " and " + format_shape(p.shape()));
    total += p.dim(1);
  }
  std::vector<T> out(static_cast<std::size_t>(n * total));
  std::vector<std::int64_t> offsets;
  std::vector<std::int64_t> widths;
  std::int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    widths.push_back(p.dim(1));
    const T* src = p.data().data();
    const std::int64_t w = p.dim(1);
    for (std::int64_t i = 0; i < n; ++i)
      std::copy(src + i * w, src + (i + 1) * w, out.data() + i * total + off);
    off += w;
  }
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  for (const auto& p : parts) inputs.push_back(p.impl());
  auto bwd = [n, total, offsets, widths](TensorImpl<T>& self) {
    for (std::size_t idx = 0; idx < self.inputs.size(); ++idx) {
      auto& in = *self.inputs[idx];
      if (!in.requires_grad) continue;
      detail::ensure_grad(in);
      const std::int64_t w = widths[idx], o = offsets[idx];
      const T* g = self.grad.data();
      T* gi = in.grad.data();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < w; ++j) gi[i * w + j] += g[i * total + o + j];
    }
  };
  return detail::make_op<T>("concat", {n, total}, std::move(out), std::move(inputs),
                            std::move(bwd));
}

// Column slice [start, start+len) of a rank-2 tensor.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::int64_t start, std::int64_t len) {
  detail::check_finite_strict("slice", x);
  if (x.rank() != 2) throw ShapeError("slice: expects rank-2 input, got " + format_shape(x.shape()));
  const std::int64_t n = x.dim(0), d = x.dim(1);
  if (start < 0 || len < 1 || start + len > d)
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of " + format_shape(x.shape()));
  std::vector<T> out(static_cast<std::size_t>(n * len));
  const T* src = x.data().data();
  for (std::int64_t i = 0; i < n; ++i)
    std::copy(src + i * d + start, src + i * d + start + len, out.data() + i * len);
  auto bwd = [n, d, start, len](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const T* g = self.grad.data();
    T* gi = in.grad.data();
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < len; ++j) gi[i * d + start + j] += g[i * len + j];
  };
  return detail::make_op<T>("slice", {n, len}, std::move(out), {x.impl()}, std::move(bwd));
}

// Repeats a [1,D] row n times; the gradient sums back over rows.
template <typename T>
Tensor<T> repeat_rows(const Tensor<T>& x, std::int64_t n) {
  detail::check_finite_strict("repeat_rows", x);
  if (x.rank() != 2 || x.dim(0) != 1)
    throw ShapeError("repeat_rows: expects shape [1,D], got " + format_shape(x.shape()));
  const std::int64_t d = x.dim(1);
  std::vector<T> out(static_cast<std::size_t>(n * d));
  for (std::int64_t i = 0; i < n; ++i)
    std::copy(x.data().begin(), x.data().end(), out.begin() + i * d);
  auto bwd = [n, d](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const T* g = self.grad.data();
    T* gi = in.grad.data();
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < d; ++j) gi[j] += g[i * d + j];
  };
  return detail::make_op<T>("repeat_rows", {n, d}, std::move(out), {x.impl()}, std::move(bwd));
}

// Same data, new shape. Copies; the backward pass copies back.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + format_shape(x.shape()) + " as " +
                     format_shape(shape));
  auto bwd = [](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const T* g = self.grad.data();
    T* gi = in.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gi[i] += g[i];
  };
  return detail::make_op<T>("reshape", std::move(shape), x.data(), {x.impl()}, std::move(bwd));
}

// ---------------------------------------------------------------------------
// Reductions (always serial and fixed-order, so runs are bit-reproducible)

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  detail::check_finite_strict("sum", x);
  T acc = T(0);
  for (T v : x.data()) acc += v;
  auto bwd = [](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const T g = self.grad[0];
    for (auto& v : in.grad) v += g;
  };
  return detail::make_op<T>("sum", {1}, {acc}, {x.impl()}, std::move(bwd));
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  detail::check_finite_strict("mean", x);
  const T inv = T(1) / static_cast<T>(x.numel());
  T acc = T(0);
  for (T v : x.data()) acc += v;
  acc *= inv;
  auto bwd = [inv](TensorImpl<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    detail::ensure_grad(in);
    const T g = self.grad[0] * inv;
    for (auto& v : in.grad) v += g;
  };
  return detail::make_op<T>("mean", {1}, {acc}, {x.impl()}, std::move(bwd));
}

// ---------------------------------------------------------------------------
// Volume compositing
//
// Inputs: sigma_delta [N,S] holds density times segment length per sample,
// colors [N,S*3] the per-sample RGB. Output [N,4] is composited RGB plus
// accumulated opacity. Transmittance is maintained as a running product of
// exp(-sigma_delta), and opacity is 1 minus the final transmittance, which
// telescopes the per-sample weights exactly and so can never exceed 1.

template <typename T>
Tensor<T> composite(const Tensor<T>& sigma_delta, const Tensor<T>& colors) {
  detail::check_finite_strict("composite", sigma_delta);
  detail::check_finite_strict("composite", colors);
  if (sigma_delta.rank() != 2 || colors.rank() != 2 || colors.dim(0) != sigma_delta.dim(0) ||
      colors.dim(1) != sigma_delta.dim(1) * 3)
    throw ShapeError("composite: expects [N,S] and [N,3S], got " +
                     format_shape(sigma_delta.shape()) + " and " + format_shape(colors.shape()));
  const std::int64_t n = sigma_delta.dim(0), s = sigma_delta.dim(1);
  std::vector<T> out(static_cast<std::size_t>(n * 4));
  auto weights = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n * s));
  auto trans_next = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n * s));
  const T* sd = sigma_delta.data().data();
  const T* col = colors.data().data();
  T* po = out.data();
  T* pw = weights->data();
  T* pt = trans_next->data();
  parallel_for(0, n, 16, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      T trans = T(1);
      T r = T(0), g = T(0), b = T(0);
      for (std::int64_t j = 0; j < s; ++j) {
        const T e = std::exp(-sd[i * s + j]);
        const T w = trans * (T(1) - e);
        pw[i * s + j] = w;
        r += w * col[(i * s + j) * 3 + 0];
        g += w * col[(i * s + j) * 3 + 1];
        b += w * col[(i * s + j) * 3 + 2];
        trans *= e;
        pt[i * s + j] = trans;
      }
      po[i * 4 + 0] = r;
      po[i * 4 + 1] = g;
      po[i * 4 + 2] = b;
      po[i * 4 + 3] = T(1) - trans;
    }
  });
  auto bwd = [n, s, weights, trans_next](TensorImpl<T>& self) {
    auto& sd_in = *self.inputs[0];
    auto& col_in = *self.inputs[1];
    const T* g = self.grad.data();
    const T* col = col_in.data.data();
    const T* pw = weights->data();
    const T* pt = trans_next->data();
    if (col_in.requires_grad) {
      detail::ensure_grad(col_in);
      T* gc = col_in.grad.data();
      parallel_for(0, n, 16, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i)
          for (std::int64_t j = 0; j < s; ++j)
            for (int k = 0; k < 3; ++k)
              gc[(i * s + j) * 3 + k] += g[i * 4 + k] * pw[i * s + j];
      });
    }
    if (sd_in.requires_grad) {
      detail::ensure_grad(sd_in);
      T* gsd = sd_in.grad.data();
      // d(rgb_k)/d(sd_j) = T_{j+1} c_{j,k} - sum_{l>j} w_l c_{l,k}
      // d(opacity)/d(sd_j) = T_final; accumulate suffix sums backwards.
      parallel_for(0, n, 16, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
          const T t_final = pt[i * s + s - 1];
          T suffix[3] = {T(0), T(0), T(0)};
          for (std::int64_t j = s - 1; j >= 0; --j) {
            T acc = g[i * 4 + 3] * t_final;
            for (int k = 0; k < 3; ++k)
              acc += g[i * 4 + k] * (pt[i * s + j] * col[(i * s + j) * 3 + k] - suffix[k]);
            gsd[i * s + j] += acc;
            for (int k = 0; k < 3; ++k) suffix[k] += pw[i * s + j] * col[(i * s + j) * 3 + k];
          }
        }
      });
    }
  };
  return detail::make_op<T>("composite", {n, 4}, std::move(out),
                            {sigma_delta.impl(), colors.impl()}, std::move(bwd));
}

// ---------------------------------------------------------------------------
// Bilinear image sampling (gradients flow to the coordinates only)
//
// coords [N,2] are continuous (x,y) pixel positions with (0,0) at the
// center of the top-left pixel; image is [H,W,C] and is treated as a
// constant. Samples clamp to the image edge.

template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& image, const Tensor<T>& coords) {
  detail::check_finite_strict("bilinear_sample", coords);
  if (image.rank() != 3) throw ShapeError("bilinear_sample: image must be [H,W,C]");
  if (coords.rank() != 2 || coords.dim(1) != 2)
    throw ShapeError("bilinear_sample: coords must be [N,2], got " + format_shape(coords.shape()));
  const std::int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const std::int64_t n = coords.dim(0);
  std::vector<T> out(static_cast<std::size_t>(n * c));
  const T* img = image.data().data();
  const T* xy = coords.data().data();
  auto corners = [h, w](T x, T y, std::int64_t& x0, std::int64_t& y0, T& fx, T& fy) {
    x = std::min(std::max(x, T(0)), T(w - 1));
    y = std::min(std::max(y, T(0)), T(h - 1));
    x0 = std::min(static_cast<std::int64_t>(std::floor(x)), w - 2 >= 0 ? w - 2 : 0);
    y0 = std::min(static_cast<std::int64_t>(std::floor(y)), h - 2 >= 0 ? h - 2 : 0);
    fx = x - static_cast<T>(x0);
    fy = y - static_cast<T>(y0);
  };
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t x0, y0;
    T fx, fy;
    corners(xy[i * 2], xy[i * 2 + 1], x0, y0, fx, fy);
    for (std::int64_t k = 0; k < c; ++k) {
      const T v00 = img[(y0 * w + x0) * c + k];
      const T v10 = img[(y0 * w + x0 + 1) * c + k];
      const T v01 = img[((y0 + 1) * w + x0) * c + k];
      const T v11 = img[((y0 + 1) * w + x0 + 1) * c + k];
      out[i * c + k] = (T(1) - fy) * ((T(1) - fx) * v00 + fx * v10) +
                       fy * ((T(1) - fx) * v01 + fx * v11);
    }
  }
  auto bwd = [h, w, c, n, corners](TensorImpl<T>& self) {
    auto& img_in = *self.inputs[0];
    auto& xy_in = *self.inputs[1];
    if (!xy_in.requires_grad) return;
    detail::ensure_grad(xy_in);
    const T* img = img_in.data.data();
    const T* xy = xy_in.data.data();
    const T* g = self.grad.data();
    T* gxy = xy_in.grad.data();
    for (std::int64_t i = 0; i < n; ++i) {
      std::int64_t x0, y0;
      T fx, fy;
      corners(xy[i * 2], xy[i * 2 + 1], x0, y0, fx, fy);
      // Inside the clamp region the interpolant is linear in x and y.
      const bool in_x = xy[i * 2] > T(0) && xy[i * 2] < T(w - 1);
      const bool in_y = xy[i * 2 + 1] > T(0) && xy[i * 2 + 1] < T(h - 1);
      for (std::int64_t k = 0; k < c; ++k) {
        const T v00 = img[(y0 * w + x0) * c + k];
        const T v10 = img[(y0 * w + x0 + 1) * c + k];
        const T v01 = img[((y0 + 1) * w + x0) * c + k];
        const T v11 = img[((y0 + 1) * w + x0 + 1) * c + k];
        if (in_x)
          gxy[i * 2] += g[i * c + k] * ((T(1) - fy) * (v10 - v00) + fy * (v11 - v01));
        if (in_y)
          gxy[i * 2 + 1] += g[i * c + k] * ((T(1) - fx) * (v01 - v00) + fx * (v11 - v10));
      }
    }
  };
  return detail::make_op<T>("bilinear_sample", {n, c}, std::move(out),
                            {image.impl(), coords.impl()}, std::move(bwd));
}

// ---------------------------------------------------------------------------
// Generic dispatch, mainly for sweeping every primitive in one harness.

enum class OpKind {
  kAdd,
  kMul,
  kSub,
  kNeg,
  kExp,
  kSin,
  kCos,
  kRelu,
  kSigmoid,
  kMatmul,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kSqdiff,
  kScale,
  kClamp,
  kRepeatRows,
  kReshapeFlat,
  kComposite,
};

const char* op_kind_name(OpKind kind);

struct OpArgs {
  std::int64_t i0 = 0;  // slice start / repeat count
  std::int64_t i1 = 1;  // slice length
  double scalar = 1.0;  // scale factor
};

template <typename T>
Tensor<T> primitive_forward(OpKind kind, const std::vector<Tensor<T>>& inputs,
                            const OpArgs& args = {}) {
  auto want = [&](std::size_t k) {
    if (inputs.size() != k)
      throw ShapeError(std::string(op_kind_name(kind)) + ": expects " + std::to_string(k) +
                       " inputs, got " + std::to_string(inputs.size()));
  };
  switch (kind) {
    case OpKind::kAdd: want(2); return add(inputs[0], inputs[1]);
    case OpKind::kMul: want(2); return mul(inputs[0], inputs[1]);
    case OpKind::kSub: want(2); return sub(inputs[0], inputs[1]);
    case OpKind::kSqdiff: want(2); return sqdiff(inputs[0], inputs[1]);
    case OpKind::kNeg: want(1); return neg(inputs[0]);
    case OpKind::kExp: want(1); return exp(inputs[0]);
    case OpKind::kSin: want(1); return sin(inputs[0]);
    case OpKind::kCos: want(1); return cos(inputs[0]);
    case OpKind::kRelu: want(1); return relu(inputs[0]);
    case OpKind::kSigmoid: want(1); return sigmoid(inputs[0]);
    case OpKind::kMatmul: want(2); return matmul(inputs[0], inputs[1]);
    case OpKind::kConcat: return concat_cols(inputs);
    case OpKind::kSlice: want(1); return slice_cols(inputs[0], args.i0, args.i1);
    case OpKind::kSum: want(1); return sum(inputs[0]);
    case OpKind::kMean: want(1); return mean(inputs[0]);
    case OpKind::kScale: want(1); return scale(inputs[0], static_cast<T>(args.scalar));
    case OpKind::kClamp: want(1); return clamp(inputs[0], static_cast<T>(-args.scalar), static_cast<T>(args.scalar));
    case OpKind::kRepeatRows: want(1); return repeat_rows(inputs[0], args.i0);
    case OpKind::kReshapeFlat: want(1); return reshape(inputs[0], {inputs[0].numel()});
    case OpKind::kComposite: want(2); return composite(inputs[0], inputs[1]);
  }
  throw ShapeError("primitive_forward: unknown op kind");
}

}  // namespace pref::ad
