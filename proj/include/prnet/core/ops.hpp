#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "prnet/core/conv.hpp"
#include "prnet/core/tape.hpp"
#include "prnet/core/tensor.hpp"

namespace prnet {

namespace detail {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape()))
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

// sigmoid/tanh saturate to exactly 0/1 in finite precision for large inputs;
// pin the outputs to the open interval so gate values stay strict.
template <typename T>
inline T sigmoid_val(T x) {
  T y;
  if (x >= T(0)) {
    const T e = std::exp(-x);
    y = T(1) / (T(1) + e);
  } else {
    const T e = std::exp(x);
    y = e / (T(1) + e);
  }
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  return std::min(std::max(y, lo), hi);
}

template <typename T>
inline T tanh_val(T x) {
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  return std::min(std::max(std::tanh(x), -hi), hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convolution

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
  const ConvGeom g = ConvGeom::resolve(input.shape(), weight.shape(), stride, padding);
  if (bias.valid() && bias.size() != g.cout)
    throw DimensionError("conv2d: bias size " + std::to_string(bias.size()) +
                         " != out channels " + std::to_string(g.cout));
  Tensor<T> out(Shape(input.shape().n, g.cout, g.hout, g.wout));
  conv2d_forward(g, input.shape().n, input.data(), weight.data(),
                 bias.valid() ? bias.data() : nullptr, out.data());
  if (tape) {
    tape->note(out, "conv2d");
    Tensor<T> in_c = input, w_c = weight, b_c = bias, out_c = out;
    tape->record([g, in_c, w_c, b_c, out_c]() mutable {
      const T* go = out_c.grad_if();
      if (!go) return;
      T* din = in_c.needs_grad() ? in_c.grad() : nullptr;
      T* dw = w_c.needs_grad() ? w_c.grad() : nullptr;
      T* db = (b_c.valid() && b_c.needs_grad()) ? b_c.grad() : nullptr;
      if (!din && !dw && !db) return;
      conv2d_backward(g, in_c.shape().n, in_c.data(), w_c.data(), go, din, dw, db);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// instance normalization

/// Per (sample, channel) plane standardization with biased variance,
/// followed by the learned affine (scale, shift).
template <typename T>
Tensor<T> instance_norm(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& scale,
                        const Tensor<T>& shift, T eps) {
  const Shape s = input.shape();
  if (scale.size() != s.c || shift.size() != s.c)
    throw DimensionError("instance_norm: scale/shift must have " + std::to_string(s.c) +
                         " elements");
  if (!(eps > T(0))) throw ContractError("instance_norm: eps must be positive");
  const int64_t plane = s.plane();
  if (plane == 0) throw DimensionError("instance_norm: empty plane");
  Tensor<T> out(s);
  std::vector<T> mean(size_t(s.n * s.c)), inv_std(size_t(s.n * s.c));
  const T* x = input.data();
  T* y = out.data();
  for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
    const T* xp = x + nc * plane;
    T* yp = y + nc * plane;
    T mu = T(0);
    for (int64_t i = 0; i < plane; ++i) mu += xp[i];
    mu /= T(plane);
    T var = T(0);
    for (int64_t i = 0; i < plane; ++i) {
      const T d = xp[i] - mu;
      var += d * d;
    }
    var /= T(plane);
    const T inv = T(1) / std::sqrt(var + eps);
    const T g = scale.data()[nc % s.c];
    const T b = shift.data()[nc % s.c];
    for (int64_t i = 0; i < plane; ++i) yp[i] = (xp[i] - mu) * inv * g + b;
    mean[size_t(nc)] = mu;
    inv_std[size_t(nc)] = inv;
  }
  if (tape) {
    tape->note(out, "instance_norm");
    Tensor<T> in_c = input, sc_c = scale, sh_c = shift, out_c = out;
    tape->record([in_c, sc_c, sh_c, out_c, mean = std::move(mean),
                  inv_std = std::move(inv_std)]() mutable {
      const T* go = out_c.grad_if();
      if (!go) return;
      const Shape s = in_c.shape();
      const int64_t plane = s.plane();
      const T* x = in_c.data();
      T* dx = in_c.needs_grad() ? in_c.grad() : nullptr;
      T* dscale = sc_c.needs_grad() ? sc_c.grad() : nullptr;
      T* dshift = sh_c.needs_grad() ? sh_c.grad() : nullptr;
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const int64_t c = nc % s.c;
        const T* xp = x + nc * plane;
        const T* gp = go + nc * plane;
        const T mu = mean[size_t(nc)];
        const T inv = inv_std[size_t(nc)];
        const T gamma = sc_c.data()[c];
        T sum_g = T(0), sum_gx = T(0);
        for (int64_t i = 0; i < plane; ++i) {
          const T xhat = (xp[i] - mu) * inv;
          sum_g += gp[i];
          sum_gx += gp[i] * xhat;
        }
        if (dshift) dshift[c] += sum_g;
        if (dscale) dscale[c] += sum_gx;
        if (dx) {
          T* dxp = dx + nc * plane;
          const T mg = sum_g / T(plane);
          const T mgx = sum_gx / T(plane);
          const T k = gamma * inv;
          for (int64_t i = 0; i < plane; ++i) {
            const T xhat = (xp[i] - mu) * inv;
            dxp[i] += k * (gp[i] - mg - xhat * mgx);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// activations

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  const T* x = input.data();
  T* y = out.data();
  for (int64_t i = 0; i < input.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  if (tape) {
    tape->note(out, "relu");
    Tensor<T> in_c = input, out_c = out;
    tape->record([in_c, out_c]() mutable {
      const T* go = out_c.grad_if();
      if (!go || !in_c.needs_grad()) return;
      T* gi = in_c.grad();
      const T* x = in_c.data();
      for (int64_t i = 0; i < in_c.size(); ++i)
        if (x[i] > T(0)) gi[i] += go[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  const T* x = input.data();
  T* y = out.data();
  for (int64_t i = 0; i < input.size(); ++i) y[i] = detail::sigmoid_val(x[i]);
  if (tape) {
    tape->note(out, "sigmoid");
    Tensor<T> in_c = input, out_c = out;
    tape->record([in_c, out_c]() mutable {
      const T* go = out_c.grad_if();
      if (!go || !in_c.needs_grad()) return;
      T* gi = in_c.grad();
      const T* y = out_c.data();
      for (int64_t i = 0; i < in_c.size(); ++i) gi[i] += go[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh_op(Tape<T>* tape, const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  const T* x = input.data();
  T* y = out.data();
  for (int64_t i = 0; i < input.size(); ++i) y[i] = detail::tanh_val(x[i]);
  if (tape) {
    tape->note(out, "tanh");
    Tensor<T> in_c = input, out_c = out;
    tape->record([in_c, out_c]() mutable {
      const T* go = out_c.grad_if();
      if (!go || !in_c.needs_grad()) return;
      T* gi = in_c.grad();
      const T* y = out_c.data();
      for (int64_t i = 0; i < in_c.size(); ++i) gi[i] += go[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
  if (tape) {
    tape->note(out, "add");
    Tensor<T> ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go) return;
      if (ac.needs_grad()) {
        T* g = ac.grad();
        for (int64_t i = 0; i < ac.size(); ++i) g[i] += go[i];
      }
      if (bc.needs_grad()) {
        T* g = bc.grad();
        for (int64_t i = 0; i < bc.size(); ++i) g[i] += go[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] - pb[i];
  if (tape) {
    tape->note(out, "sub");
    Tensor<T> ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go) return;
      if (ac.needs_grad()) {
        T* g = ac.grad();
        for (int64_t i = 0; i < ac.size(); ++i) g[i] += go[i];
      }
      if (bc.needs_grad()) {
        T* g = bc.grad();
        for (int64_t i = 0; i < bc.size(); ++i) g[i] -= go[i];
      }
    });
  }
  return out;
}

/// Hadamard product.
template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] * pb[i];
  if (tape) {
    tape->note(out, "mul");
    Tensor<T> ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go) return;
      if (ac.needs_grad()) {
        T* g = ac.grad();
        const T* pb = bc.data();
        for (int64_t i = 0; i < ac.size(); ++i) g[i] += go[i] * pb[i];
      }
      if (bc.needs_grad()) {
        T* g = bc.grad();
        const T* pa = ac.data();
        for (int64_t i = 0; i < bc.size(); ++i) g[i] += go[i] * pa[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scalar_mul(Tape<T>* tape, const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] * s;
  if (tape) {
    tape->note(out, "scalar_mul");
    Tensor<T> ac = a, oc = out;
    tape->record([ac, oc, s]() mutable {
      const T* go = oc.grad_if();
      if (!go || !ac.needs_grad()) return;
      T* g = ac.grad();
      for (int64_t i = 0; i < ac.size(); ++i) g[i] += go[i] * s;
    });
  }
  return out;
}

/// Channel concatenation; inputs keep their argument order.
template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  const Shape& first = parts[0].shape();
  int64_t ctotal = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w)
      throw DimensionError("concat_channels: N/H/W mismatch " + s.str() + " vs " + first.str());
    ctotal += s.c;
  }
  Tensor<T> out(Shape(first.n, ctotal, first.h, first.w));
  const int64_t plane = first.plane();
  T* po = out.data();
  for (int64_t n = 0; n < first.n; ++n) {
    int64_t co = 0;
    for (const auto& p : parts) {
      const int64_t pc = p.shape().c;
      const T* src = p.data() + n * pc * plane;
      std::copy(src, src + pc * plane, po + (n * ctotal + co) * plane);
      co += pc;
    }
  }
  if (tape) {
    tape->note(out, "concat_channels");
    std::vector<Tensor<T>> parts_c(parts.begin(), parts.end());
    Tensor<T> oc = out;
    tape->record([parts_c, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go) return;
      const Shape& os = oc.shape();
      const int64_t plane = os.plane();
      for (int64_t n = 0; n < os.n; ++n) {
        int64_t co = 0;
        for (auto& p : parts_c) {
          const int64_t pc = p.shape().c;
          if (p.needs_grad()) {
            T* g = p.grad() + n * pc * plane;
            const T* src = go + (n * os.c + co) * plane;
            for (int64_t i = 0; i < pc * plane; ++i) g[i] += src[i];
          }
          co += pc;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, std::initializer_list<Tensor<T>> parts) {
  std::vector<Tensor<T>> v(parts);
  return concat_channels(tape, std::span<const Tensor<T>>(v));
}

// ---------------------------------------------------------------------------
// reductions

/// Mean of absolute elementwise differences (resolution-independent).
template <typename T>
Tensor<T> l1_loss(Tape<T>* tape, const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require_same_shape("l1_loss", pred, target);
  const T* pa = pred.data();
  const T* pb = target.data();
  T acc = T(0);
  for (int64_t i = 0; i < pred.size(); ++i) acc += std::abs(pa[i] - pb[i]);
  Tensor<T> out = Tensor<T>::scalar(acc / T(pred.size()));
  if (tape) {
    tape->note(out, "l1_loss");
    Tensor<T> ac = pred, bc = target, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go) return;
      const T w = go[0] / T(ac.size());
      const T* pa = ac.data();
      const T* pb = bc.data();
      if (ac.needs_grad()) {
        T* g = ac.grad();
        for (int64_t i = 0; i < ac.size(); ++i) {
          const T d = pa[i] - pb[i];
          g[i] += d > T(0) ? w : (d < T(0) ? -w : T(0));
        }
      }
      if (bc.needs_grad()) {
        T* g = bc.grad();
        for (int64_t i = 0; i < bc.size(); ++i) {
          const T d = pa[i] - pb[i];
          g[i] -= d > T(0) ? w : (d < T(0) ? -w : T(0));
        }
      }
    });
  }
  return out;
}

/// Plain sum to a scalar; mostly a building block for tests and probes.
template <typename T>
Tensor<T> sum_all(Tape<T>* tape, const Tensor<T>& input) {
  const T* x = input.data();
  T acc = T(0);
  for (int64_t i = 0; i < input.size(); ++i) acc += x[i];
  Tensor<T> out = Tensor<T>::scalar(acc);
  if (tape) {
    tape->note(out, "sum_all");
    Tensor<T> in_c = input, oc = out;
    tape->record([in_c, oc]() mutable {
      const T* go = oc.grad_if();
      if (!go || !in_c.needs_grad()) return;
      T* g = in_c.grad();
      for (int64_t i = 0; i < in_c.size(); ++i) g[i] += go[0];
    });
  }
  return out;
}

}  // namespace prnet
