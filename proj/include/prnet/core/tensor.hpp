#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "prnet/core/errors.hpp"
#include "prnet/core/rng.hpp"
#include "prnet/core/shape.hpp"

namespace prnet {

/// Dense 4-D array with shared storage. Values are immutable by convention
/// once an op has produced the tensor; the gradient buffer is allocated
/// lazily the first time something accumulates into it.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(const Shape& s) : d_(std::make_shared<Data>()) {
    d_->shape = s;
    d_->v.assign(size_t(s.numel()), T(0));
  }

  static Tensor zeros(const Shape& s) { return Tensor(s); }

  static Tensor full(const Shape& s, T value) {
    Tensor t(s);
    for (auto& x : t.d_->v) x = value;
    return t;
  }

  static Tensor from(const Shape& s, std::vector<T> values) {
    if (int64_t(values.size()) != s.numel())
      throw DimensionError("tensor data length " + std::to_string(values.size()) +
                           " does not match shape " + s.str());
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->shape = s;
    t.d_->v = std::move(values);
    return t;
  }

  static Tensor scalar(T v) { return full(Shape(1, 1, 1, 1), v); }

  static Tensor uniform(const Shape& s, Rng& rng, T lo, T hi) {
    Tensor t(s);
    for (auto& x : t.d_->v) x = T(rng.uniform(double(lo), double(hi)));
    return t;
  }

  bool valid() const { return bool(d_); }
  const Shape& shape() const { return d_->shape; }
  int64_t size() const { return d_ ? d_->shape.numel() : 0; }

  T* data() { return d_->v.data(); }
  const T* data() const { return d_->v.data(); }
  std::vector<T>& values() { return d_->v; }
  const std::vector<T>& values() const { return d_->v; }

  T& at(int64_t n, int64_t c, int64_t y, int64_t x) {
    return d_->v[size_t(flat_index(d_->shape, n, c, y, x))];
  }
  const T& at(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return d_->v[size_t(flat_index(d_->shape, n, c, y, x))];
  }

  /// Scalar convenience accessor; contract-checked.
  T item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape().str());
    return d_->v[0];
  }

  bool learnable() const { return d_ && d_->learnable; }
  void set_learnable(bool v) { d_->learnable = v; }

  bool on_tape() const { return d_ && d_->on_tape; }
  void mark_on_tape() { d_->on_tape = true; }

  /// True if the backward pass should propagate into this tensor.
  bool needs_grad() const { return d_ && (d_->learnable || d_->on_tape); }

  bool has_grad() const { return d_ && !d_->g.empty(); }

  /// Gradient buffer, zero-initialized on first access.
  T* grad() {
    if (d_->g.empty()) d_->g.assign(size_t(d_->shape.numel()), T(0));
    return d_->g.data();
  }
  const T* grad_if() const { return d_->g.empty() ? nullptr : d_->g.data(); }
  std::vector<T>& grad_values() {
    grad();
    return d_->g;
  }

  void drop_grad() {
    d_->g.clear();
    d_->g.shrink_to_fit();
  }

  /// Deep copy of values only (fresh storage, no grad, flags reset).
  Tensor clone() const {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->shape = d_->shape;
    t.d_->v = d_->v;
    return t;
  }

  bool same_storage(const Tensor& o) const { return d_ == o.d_; }

  bool all_finite() const {
    for (const T& x : d_->v)
      if (!std::isfinite(double(x))) return false;
    return true;
  }

 private:
  struct Data {
    Shape shape;
    std::vector<T> v;
    std::vector<T> g;
    bool learnable = false;
    bool on_tape = false;
  };
  std::shared_ptr<Data> d_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  Tensor<To> out(t.shape());
  const From* src = t.data();
  To* dst = out.data();
  for (int64_t i = 0; i < t.size(); ++i) dst[i] = To(src[i]);
  if (t.learnable()) out.set_learnable(true);
  return out;
}

}  // namespace prnet
