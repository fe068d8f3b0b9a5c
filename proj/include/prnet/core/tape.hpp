#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prnet/core/errors.hpp"
#include "prnet/core/tensor.hpp"

namespace prnet {

/// Append-only record of differentiable operations. Ops push their backward
/// rule as they execute, so insertion order is a topological order by
/// construction and the backward pass is a plain reverse walk. A tape is
/// confined to one thread and discarded (or cleared) after backward.
template <typename T>
class Tape {
 public:
  /// When set, every recorded op output is scanned for NaN/Inf.
  bool check_finite = false;

  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  /// Called by ops on their output; marks it as tape-produced.
  void note(Tensor<T>& out, const char* op_name) {
    out.mark_on_tape();
    if (check_finite && !out.all_finite())
      throw NumericError(std::string("non-finite value in output of ") + op_name);
  }

  /// Reverse-walk the tape, accumulating dLoss into the grad buffer of every
  /// tensor that needs one. May be run once per recording.
  void backward(const Tensor<T>& loss) {
    if (loss.size() != 1) throw ContractError("backward: loss must be scalar, got " + loss.shape().str());
    if (!loss.on_tape()) throw ContractError("backward: loss was not produced on a tape");
    if (ran_) throw ContractError("backward: tape already consumed; call clear() first");
    ran_ = true;
    Tensor<T> l = loss;
    l.grad()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  size_t node_count() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    ran_ = false;
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool ran_ = false;
};

}  // namespace prnet
