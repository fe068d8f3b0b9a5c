#pragma once

#include <cmath>

#include "prnet/model/prnet.hpp"
#include "prnet/train/config.hpp"

namespace prnet {

/// Progressive supervision: sum over i=1..T of gamma^(T-i) * L1(I_i, gt).
/// Later iterations carry geometrically larger weight. The last-iteration
/// ablation (all_iterations=false) supervises only I_T.
template <typename T>
Tensor<T> progressive_loss(Tape<T>* tape, const IterationTrace<T>& trace, const Tensor<T>& gt,
                           double gamma, bool all_iterations = true) {
  if (trace.predictions.empty()) throw ContractError("progressive_loss: empty trace");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ContractError("progressive_loss: gamma must satisfy 0 < gamma <= 1");
  const int t_total = int(trace.predictions.size());
  if (!all_iterations) return l1_loss(tape, trace.predictions.back(), gt);
  Tensor<T> total;
  for (int i = 1; i <= t_total; ++i) {
    const T weight = T(std::pow(gamma, double(t_total - i)));
    Tensor<T> term =
        scalar_mul(tape, l1_loss(tape, trace.predictions[size_t(i - 1)], gt), weight);
    total = total.valid() ? add(tape, total, term) : term;
  }
  return total;
}

/// lr0 until decay_start_epoch, then linear decay hitting zero at
/// epoch == epochs (the final executed epoch keeps a small positive rate).
inline double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) throw ContractError("lr_schedule: epoch out of range");
  if (epoch < cfg.decay_start_epoch) return cfg.lr0;
  return cfg.lr0 * double(cfg.epochs - epoch) / double(cfg.epochs - cfg.decay_start_epoch);
}

}  // namespace prnet
