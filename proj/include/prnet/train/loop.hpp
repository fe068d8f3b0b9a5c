#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "prnet/metrics/metrics.hpp"
#include "prnet/train/adam.hpp"
#include "prnet/train/config.hpp"
#include "prnet/train/data.hpp"
#include "prnet/train/loss.hpp"

namespace prnet {

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double val_psnr = 0;
  double val_rmse_all = 0;
  double val_rmse_shadow = 0;
  int64_t steps = 0;
};

struct TrainHooks {
  /// kind: "periodic" | "best" | "final" | "abort"; epoch is the next epoch
  /// a resumed run would execute.
  std::function<void(const char* kind, int next_epoch)> save;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochStats> log;
  int64_t steps = 0;
  double best_val_psnr = -1;
};

/// Whole-image PSNR plus LAB error of I_T against the target on a held-out
/// set; shadow-region RMSE skips samples with an empty mask.
inline EpochStats validate_model(ModelParams<float>& params, int iterations,
                                 const std::vector<ShadowSample>& val) {
  EpochStats s;
  if (val.empty()) return s;
  double psnr_acc = 0, rmse_all_acc = 0, rmse_shadow_acc = 0;
  int64_t shadow_count = 0;
  for (const auto& sample : val) {
    auto trace = forward<float>(nullptr, sample.shadow, sample.mask, params, iterations);
    const Tensor<float>& pred = trace.predictions.back();
    psnr_acc += psnr(pred, sample.free);
    rmse_all_acc += rmse_lab(pred, sample.free);
    bool has_shadow = false;
    for (int64_t i = 0; i < sample.mask.size() && !has_shadow; ++i)
      has_shadow = sample.mask.data()[i] >= 0.5f;
    if (has_shadow) {
      rmse_shadow_acc += rmse_lab(pred, sample.free, &sample.mask, Region::Shadow);
      ++shadow_count;
    }
  }
  s.val_psnr = psnr_acc / double(val.size());
  s.val_rmse_all = rmse_all_acc / double(val.size());
  s.val_rmse_shadow = shadow_count ? rmse_shadow_acc / double(shadow_count) : 0.0;
  return s;
}

namespace detail {

inline void stack_batch(const std::vector<ShadowSample>& crops, Tensor<float>& shadow,
                        Tensor<float>& free, Tensor<float>& mask) {
  const Shape& s = crops[0].shadow.shape();
  const int64_t b = int64_t(crops.size());
  shadow = Tensor<float>(Shape(b, 3, s.h, s.w));
  free = Tensor<float>(Shape(b, 3, s.h, s.w));
  mask = Tensor<float>(Shape(b, 1, s.h, s.w));
  for (int64_t i = 0; i < b; ++i) {
    std::copy(crops[size_t(i)].shadow.data(), crops[size_t(i)].shadow.data() + 3 * s.plane(),
              shadow.data() + i * 3 * s.plane());
    std::copy(crops[size_t(i)].free.data(), crops[size_t(i)].free.data() + 3 * s.plane(),
              free.data() + i * 3 * s.plane());
    std::copy(crops[size_t(i)].mask.data(), crops[size_t(i)].mask.data() + s.plane(),
              mask.data() + i * s.plane());
  }
}

}  // namespace detail

/// Epoch-driven training. Each epoch owns an RNG stream derived from
/// (seed, epoch), so resuming from an epoch-boundary checkpoint replays an
/// uninterrupted run bitwise. Partial final batches are trained on.
inline TrainResult train_loop(const std::vector<ShadowSample>& train_set,
                              const std::vector<ShadowSample>& val_set,
                              const TrainConfig& cfg, ModelParams<float>& params,
                              AdamState& adam, int start_epoch = 0,
                              const TrainHooks& hooks = {}) {
  cfg.validate();
  if (train_set.empty()) throw ContractError("train_loop: empty dataset");
  TrainResult result;
  auto save = [&](const char* kind, int next_epoch) {
    if (hooks.save) hooks.save(kind, next_epoch);
  };
  int64_t steps_done = adam.step;
  bool capped = false;
  for (int epoch = start_epoch; epoch < cfg.epochs && !capped; ++epoch) {
    Rng rng = Rng::stream(cfg.seed, 0x45504f4348ULL + uint64_t(epoch));
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t(0));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(rng.uniform_int(0, int64_t(i) - 1))]);

    const double lr = lr_schedule(epoch, cfg);
    double loss_acc = 0;
    int64_t batches = 0;
    for (size_t at = 0; at < order.size() && !capped; at += size_t(cfg.batch_size)) {
      const size_t end = std::min(order.size(), at + size_t(cfg.batch_size));
      std::vector<ShadowSample> crops;
      for (size_t i = at; i < end; ++i) {
        ShadowSample crop = random_crop_pair(train_set[order[i]], cfg.crop, rng);
        if (cfg.hflip && rng.uniform() < 0.5) crop = hflip_sample(crop);
        crops.push_back(std::move(crop));
      }
      Tensor<float> shadow, free, mask;
      detail::stack_batch(crops, shadow, free, mask);

      Tape<float> tape;
      auto trace = forward<float>(&tape, shadow, mask, params, cfg.iterations);
      auto loss = progressive_loss<float>(&tape, trace, free, cfg.gamma,
                                          cfg.loss_all_iterations);
      const double loss_val = double(loss.item());
      if (!std::isfinite(loss_val)) {
        save("abort", epoch);
        throw NumericError("train_loop: non-finite loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(steps_done));
      }
      tape.backward(loss);
      adam_step(params, adam, lr);
      params.visit([](const std::string&, Tensor<float>& t) { t.drop_grad(); });
      loss_acc += loss_val;
      ++batches;
      ++steps_done;
      if (cfg.max_steps > 0 && steps_done >= cfg.max_steps) capped = true;
    }

    EpochStats stats = validate_model(params, cfg.iterations, val_set);
    stats.epoch = epoch;
    stats.lr = lr;
    stats.train_loss = batches ? loss_acc / double(batches) : 0.0;
    stats.steps = steps_done;
    result.log.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(stats);

    if (!val_set.empty() && stats.val_psnr > result.best_val_psnr) {
      result.best_val_psnr = stats.val_psnr;
      save("best", epoch + 1);
    }
    if ((epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs && !capped)
      save("periodic", epoch + 1);
  }
  result.steps = steps_done;
  save("final", cfg.epochs);
  return result;
}

}  // namespace prnet
