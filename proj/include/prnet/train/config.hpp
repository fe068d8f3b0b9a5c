#pragma once

#include <cstdint>

#include "prnet/core/errors.hpp"

namespace prnet {

/// Training protocol. Defaults follow the published recipe: 300 epochs,
/// batch 4, 256-crops, Adam at 2e-4 decaying linearly to zero over the last
/// 250 epochs, gamma 0.8.
struct TrainConfig {
  int iterations = 8;  // T
  double gamma = 0.8;
  double lr0 = 2e-4;
  int epochs = 300;
  int decay_start_epoch = 50;
  int batch_size = 4;
  int crop = 256;
  uint64_t seed = 1;
  bool shared_update = true;
  bool residual_output = false;
  bool loss_all_iterations = true;
  bool hflip = false;
  int checkpoint_every = 50;
  int64_t max_steps = 0;  // 0 = no cap

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw ConfigError("train config: gamma must satisfy 0 < gamma <= 1");
    if (iterations < 1) throw ConfigError("train config: iterations must be >= 1");
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (decay_start_epoch < 0 || decay_start_epoch >= epochs)
      throw ConfigError("train config: decay_start_epoch must lie in [0, epochs)");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (crop < 8) throw ConfigError("train config: crop must be >= 8");
    if (lr0 <= 0) throw ConfigError("train config: lr0 must be positive");
    if (checkpoint_every < 1) throw ConfigError("train config: checkpoint_every must be >= 1");
    if (max_steps < 0) throw ConfigError("train config: max_steps must be >= 0");
  }
};

}  // namespace prnet
