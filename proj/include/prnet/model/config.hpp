#pragma once

#include <cstdint>
#include <string>

#include "prnet/core/errors.hpp"
#include "prnet/core/rng.hpp"

namespace prnet {

/// Architecture hyperparameters. The defaults are the full model; tiny() is
/// the desk-scale configuration used by tests and the synthetic protocol.
struct ModelConfig {
  // feature extractor widths (stem conv, then the three residual layers;
  // layer3 is the hidden width C carried through the recurrence)
  int stem = 64;
  int layer1 = 64;
  int layer2 = 96;
  int layer3 = 128;

  // re-integration widths C1 (image+mask branch) and C2 (hidden branch)
  int reint_s = 192;
  int reint_l = 64;

  // prediction tail mid width
  int tail_mid = 256;

  // training-time iteration count; also the number of update-block copies
  // when parameter sharing is off
  int train_iterations = 8;

  bool shared_update = true;
  bool residual_output = false;

  // component ablations
  bool use_reintegration = true;
  bool use_update = true;

  static ModelConfig full() { return ModelConfig{}; }

  static ModelConfig tiny() {
    ModelConfig c;
    c.stem = 8;
    c.layer1 = 8;
    c.layer2 = 12;
    c.layer3 = 16;
    c.reint_s = 24;
    c.reint_l = 8;
    c.tail_mid = 32;
    c.train_iterations = 3;
    return c;
  }

  int hidden() const { return layer3; }

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v < 1) throw ConfigError(std::string("model config: ") + name + " must be >= 1");
    };
    positive(stem, "stem");
    positive(layer1, "layer1");
    positive(layer2, "layer2");
    positive(layer3, "layer3");
    positive(reint_s, "reint_s");
    positive(reint_l, "reint_l");
    positive(tail_mid, "tail_mid");
    positive(train_iterations, "train_iterations");
  }

  std::string canonical() const {
    auto b = [](bool v) { return v ? "1" : "0"; };
    return "stem=" + std::to_string(stem) + ";l1=" + std::to_string(layer1) +
           ";l2=" + std::to_string(layer2) + ";l3=" + std::to_string(layer3) +
           ";rs=" + std::to_string(reint_s) + ";rl=" + std::to_string(reint_l) +
           ";tm=" + std::to_string(tail_mid) + ";T=" + std::to_string(train_iterations) +
           ";shared=" + b(shared_update) + ";resid=" + b(residual_output) +
           ";re=" + b(use_reintegration) + ";up=" + b(use_update);
  }

  /// Structural hash stored in checkpoints; a mismatch refuses the load.
  uint64_t hash() const {
    const std::string s = canonical();
    return fnv1a64(s.data(), s.size());
  }

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace prnet
