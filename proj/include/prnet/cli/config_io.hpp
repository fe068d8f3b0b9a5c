#pragma once

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "prnet/model/config.hpp"
#include "prnet/train/config.hpp"
#include "prnet/train/data.hpp"

namespace prnet {

/// Where training samples come from: a triplet directory or the synthetic
/// generator.
struct DataSpec {
  std::string root;  // empty -> synthetic
  double val_fraction = 0.1;

  SynthConfig synth;
  int synth_count = 500;
  int synth_size = 64;
  int synth_val_count = 32;
  uint64_t synth_seed = 7;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataSpec data;
};

namespace detail {

using nlohmann::json;

/// Unknown keys are hard errors so config typos never pass silently.
inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& path) {
  if (!obj.is_object()) throw ConfigError("config: " + path + " must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key \"" + path + item.key() + "\"");
}

template <typename T>
void fetch(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for \"") + key + "\"");
  }
}

inline void parse_model(const json& j, ModelConfig& m) {
  check_keys(j,
             {"preset", "stem", "layer1", "layer2", "layer3", "reint_s", "reint_l", "tail_mid",
              "use_reintegration", "use_update"},
             "model.");
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "full")
      m = ModelConfig::full();
    else if (preset == "tiny")
      m = ModelConfig::tiny();
    else
      throw ConfigError("config: unknown model preset \"" + preset + "\"");
  }
  fetch(j, "stem", m.stem);
  fetch(j, "layer1", m.layer1);
  fetch(j, "layer2", m.layer2);
  fetch(j, "layer3", m.layer3);
  fetch(j, "reint_s", m.reint_s);
  fetch(j, "reint_l", m.reint_l);
  fetch(j, "tail_mid", m.tail_mid);
  fetch(j, "use_reintegration", m.use_reintegration);
  fetch(j, "use_update", m.use_update);
}

inline void parse_train(const json& j, TrainConfig& t) {
  check_keys(j,
             {"iterations", "gamma", "lr0", "epochs", "decay_start_epoch", "batch_size", "crop",
              "seed", "shared_update", "residual_output", "loss_all_iterations", "hflip",
              "checkpoint_every", "max_steps"},
             "train.");
  fetch(j, "iterations", t.iterations);
  fetch(j, "gamma", t.gamma);
  fetch(j, "lr0", t.lr0);
  fetch(j, "epochs", t.epochs);
  fetch(j, "decay_start_epoch", t.decay_start_epoch);
  fetch(j, "batch_size", t.batch_size);
  fetch(j, "crop", t.crop);
  fetch(j, "seed", t.seed);
  fetch(j, "shared_update", t.shared_update);
  fetch(j, "residual_output", t.residual_output);
  fetch(j, "loss_all_iterations", t.loss_all_iterations);
  fetch(j, "hflip", t.hflip);
  fetch(j, "checkpoint_every", t.checkpoint_every);
  fetch(j, "max_steps", t.max_steps);
}

inline void parse_data(const json& j, DataSpec& d) {
  check_keys(j, {"root", "val_fraction", "synthetic"}, "data.");
  fetch(j, "root", d.root);
  fetch(j, "val_fraction", d.val_fraction);
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    check_keys(s,
               {"count", "size", "val_count", "seed", "polygons_min", "polygons_max",
                "area_min", "area_max", "alpha_min", "alpha_max", "channel_jitter",
                "feather_px"},
               "data.synthetic.");
    fetch(s, "count", d.synth_count);
    fetch(s, "size", d.synth_size);
    fetch(s, "val_count", d.synth_val_count);
    fetch(s, "seed", d.synth_seed);
    fetch(s, "polygons_min", d.synth.polygons_min);
    fetch(s, "polygons_max", d.synth.polygons_max);
    fetch(s, "area_min", d.synth.area_min);
    fetch(s, "area_max", d.synth.area_max);
    fetch(s, "alpha_min", d.synth.alpha_min);
    fetch(s, "alpha_max", d.synth.alpha_max);
    fetch(s, "channel_jitter", d.synth.channel_jitter);
    fetch(s, "feather_px", d.synth.feather_px);
  }
  if (!(d.val_fraction >= 0.0 && d.val_fraction < 1.0))
    throw ConfigError("config: data.val_fraction must lie in [0, 1)");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": not valid JSON: " + e.what());
  }
  detail::check_keys(j, {"model", "train", "data"}, "");
  RunConfig rc;
  if (j.contains("model")) detail::parse_model(j.at("model"), rc.model);
  if (j.contains("train")) detail::parse_train(j.at("train"), rc.train);
  if (j.contains("data")) detail::parse_data(j.at("data"), rc.data);
  // the architecture carries the recurrence flags and T
  rc.model.train_iterations = rc.train.iterations;
  rc.model.shared_update = rc.train.shared_update;
  rc.model.residual_output = rc.train.residual_output;
  rc.train.validate();
  rc.model.validate();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_run_config(text, path);
}

}  // namespace prnet
