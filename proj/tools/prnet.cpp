// prnet: train / infer / eval / inspect for the progressive recurrent
// shadow-removal network.
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prnet/cli/config_io.hpp"
#include "prnet/io/dataset.hpp"
#include "prnet/metrics/metrics.hpp"
#include "prnet/model/report.hpp"
#include "prnet/train/checkpoint.hpp"
#include "prnet/train/loop.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prnet;

namespace {

struct PhaseTimer {
  using clock = std::chrono::steady_clock;
  clock::time_point t0 = clock::now();
  clock::time_point last = clock::now();
  json phases = json::object();

  void phase(const std::string& name) {
    const auto now = clock::now();
    phases[name] = std::chrono::duration<double>(now - last).count();
    last = now;
  }
  double total() const { return std::chrono::duration<double>(clock::now() - t0).count(); }
};

/// Every run emits exactly one manifest: a file when --out is given,
/// otherwise one JSON line on the diagnostic stream.
void emit_manifest(const std::string& out_dir, json manifest, PhaseTimer& timer) {
  manifest["timings"] = timer.phases;
  manifest["timings"]["total"] = timer.total();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "manifest.json");
    if (!f) throw IoError("cannot write manifest under " + out_dir);
    f << manifest.dump(2) << "\n";
  } else {
    std::cerr << "prnet: manifest: " << manifest.dump() << "\n";
  }
}

json base_manifest(const std::string& command, uint64_t seed) {
  json m;
  m["command"] = command;
  m["seed"] = seed;
  return m;
}

void split_train_val(std::vector<NamedSample> all, double val_fraction,
                     std::vector<ShadowSample>& train, std::vector<ShadowSample>& val) {
  const size_t n_val = size_t(std::llround(double(all.size()) * val_fraction));
  for (size_t i = 0; i < all.size(); ++i) {
    if (i + n_val >= all.size())
      val.push_back(std::move(all[i].sample));
    else
      train.push_back(std::move(all[i].sample));
  }
}

// -----------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::string resume_path;
  int64_t seed = -1;
  int threads = 1;
};

int cmd_train(const TrainArgs& args) {
  PhaseTimer timer;
  RunConfig rc = load_run_config(args.config_path);
  if (args.seed >= 0) rc.train.seed = uint64_t(args.seed);

  std::vector<ShadowSample> train_set, val_set;
  if (rc.data.root.empty()) {
    train_set = synth_dataset(rc.data.synth_count, rc.data.synth_size, rc.data.synth_seed,
                              rc.data.synth);
    val_set = synth_dataset(rc.data.synth_val_count, rc.data.synth_size,
                            rc.data.synth_seed + 1000003, rc.data.synth);
  } else {
    split_train_val(load_triplet_dir(rc.data.root), rc.data.val_fraction, train_set, val_set);
  }

  ModelParams<float> params;
  AdamState adam;
  int start_epoch = 0;
  if (!args.resume_path.empty()) {
    Checkpoint ck = load_checkpoint(args.resume_path);
    require_config(ck, rc.model);
    params = std::move(ck.params);
    adam = std::move(ck.adam);
    start_epoch = int(ck.epoch);
    std::cout << "resuming from " << args.resume_path << " at epoch " << start_epoch << "\n";
  } else {
    params = init_model<float>(rc.model, rc.train.seed);
    adam = init_adam(params);
  }
  timer.phase("setup");

  fs::create_directories(args.out_dir);
  std::ofstream log_file(fs::path(args.out_dir) / "train_log.jsonl",
                         start_epoch ? std::ios::app : std::ios::trunc);
  if (!log_file) throw IoError("cannot write train log under " + args.out_dir);

  TrainHooks hooks;
  hooks.save = [&](const char* kind, int next_epoch) {
    std::string name;
    if (std::strcmp(kind, "periodic") == 0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "epoch_%04d.prnc", next_epoch);
      name = buf;
    } else {
      name = std::string(kind) + ".prnc";
    }
    save_checkpoint((fs::path(args.out_dir) / name).string(), params, adam,
                    uint32_t(next_epoch));
  };
  hooks.on_epoch = [&](const EpochStats& s) {
    json rec;
    rec["epoch"] = s.epoch;
    rec["lr"] = s.lr;
    rec["train_loss"] = s.train_loss;
    rec["val_psnr"] = s.val_psnr;
    rec["val_rmse_all"] = s.val_rmse_all;
    rec["val_rmse_shadow"] = s.val_rmse_shadow;
    rec["steps"] = s.steps;
    log_file << rec.dump() << "\n";
    log_file.flush();
    std::printf("epoch %4d/%d  loss %.5f  val_psnr %6.2f dB  val_rmse %6.3f  lr %.2e\n",
                s.epoch + 1, rc.train.epochs, s.train_loss, s.val_psnr, s.val_rmse_all, s.lr);
    std::fflush(stdout);
  };

  auto result = train_loop(train_set, val_set, rc.train, params, adam, start_epoch, hooks);
  timer.phase("train");

  json manifest = base_manifest("train", rc.train.seed);
  manifest["config"] = args.config_path;
  manifest["resume"] = args.resume_path.empty() ? json() : json(args.resume_path);
  manifest["config_hash"] = rc.model.hash();
  manifest["steps"] = result.steps;
  manifest["best_val_psnr"] = result.best_val_psnr;
  manifest["outputs"] = {"final.prnc", "best.prnc", "train_log.jsonl"};
  emit_manifest(args.out_dir, std::move(manifest), timer);
  std::cout << "final checkpoint: " << (fs::path(args.out_dir) / "final.prnc").string() << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// infer

struct InferArgs {
  std::string checkpoint;
  std::string image_path;
  std::string mask_path;
  std::string out_dir;
  int iterations = -1;  // -1: use the trained T
  bool emit_per_iteration = false;
};

int cmd_infer(const InferArgs& args) {
  PhaseTimer timer;
  Checkpoint ck = load_checkpoint(args.checkpoint);
  auto image = image_to_tensor(read_png(args.image_path));
  auto mask = mask_to_tensor(read_png(args.mask_path));
  if (image.shape().h != mask.shape().h || image.shape().w != mask.shape().w)
    throw DimensionError("infer: image " + image.shape().str() + " and mask " +
                         mask.shape().str() + " disagree on size");
  const int trained_t = ck.cfg.train_iterations;
  if (args.iterations != -1 && args.iterations < 1)
    throw ContractError("infer: iterations must be >= 1");
  const int iterations = args.iterations == -1 ? trained_t : args.iterations;
  if (iterations > trained_t)
    std::cerr << "prnet: warning: running " << iterations << " iterations on a model trained"
              << " with T=" << trained_t << "; expect a plateau, not gains\n";
  timer.phase("setup");

  auto trace = forward<float>(nullptr, image, mask, ck.params, iterations);
  timer.phase("run");

  fs::create_directories(args.out_dir);
  json outputs = json::array();
  if (args.emit_per_iteration) {
    for (int k = 1; k <= iterations; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "iter_%02d.png", k);
      write_png((fs::path(args.out_dir) / buf).string(),
                tensor_to_image(trace.predictions[size_t(k - 1)]));
      outputs.push_back(buf);
    }
  }
  write_png((fs::path(args.out_dir) / "output.png").string(),
            tensor_to_image(trace.predictions.back()));
  outputs.push_back("output.png");
  timer.phase("write");

  json manifest = base_manifest("infer", 0);
  manifest["checkpoint"] = args.checkpoint;
  manifest["config_hash"] = ck.config_hash;
  manifest["image"] = args.image_path;
  manifest["mask"] = args.mask_path;
  manifest["iterations"] = iterations;
  manifest["outputs"] = outputs;
  emit_manifest(args.out_dir, std::move(manifest), timer);
  std::cout << "wrote " << (fs::path(args.out_dir) / "output.png").string() << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;
  int iterations = -1;
  int threads = 1;
};

struct EvalRow {
  std::string id;
  int iteration = 0;
  std::array<MetricReport, 3> reports;
};

int cmd_eval(const EvalArgs& args) {
  PhaseTimer timer;
  Checkpoint ck = load_checkpoint(args.checkpoint);
  auto samples = load_triplet_dir(args.data_dir);
  if (args.iterations != -1 && args.iterations < 1)
    throw ContractError("eval: iterations must be >= 1");
  const int iterations = args.iterations == -1 ? ck.cfg.train_iterations : args.iterations;
  const int threads = std::max(1, args.threads);
  timer.phase("setup");

  // per-image scoring is independent; rows land in preassigned slots so the
  // aggregation order never depends on thread scheduling
  std::vector<std::vector<EvalRow>> rows(samples.size(), std::vector<EvalRow>{});
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= samples.size()) break;
      const auto& ns = samples[i];
      auto trace =
          forward<float>(nullptr, ns.sample.shadow, ns.sample.mask, ck.params, iterations);
      for (int k = 1; k <= iterations; ++k) {
        EvalRow row;
        row.id = ns.id;
        row.iteration = k;
        row.reports =
            evaluate(trace.predictions[size_t(k - 1)], ns.sample.free, ns.sample.mask);
        rows[i].push_back(std::move(row));
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  timer.phase("run");

  std::ofstream records;
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    records.open(fs::path(args.out_dir) / "records.jsonl", std::ios::trunc);
    if (!records) throw IoError("cannot write records under " + args.out_dir);
  }
  std::vector<std::array<MetricReport, 3>> agg(static_cast<size_t>(iterations));
  for (const auto& per_image : rows)
    for (const auto& row : per_image)
      for (int r = 0; r < 3; ++r) {
        auto& slot = agg[size_t(row.iteration - 1)][size_t(r)];
        slot.region = row.reports[size_t(r)].region;
        slot.psnr += row.reports[size_t(r)].psnr;
        slot.ssim += row.reports[size_t(r)].ssim;
        slot.rmse_lab += row.reports[size_t(r)].rmse_lab;
        if (records) {
          json rec;
          rec["id"] = row.id;
          rec["iteration"] = row.iteration;
          rec["region"] = region_name(row.reports[size_t(r)].region);
          rec["psnr"] = row.reports[size_t(r)].psnr;
          rec["ssim"] = row.reports[size_t(r)].ssim;
          rec["rmse_lab"] = row.reports[size_t(r)].rmse_lab;
          records << rec.dump() << "\n";
        }
      }
  const double n = double(samples.size());
  std::printf("%-5s %-11s %9s %9s %9s\n", "iter", "region", "psnr", "ssim", "rmse_lab");
  for (int k = 1; k <= iterations; ++k)
    for (int r = 0; r < 3; ++r) {
      const auto& slot = agg[size_t(k - 1)][size_t(r)];
      std::printf("%-5d %-11s %9.4f %9.6f %9.4f\n", k, region_name(slot.region),
                  slot.psnr / n, slot.ssim / n, slot.rmse_lab / n);
    }
  std::printf("rmse_lab(all) by iteration:");
  for (int k = 1; k <= iterations; ++k)
    std::printf(" %.4f", agg[size_t(k - 1)][2].rmse_lab / n);
  std::printf("\n");
  timer.phase("write");

  json manifest = base_manifest("eval", 0);
  manifest["checkpoint"] = args.checkpoint;
  manifest["config_hash"] = ck.config_hash;
  manifest["data"] = args.data_dir;
  manifest["images"] = samples.size();
  manifest["iterations"] = iterations;
  manifest["threads"] = threads;
  emit_manifest(args.out_dir, std::move(manifest), timer);
  return 0;
}

// -----------------------------------------------------------------------
// inspect

struct InspectArgs {
  std::string checkpoint;
  std::string config_path;
  std::string preset;
  std::string out_dir;
  int height = 256;
  int width = 256;
  int iterations = -1;
};

int cmd_inspect(const InspectArgs& args) {
  PhaseTimer timer;
  ModelParams<float> params;
  std::string source;
  if (!args.checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(args.checkpoint);
    params = std::move(ck.params);
    source = args.checkpoint;
  } else if (!args.config_path.empty()) {
    RunConfig rc = load_run_config(args.config_path);
    params = init_model<float>(rc.model, 0);
    source = args.config_path;
  } else {
    ModelConfig cfg;
    if (args.preset == "full" || args.preset.empty())
      cfg = ModelConfig::full();
    else if (args.preset == "tiny")
      cfg = ModelConfig::tiny();
    else
      throw ConfigError("inspect: unknown preset \"" + args.preset + "\"");
    params = init_model<float>(cfg, 0);
    source = "preset:" + (args.preset.empty() ? std::string("full") : args.preset);
  }
  const ModelConfig& cfg = params.cfg;
  if (args.iterations != -1 && args.iterations < 1)
    throw ContractError("inspect: iterations must be >= 1");
  const int iterations = args.iterations == -1 ? cfg.train_iterations : args.iterations;
  timer.phase("setup");

  const auto pr = count_params_report(params);
  const auto fr = count_flops_report(cfg, args.height, args.width);
  std::printf("source: %s\n", source.c_str());
  std::printf("architecture: %s\n", cfg.canonical().c_str());
  std::printf("parameters:\n");
  std::printf("  extractor      %10" PRId64 "\n", pr.extractor);
  std::printf("  reintegration  %10" PRId64 "\n", pr.reintegration);
  std::printf("  gru            %10" PRId64 "\n", pr.gru);
  std::printf("  tail           %10" PRId64 "\n", pr.tail);
  std::printf("total parameters: %" PRId64 "\n", pr.total);
  std::printf("flops @ %dx%d (multiply-accumulate convention):\n", args.height, args.width);
  std::printf("  fixed          %10.2f GFLOP\n", fr.fixed / 1e9);
  std::printf("  per-iteration  %10.2f GFLOP\n", fr.per_iter / 1e9);
  std::printf("total flops (T=%d): %.2f GFLOP\n", iterations, fr.total(iterations) / 1e9);
  timer.phase("run");

  json manifest = base_manifest("inspect", 0);
  manifest["source"] = source;
  manifest["total_params"] = pr.total;
  manifest["fixed_gflop"] = fr.fixed / 1e9;
  manifest["per_iter_gflop"] = fr.per_iter / 1e9;
  emit_manifest(args.out_dir, std::move(manifest), timer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRNet: progressive recurrent shadow removal"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model (single-threaded, deterministic)");
  train->add_option("--config", train_args.config_path, "JSON run configuration")->required();
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  train->add_option("--seed", train_args.seed, "override train.seed");
  train->add_option("--resume", train_args.resume_path, "resume from a checkpoint");
  train->add_option("--threads", train_args.threads,
                    "accepted for symmetry; training is single-threaded");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "run shadow removal on one image");
  infer->add_option("--checkpoint", infer_args.checkpoint, "PRNC checkpoint")->required();
  infer->add_option("--image", infer_args.image_path, "shadow image (8-bit PNG)")->required();
  infer->add_option("--mask", infer_args.mask_path, "shadow mask (8-bit PNG, >=128 = shadow)")
      ->required();
  infer->add_option("--out", infer_args.out_dir, "output directory")->required();
  infer->add_option("--iterations", infer_args.iterations,
                    "inference iterations (default: trained T)");
  infer->add_flag("--emit-per-iteration", infer_args.emit_per_iteration,
                  "write every intermediate prediction");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score a triplet dataset");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "PRNC checkpoint")->required();
  eval_cmd->add_option("--data", eval_args.data_dir, "dataset root (shadow/ free/ mask/)")
      ->required();
  eval_cmd->add_option("--out", eval_args.out_dir, "output directory for records");
  eval_cmd->add_option("--iterations", eval_args.iterations,
                       "evaluate iterations 1..K (default: trained T)");
  eval_cmd->add_option("--threads", eval_args.threads, "parallel scoring workers");

  InspectArgs inspect_args;
  auto* inspect = app.add_subcommand("inspect", "report parameters and FLOPs");
  inspect->add_option("--checkpoint", inspect_args.checkpoint, "PRNC checkpoint");
  inspect->add_option("--config", inspect_args.config_path, "JSON run configuration");
  inspect->add_option("--preset", inspect_args.preset, "full | tiny");
  inspect->add_option("--height", inspect_args.height, "FLOP resolution height");
  inspect->add_option("--width", inspect_args.width, "FLOP resolution width");
  inspect->add_option("--iterations", inspect_args.iterations, "T for the total");
  inspect->add_option("--out", inspect_args.out_dir, "manifest directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "prnet: error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (inspect->parsed()) return cmd_inspect(inspect_args);
  } catch (const std::exception& e) {
    std::cerr << "prnet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
