// End-to-end checks of the prnet binary (path via PRNET_BIN).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "prnet/io/dataset.hpp"
#include "prnet/train/data.hpp"

namespace fs = std::filesystem;
using namespace prnet;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const char* bin = std::getenv("PRNET_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "PRNET_BIN must point at the prnet binary");
  const std::string out_file = "cli_capture.txt";
  const std::string cmd = std::string(bin) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out_file);
  r.output.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return r;
}

std::vector<uint8_t> file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(f), path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
}

const char* kTinyConfig = R"({
  "model": {"preset": "tiny"},
  "train": {"iterations": 2, "epochs": 2, "decay_start_epoch": 1, "batch_size": 4,
            "crop": 16, "lr0": 1e-3, "seed": 9, "checkpoint_every": 50},
  "data": {"synthetic": {"count": 8, "size": 16, "val_count": 4, "seed": 2}}
})";

/// One shared fixture: a micro model trained through the CLI plus a tiny
/// triplet dataset on disk.
struct Fixture {
  std::string dir = "cli_fixture";
  std::string config = dir + "/tiny.json";
  std::string run = dir + "/run";
  std::string data = dir + "/data";
  std::string checkpoint = run + "/final.prnc";

  Fixture() {
    static bool ready = false;
    if (ready) return;
    fs::create_directories(dir);
    write_text(config, kTinyConfig);
    auto r = run_cli("train --config " + config + " --out " + run);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    std::vector<NamedSample> samples;
    for (int i = 0; i < 3; ++i) {
      Rng rng = Rng::stream(77, uint64_t(i));
      NamedSample ns;
      ns.id = "img" + std::to_string(i);
      ns.sample = synth_shadow(synth_base(16, 16, rng), rng);
      samples.push_back(std::move(ns));
    }
    save_triplet_dir(data, samples);
    ready = true;
  }
};

}  // namespace

TEST_CASE("cli: train smoke produces checkpoints, log and manifest") {
  Fixture fx;
  CHECK(fs::is_regular_file(fx.run + "/final.prnc"));
  CHECK(fs::is_regular_file(fx.run + "/best.prnc"));
  CHECK(fs::is_regular_file(fx.run + "/train_log.jsonl"));
  CHECK(fs::is_regular_file(fx.run + "/manifest.json"));
}

TEST_CASE("cli: same command and seed reproduce the checkpoint bitwise") {
  Fixture fx;
  auto r = run_cli("train --config " + fx.config + " --out " + fx.dir + "/run_again");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(file_bytes(fx.checkpoint) == file_bytes(fx.dir + "/run_again/final.prnc"));
}

TEST_CASE("cli: config validation failures name the problem") {
  Fixture fx;
  write_text(fx.dir + "/bad_gamma.json",
             R"({"train": {"gamma": 0.0}, "data": {"synthetic": {"count": 2, "size": 16}}})");
  auto r = run_cli("train --config " + fx.dir + "/bad_gamma.json --out " + fx.dir + "/bad");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("prnet: error:") != std::string::npos);
  CHECK(r.output.find("gamma") != std::string::npos);

  write_text(fx.dir + "/bad_key.json", R"({"train": {"gama": 0.5}})");
  r = run_cli("train --config " + fx.dir + "/bad_key.json --out " + fx.dir + "/bad");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("train.gama") != std::string::npos);
}

TEST_CASE("cli: infer writes outputs and respects prefix consistency") {
  Fixture fx;
  Rng rng = Rng::stream(123, 0);
  auto sample = synth_shadow(synth_base(16, 16, rng), rng);
  write_png(fx.dir + "/shadow.png", tensor_to_image(sample.shadow));
  write_png(fx.dir + "/mask.png", mask_to_image(sample.mask));

  auto r1 = run_cli("infer --checkpoint " + fx.checkpoint + " --image " + fx.dir +
                    "/shadow.png --mask " + fx.dir + "/mask.png --out " + fx.dir +
                    "/infer1 --iterations 1");
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
  auto r3 = run_cli("infer --checkpoint " + fx.checkpoint + " --image " + fx.dir +
                    "/shadow.png --mask " + fx.dir + "/mask.png --out " + fx.dir +
                    "/infer3 --iterations 3 --emit-per-iteration");
  REQUIRE_MESSAGE(r3.exit_code == 0, r3.output);
  // iterations beyond the trained T are allowed but warned about
  CHECK(r3.output.find("warning") != std::string::npos);
  CHECK(file_bytes(fx.dir + "/infer1/output.png") ==
        file_bytes(fx.dir + "/infer3/iter_01.png"));
  CHECK(fs::is_regular_file(fx.dir + "/infer3/iter_03.png"));

  auto bad = run_cli("infer --checkpoint " + fx.checkpoint + " --image " + fx.dir +
                     "/shadow.png --mask " + fx.dir + "/missing_mask.png --out " + fx.dir +
                     "/inferx");
  CHECK(bad.exit_code != 0);
  CHECK(bad.output.find("missing_mask.png") != std::string::npos);

  auto zero = run_cli("infer --checkpoint " + fx.checkpoint + " --image " + fx.dir +
                      "/shadow.png --mask " + fx.dir + "/mask.png --out " + fx.dir +
                      "/inferz --iterations 0");
  CHECK(zero.exit_code != 0);
}

TEST_CASE("cli: eval scores a triplet directory") {
  Fixture fx;
  auto r = run_cli("eval --checkpoint " + fx.checkpoint + " --data " + fx.data + " --out " +
                   fx.dir + "/eval --iterations 2");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("rmse_lab(all) by iteration:") != std::string::npos);
  CHECK(fs::is_regular_file(fx.dir + "/eval/records.jsonl"));

  auto zero = run_cli("eval --checkpoint " + fx.checkpoint + " --data " + fx.data +
                      " --iterations 0");
  CHECK(zero.exit_code != 0);

  auto empty = run_cli("eval --checkpoint " + fx.checkpoint + " --data " + fx.dir +
                       "/nowhere");
  CHECK(empty.exit_code != 0);
}

TEST_CASE("cli: inspect reports the parameter anchor") {
  auto r = run_cli("inspect --preset full");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("total parameters: 2554979") != std::string::npos);
}

TEST_CASE("cli: image/mask size mismatch is rejected") {
  Fixture fx;
  Rng rng = Rng::stream(124, 0);
  auto sample = synth_shadow(synth_base(16, 16, rng), rng);
  auto small = synth_shadow(synth_base(12, 12, rng), rng);
  write_png(fx.dir + "/img16.png", tensor_to_image(sample.shadow));
  write_png(fx.dir + "/mask12.png", mask_to_image(small.mask));
  auto r = run_cli("infer --checkpoint " + fx.checkpoint + " --image " + fx.dir +
                   "/img16.png --mask " + fx.dir + "/mask12.png --out " + fx.dir + "/mm");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("disagree") != std::string::npos);
}
