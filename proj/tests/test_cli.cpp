#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "forestseg/io.hpp"

using namespace forestseg;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return FORESTSEG_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "forestseg_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// One small scene piped through the whole preprocessing chain; shared by
/// the CLI cases below. Returns the directory.
const fs::path& prepared_pipeline() {
  static const fs::path dir = [] {
    const auto d = work_dir() / "pipeline";
    fs::create_directories(d);
    const auto cfg = d / "scene.cfg";
    std::ofstream(cfg) << "extent_x = 18\nextent_y = 18\nn_trees = 9\n"
                       << "total_points = 16000\nseed = 21\n";
    REQUIRE(run("synth --config " + cfg.string() + " --out " + d.string()) == 0);
    REQUIRE(run("sor --in " + (d / "swir.msc").string() + " --out " +
                (d / "swir_f.msc").string()) == 0);
    REQUIRE(run("sor --in " + (d / "nir.msc").string() + " --out " +
                (d / "nir_f.msc").string()) == 0);
    REQUIRE(run("sor --in " + (d / "green.msc").string() + " --out " +
                (d / "green_f.msc").string()) == 0);
    REQUIRE(run("merge --swir " + (d / "swir_f.msc").string() + " --nir " +
                (d / "nir_f.msc").string() + " --green " + (d / "green_f.msc").string() +
                " --radius-m 0.25 --out " + (d / "fused.msc").string()) == 0);
    REQUIRE(run("normalize --in " + (d / "fused.msc").string() + " --out " +
                (d / "norm.msc").string()) == 0);
    REQUIRE(run("split --in " + (d / "norm.msc").string() + " --train-out " +
                (d / "train.msc").string() + " --test-out " + (d / "test.msc").string() +
                " --ratio 0.8 --seed 5") == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth emits three channel files, a reference, and a manifest") {
  const auto& d = prepared_pipeline();
  for (const char* f : {"swir.msc", "nir.msc", "green.msc", "reference.msc"}) {
    CHECK(fs::exists(d / f));
  }
  const auto manifest = nlohmann::json::parse(slurp(d / "run.manifest.json"));
  CHECK(manifest["subcommand"] == "synth");
  CHECK(manifest["parameters"]["seed"] == 21);
  CHECK(manifest.contains("duration_ms"));
  CHECK(manifest["outputs"].size() == 4);
}

TEST_CASE("pipelined subcommands reproduce the ablate row bit-for-bit") {
  const auto& d = prepared_pipeline();
  const std::string train_file = (d / "train.msc").string();
  const std::string test_file = (d / "test.msc").string();

  // Single-call ablation, one scenario.
  REQUIRE(run("ablate --train " + train_file + " --test " + test_file +
              " --scenarios +swir+nir+green --trees 15 --seed 77 --out " +
              (d / "ab.txt").string() + " --kv-out " + (d / "ab.kv").string()) == 0);
  const std::string kv = slurp(d / "ab.kv");
  REQUIRE(!kv.empty());

  // The row records the derived per-scenario seed; replay with it.
  const auto seed_pos = kv.find("seed=");
  REQUIRE(seed_pos != std::string::npos);
  const auto seed_end = kv.find(' ', seed_pos);
  const std::string seed = kv.substr(seed_pos + 5, seed_end - seed_pos - 5);

  REQUIRE(run("features --in " + train_file + " --scenario +swir+nir+green --out " +
              (d / "table.txt").string()) == 0);
  REQUIRE(run("train --train " + train_file +
              " --scenario +swir+nir+green --trees 15 --seed " + seed + " --model " +
              (d / "model.bin").string()) == 0);
  REQUIRE(run("predict --model " + (d / "model.bin").string() + " --in " + test_file +
              " --out " + (d / "pred.msc").string()) == 0);
  REQUIRE(run("evaluate --truth " + test_file + " --pred " + (d / "pred.msc").string() +
              " --out " + (d / "eval.txt").string() + " --kv-out " +
              (d / "eval.kv").string()) == 0);

  // The metric fields (full precision) must agree byte for byte.
  std::string eval_kv = slurp(d / "eval.kv");
  while (!eval_kv.empty() && (eval_kv.back() == '\n' || eval_kv.back() == '\r')) {
    eval_kv.pop_back();
  }
  const auto metrics_pos = kv.find(" iou_ground=");
  REQUIRE(metrics_pos != std::string::npos);
  std::string ablate_metrics = kv.substr(metrics_pos);
  while (!ablate_metrics.empty() &&
         (ablate_metrics.back() == '\n' || ablate_metrics.back() == '\r')) {
    ablate_metrics.pop_back();
  }
  CHECK(ablate_metrics == eval_kv);

  // Feature table export exists and carries the expected header.
  std::ifstream table(d / "table.txt");
  std::string header;
  std::getline(table, header);
  CHECK(header == "x y z_norm r_swir r_nir r_green");
}

TEST_CASE("repeated runs with the same seed produce identical outputs") {
  const auto& d = prepared_pipeline();
  for (int pass = 0; pass < 2; ++pass) {
    const auto out = d / ("rep" + std::to_string(pass) + ".msc");
    REQUIRE(run("split --in " + (d / "norm.msc").string() + " --train-out " +
                out.string() + " --test-out " + (d / "rep_test.msc").string() +
                " --ratio 0.8 --seed 9") == 0);
  }
  CHECK(slurp(d / "rep0.msc") == slurp(d / "rep1.msc"));
}

TEST_CASE("exit codes: usage 1, missing input 2, bad value 1") {
  const auto& d = prepared_pipeline();
  CHECK(run("no-such-subcommand") == 1);
  CHECK(run("merge --bogus-flag x") == 1);
  CHECK(run("normalize --in /nonexistent/f.msc --out " + (d / "x.msc").string()) == 2);
  CHECK(run("features --in " + (d / "norm.msc").string() + " --scenario nope --out " +
            (d / "x.txt").string()) == 1);
  CHECK(run("sor --in " + (d / "swir.msc").string() + " --out " +
            (d / "x.msc").string() + " --sigma -1") == 1);
}

TEST_CASE("manifests are written beside single-file outputs") {
  const auto& d = prepared_pipeline();
  CHECK(fs::exists(d / "fused.msc.manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(d / "fused.msc.manifest.json"));
  CHECK(manifest["subcommand"] == "merge");
  CHECK(manifest["parameters"]["radius_m"] == 0.25);
  CHECK(manifest["inputs"].size() == 3);
}
