// forestseg: multispectral LiDAR forest segmentation toolkit.
//
// Subcommands compose into the processing pipeline: synth -> sor (per
// channel) -> merge -> normalize -> split -> features/train -> predict ->
// evaluate, with `ablate` bundling the feature-scenario study and
// `vi-report` ranking the vegetation indices. Every run writes a manifest
// with the full parameter set next to its output.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forestseg/evaluation.hpp"
#include "forestseg/features.hpp"
#include "forestseg/io.hpp"
#include "forestseg/preprocess.hpp"
#include "forestseg/random_forest.hpp"
#include "forestseg/rng.hpp"
#include "forestseg/spectral.hpp"
#include "forestseg/synthetic.hpp"
#include "forestseg/threads.hpp"
#include "forestseg/types.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace forestseg;

namespace {

using Clock = std::chrono::steady_clock;

struct RunContext {
  std::string subcommand;
  json parameters = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();

  void write_manifest(const fs::path& beside) const {
    json manifest;
    manifest["subcommand"] = subcommand;
    manifest["tool_version"] = kVersion;
    manifest["parameters"] = parameters;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    manifest["duration_ms"] =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    std::ofstream out(beside);
    if (!out) throw IoError("cannot write manifest " + beside.string());
    out << manifest.dump(2) << '\n';
  }
};

fs::path manifest_path(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

CloudFormat parse_format(const std::string& name) {
  if (name == "text") return CloudFormat::Text;
  if (name == "binary") return CloudFormat::Binary;
  throw ValidationError("unknown format '" + name + "' (text|binary)");
}

void log_line(const std::string& msg) { std::cout << "forestseg: " << msg << "\n"; }

MultispectralCloud load_normalized(const fs::path& path) {
  auto cloud = read_multispectral_cloud(path);
  if (!cloud.has_z_normalized()) {
    throw ValidationError(path.string() +
                          " has no normalized heights; run `normalize` first");
  }
  return cloud;
}

std::vector<FeatureScenario> parse_scenarios(const std::string& arg) {
  std::vector<FeatureScenario> scenarios;
  if (arg == "all") {
    scenarios = ablation_scenarios();
  } else {
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) scenarios.push_back(scenario_from_name(item));
    }
  }
  if (scenarios.empty()) throw ValidationError("no scenarios selected");
  return scenarios;
}

void add_forest_options(CLI::App* cmd, ForestParams& params, std::string& max_features,
                        std::string& class_weight) {
  cmd->add_option("--trees", params.n_estimators, "number of trees")
      ->default_val(200);
  cmd->add_option("--max-depth", params.max_depth, "maximum tree depth")
      ->default_val(50);
  cmd->add_option("--max-features", max_features, "features per split: log2|sqrt|all")
      ->default_val("log2");
  cmd->add_option("--min-samples-split", params.min_samples_split,
                  "minimum draws to split a node")
      ->default_val(2);
  cmd->add_option("--min-samples-leaf", params.min_samples_leaf,
                  "minimum draws per leaf")
      ->default_val(10);
  cmd->add_option("--class-weight", class_weight, "balanced|uniform")
      ->default_val("balanced");
}

void finish_forest_params(ForestParams& params, const std::string& max_features,
                          const std::string& class_weight) {
  if (max_features == "log2") {
    params.max_features = MaxFeaturesRule::Log2;
  } else if (max_features == "sqrt") {
    params.max_features = MaxFeaturesRule::Sqrt;
  } else if (max_features == "all") {
    params.max_features = MaxFeaturesRule::All;
  } else {
    throw ValidationError("unknown --max-features '" + max_features + "'");
  }
  if (class_weight == "balanced") {
    params.class_weight = ClassWeightMode::Balanced;
  } else if (class_weight == "uniform") {
    params.class_weight = ClassWeightMode::Uniform;
  } else {
    throw ValidationError("unknown --class-weight '" + class_weight + "'");
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multispectral LiDAR forest semantic segmentation toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: FORESTSEG_THREADS or all cores)");

  int exit_code = 0;
  std::string fmt = "binary";

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic scene");
  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  synth->add_option("--config", synth_config, "scene config file (key = value)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the config seed")
      ->each([&](const std::string&) { synth_seed_set = true; });
  synth->add_option("--format", fmt, "text|binary")->default_val("binary");
  synth->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "synth";
    SceneSpec spec;
    if (!synth_config.empty()) {
      spec = read_scene_spec(synth_config);
      ctx.inputs.push_back(synth_config);
    }
    if (synth_seed_set) spec.seed = synth_seed;
    ctx.parameters = {{"config", synth_config}, {"seed", spec.seed},
                      {"format", fmt},          {"total_points", spec.total_points},
                      {"n_trees", spec.n_trees}, {"threads", threads}};
    const auto format = parse_format(fmt);
    fs::create_directories(synth_out);

    const auto scene = generate_scene(spec);
    const fs::path dir(synth_out);
    write_channel_cloud(scene.swir, dir / "swir.msc", format);
    write_channel_cloud(scene.nir, dir / "nir.msc", format);
    write_channel_cloud(scene.green, dir / "green.msc", format);
    write_multispectral_cloud(scene.reference, dir / "reference.msc", format);
    for (const char* name : {"swir.msc", "nir.msc", "green.msc", "reference.msc"}) {
      ctx.outputs.push_back((dir / name).string());
    }
    ctx.write_manifest(dir / "run.manifest.json");
    log_line("scene: " + std::to_string(scene.reference.size()) + " reference points, " +
             std::to_string(scene.swir.size()) + "/" + std::to_string(scene.nir.size()) +
             "/" + std::to_string(scene.green.size()) + " channel points");
  });

  // ---- sor ----
  auto* sor = app.add_subcommand("sor", "statistical outlier removal");
  std::string sor_in, sor_out;
  SorParams sor_params;
  sor->add_option("--in", sor_in, "input cloud")->required();
  sor->add_option("--out", sor_out, "output cloud")->required();
  sor->add_option("--k", sor_params.k_neighbors, "neighbors per point")->default_val(6);
  sor->add_option("--sigma", sor_params.sigma_multiplier, "stddev multiplier")
      ->default_val(1.0);
  sor->add_option("--format", fmt, "text|binary")->default_val("binary");
  sor->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "sor";
    ctx.parameters = {{"k", sor_params.k_neighbors},
                      {"sigma", sor_params.sigma_multiplier},
                      {"format", fmt},
                      {"threads", threads}};
    ctx.inputs.push_back(sor_in);
    ctx.outputs.push_back(sor_out);
    const auto format = parse_format(fmt);
    const auto header = read_cloud_header(sor_in);
    std::size_t removed = 0;
    if (header.multispectral()) {
      const auto cloud = read_multispectral_cloud(sor_in);
      auto result = sor_filter(cloud, sor_params);
      removed = result.removed.size();
      write_multispectral_cloud(result.filtered, sor_out, format);
    } else {
      Channel ch = Channel::Swir;
      for (Channel c : kAllChannels) {
        if (header.has_channel(c)) ch = c;
      }
      const auto cloud = read_channel_cloud(sor_in, ch);
      auto result = sor_filter(cloud, sor_params);
      removed = result.removed.size();
      write_channel_cloud(result.filtered, sor_out, format);
    }
    ctx.write_manifest(manifest_path(sor_out));
    log_line("sor: removed " + std::to_string(removed) + " of " +
             std::to_string(header.point_count) + " points");
  });

  // ---- merge ----
  auto* merge = app.add_subcommand("merge", "fuse the three channel clouds");
  std::string merge_swir, merge_nir, merge_green, merge_out;
  MergeParams merge_params;
  merge->add_option("--swir", merge_swir, "SWIR cloud")->required();
  merge->add_option("--nir", merge_nir, "NIR cloud")->required();
  merge->add_option("--green", merge_green, "GREEN cloud")->required();
  merge->add_option("--out", merge_out, "fused output")->required();
  merge->add_option("--radius-m", merge_params.radius_m, "search radius in meters")
      ->default_val(0.25);
  merge->add_option("--format", fmt, "text|binary")->default_val("binary");
  merge->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "merge";
    ctx.parameters = {{"radius_m", merge_params.radius_m},
                      {"format", fmt},
                      {"threads", threads}};
    ctx.inputs = {merge_swir, merge_nir, merge_green};
    ctx.outputs.push_back(merge_out);
    const auto swir = read_channel_cloud(merge_swir, Channel::Swir);
    const auto nir = read_channel_cloud(merge_nir, Channel::Nir);
    const auto green = read_channel_cloud(merge_green, Channel::Green);
    const auto fused = merge_channels(swir, nir, green, merge_params);
    write_multispectral_cloud(fused, merge_out, parse_format(fmt));
    ctx.write_manifest(manifest_path(merge_out));
    log_line("merge: " + std::to_string(fused.size()) + " fused points from " +
             std::to_string(swir.size() + nir.size() + green.size()) + " candidates");
  });

  // ---- normalize ----
  auto* normalize = app.add_subcommand("normalize", "height normalization");
  std::string norm_in, norm_out;
  HeightNormParams norm_params;
  normalize->add_option("--in", norm_in, "input fused cloud")->required();
  normalize->add_option("--out", norm_out, "output cloud with normalized heights")
      ->required();
  normalize->add_option("--cell-size-m", norm_params.cell_size_m, "terrain grid cell size")
      ->default_val(1.0);
  normalize->add_option("--format", fmt, "text|binary")->default_val("binary");
  normalize->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "normalize";
    ctx.parameters = {{"cell_size_m", norm_params.cell_size_m},
                      {"format", fmt},
                      {"threads", threads}};
    ctx.inputs.push_back(norm_in);
    ctx.outputs.push_back(norm_out);
    const auto cloud = read_multispectral_cloud(norm_in);
    write_multispectral_cloud(normalize_height(cloud, norm_params), norm_out,
                              parse_format(fmt));
    ctx.write_manifest(manifest_path(norm_out));
    log_line("normalize: " + std::to_string(cloud.size()) + " points");
  });

  // ---- split ----
  auto* split = app.add_subcommand("split", "train/test split");
  std::vector<std::string> split_in;
  std::string split_train_out, split_test_out, split_unit = "per-point";
  SplitSpec split_spec;
  split->add_option("--in", split_in, "input cloud(s)")->required();
  split->add_option("--train-out", split_train_out,
                    "train output (file for per-point, directory for per-plot)")
      ->required();
  split->add_option("--test-out", split_test_out,
                    "test output (file for per-point, directory for per-plot)")
      ->required();
  split->add_option("--ratio", split_spec.ratio_train, "train fraction")->default_val(0.8);
  split->add_option("--unit", split_unit, "per-point|per-plot")->default_val("per-point");
  split->add_option("--seed", split_spec.seed, "shuffle seed")->default_val(0);
  split->add_option("--format", fmt, "text|binary")->default_val("binary");
  split->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "split";
    ctx.parameters = {{"ratio", split_spec.ratio_train},
                      {"unit", split_unit},
                      {"seed", split_spec.seed},
                      {"format", fmt},
                      {"threads", threads}};
    ctx.inputs = split_in;
    if (split_unit == "per-point") {
      split_spec.unit = SplitUnit::PerPoint;
    } else if (split_unit == "per-plot") {
      split_spec.unit = SplitUnit::PerPlot;
    } else {
      throw ValidationError("unknown --unit '" + split_unit + "'");
    }
    const auto format = parse_format(fmt);
    std::vector<MultispectralCloud> clouds;
    for (const auto& path : split_in) clouds.push_back(read_multispectral_cloud(path));
    const auto result = split_train_test(clouds, split_spec);

    if (split_spec.unit == SplitUnit::PerPoint) {
      write_multispectral_cloud(result.train[0], split_train_out, format);
      write_multispectral_cloud(result.test[0], split_test_out, format);
      ctx.outputs = {split_train_out, split_test_out};
      ctx.write_manifest(manifest_path(split_train_out));
      log_line("split: " + std::to_string(result.train[0].size()) + " train / " +
               std::to_string(result.test[0].size()) + " test points");
    } else {
      fs::create_directories(split_train_out);
      fs::create_directories(split_test_out);
      std::size_t i = 0;
      for (const auto& cloud : result.train) {
        const auto p = fs::path(split_train_out) / ("plot_" + std::to_string(i++) + ".msc");
        write_multispectral_cloud(cloud, p, format);
        ctx.outputs.push_back(p.string());
      }
      i = 0;
      for (const auto& cloud : result.test) {
        const auto p = fs::path(split_test_out) / ("plot_" + std::to_string(i++) + ".msc");
        write_multispectral_cloud(cloud, p, format);
        ctx.outputs.push_back(p.string());
      }
      ctx.write_manifest(fs::path(split_train_out) / "run.manifest.json");
      log_line("split: " + std::to_string(result.train.size()) + " train / " +
               std::to_string(result.test.size()) + " test plots");
    }
  });

  // ---- features ----
  auto* features = app.add_subcommand("features", "export the per-point feature table");
  std::string feat_in, feat_out, feat_scenario = "full";
  double feat_radius = 1.0;
  features->add_option("--in", feat_in, "normalized fused cloud")->required();
  features->add_option("--out", feat_out, "feature table (text)")->required();
  features->add_option("--scenario", feat_scenario, "feature scenario name or 'full'")
      ->default_val("full");
  features->add_option("--radius-m", feat_radius, "neighborhood radius")->default_val(1.0);
  features->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "features";
    ctx.parameters = {{"scenario", feat_scenario},
                      {"radius_m", feat_radius},
                      {"threads", threads}};
    ctx.inputs.push_back(feat_in);
    ctx.outputs.push_back(feat_out);
    const auto cloud = load_normalized(feat_in);
    const auto scenario = scenario_from_name(feat_scenario);
    const auto table = compute_feature_table(cloud, scenario.mask, feat_radius);
    write_feature_table(table, feat_out);
    ctx.write_manifest(manifest_path(feat_out));
    log_line("features: " + std::to_string(table.rows) + " rows x " +
             std::to_string(table.cols()) + " columns (" + scenario.name + ")");
  });

  // ---- train ----
  auto* train = app.add_subcommand("train", "train the random forest");
  std::vector<std::string> train_in;
  std::string train_model, train_scenario = "full";
  double train_radius = 1.0;
  std::string train_max_features, train_class_weight;
  ForestParams train_params;
  add_forest_options(train, train_params, train_max_features, train_class_weight);
  train->add_option("--train", train_in, "labeled training cloud(s)")->required();
  train->add_option("--model", train_model, "output model file")->required();
  train->add_option("--scenario", train_scenario, "feature scenario name or 'full'")
      ->default_val("full");
  train->add_option("--radius-m", train_radius, "neighborhood radius")->default_val(1.0);
  train->add_option("--seed", train_params.seed, "training seed")->default_val(0);
  train->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "train";
    finish_forest_params(train_params, train_max_features, train_class_weight);
    ctx.parameters = {{"scenario", train_scenario},
                      {"radius_m", train_radius},
                      {"trees", train_params.n_estimators},
                      {"max_depth", train_params.max_depth},
                      {"max_features", train_max_features},
                      {"min_samples_split", train_params.min_samples_split},
                      {"min_samples_leaf", train_params.min_samples_leaf},
                      {"class_weight", train_class_weight},
                      {"seed", train_params.seed},
                      {"threads", threads}};
    ctx.inputs = train_in;
    ctx.outputs.push_back(train_model);

    const auto scenario = scenario_from_name(train_scenario);
    FeatureTable table;
    std::vector<SemanticClass> labels;
    for (const auto& path : train_in) {
      const auto cloud = load_normalized(path);
      auto part = compute_feature_table(cloud, scenario.mask, train_radius);
      auto part_labels = extract_labels(cloud);
      if (table.columns.empty()) {
        table = std::move(part);
      } else {
        table.values.insert(table.values.end(), part.values.begin(), part.values.end());
        table.rows += part.rows;
      }
      labels.insert(labels.end(), part_labels.begin(), part_labels.end());
    }
    auto model = train_forest(table, labels, train_params);
    model.mask = scenario.mask;
    model.radius_m = train_radius;
    save_model(model, train_model);
    ctx.write_manifest(manifest_path(train_model));
    std::size_t nodes = 0;
    for (const auto& tree : model.trees) nodes += tree.node_count();
    log_line("train: " + std::to_string(table.rows) + " samples, " +
             std::to_string(model.trees.size()) + " trees, " + std::to_string(nodes) +
             " nodes");
  });

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand("predict", "label a cloud with a trained model");
  std::string pred_model, pred_in, pred_out, pred_scores;
  predict_cmd->add_option("--model", pred_model, "model file")->required();
  predict_cmd->add_option("--in", pred_in, "input cloud")->required();
  predict_cmd->add_option("--out", pred_out, "output cloud with predicted labels")
      ->required();
  predict_cmd->add_option("--scores", pred_scores, "optional per-class score table");
  predict_cmd->add_option("--format", fmt, "text|binary")->default_val("binary");
  predict_cmd->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "predict";
    ctx.parameters = {{"format", fmt}, {"threads", threads}};
    ctx.inputs = {pred_model, pred_in};
    ctx.outputs.push_back(pred_out);
    const auto model = load_model(pred_model);
    auto cloud = load_normalized(pred_in);
    const auto table = compute_feature_table(cloud, model.mask, model.radius_m);
    const auto result = predict(model, table, !pred_scores.empty());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      cloud.points[i].label = result.labels[i];
    }
    write_multispectral_cloud(cloud, pred_out, parse_format(fmt));
    if (!pred_scores.empty()) {
      std::string text = "point";
      for (SemanticClass c : kAllClasses) text += std::string(" ") + class_name(c);
      text += '\n';
      char buf[64];
      for (std::size_t i = 0; i < result.scores.size(); ++i) {
        text += std::to_string(i);
        for (double v : result.scores[i]) {
          std::snprintf(buf, sizeof(buf), " %.6f", v);
          text += buf;
        }
        text += '\n';
      }
      write_text_file(pred_scores, text);
      ctx.outputs.push_back(pred_scores);
    }
    ctx.write_manifest(manifest_path(pred_out));
    log_line("predict: " + std::to_string(cloud.size()) + " points labeled");
  });

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against truth");
  std::string eval_truth, eval_pred, eval_out, eval_kv;
  std::vector<double> eval_weights;
  evaluate->add_option("--truth", eval_truth, "ground-truth labeled cloud")->required();
  evaluate->add_option("--pred", eval_pred, "predicted labeled cloud")->required();
  evaluate->add_option("--out", eval_out, "metric report (text)")->required();
  evaluate->add_option("--kv-out", eval_kv, "machine-readable key=value report");
  evaluate->add_option("--wiou-weights", eval_weights,
                       "six per-class IoU weights (default 1 1 2 2 2 2)");
  evaluate->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "evaluate";
    ctx.parameters = {{"threads", threads}};
    ctx.inputs = {eval_truth, eval_pred};
    ctx.outputs.push_back(eval_out);
    const auto truth_cloud = read_multispectral_cloud(eval_truth);
    const auto pred_cloud = read_multispectral_cloud(eval_pred);
    if (truth_cloud.size() != pred_cloud.size()) {
      throw ValidationError("truth and prediction differ in point count");
    }
    WiouWeights weights;
    if (!eval_weights.empty()) {
      if (eval_weights.size() != kNumClasses) {
        throw ValidationError("--wiou-weights needs exactly 6 values");
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) weights.weights[c] = eval_weights[c];
    }
    ctx.parameters["wiou_weights"] = weights.weights;
    const auto truth = extract_labels(truth_cloud);
    const auto predicted = extract_labels(pred_cloud);
    const auto cm = confusion_matrix(truth, predicted);
    const auto report = metrics(cm, weights);
    write_text_file(eval_out, metric_report_text(report, cm));
    if (!eval_kv.empty()) {
      write_text_file(eval_kv, metric_report_kv(report) + "\n");
      ctx.outputs.push_back(eval_kv);
    }
    ctx.write_manifest(manifest_path(eval_out));
    char buf[160];
    std::snprintf(buf, sizeof(buf), "evaluate: OA %.2f%%  mIoU %.2f%%  wIoU %.2f%%",
                  100.0 * report.oa, 100.0 * report.miou, 100.0 * report.wiou);
    log_line(buf);
  });

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "feature-scenario ablation study");
  std::vector<std::string> abl_train, abl_test;
  std::string abl_scenarios = "all", abl_out, abl_kv;
  std::string abl_max_features, abl_class_weight;
  AblationParams abl_params;
  add_forest_options(ablate, abl_params.forest, abl_max_features, abl_class_weight);
  ablate->add_option("--train", abl_train, "labeled training cloud(s)")->required();
  ablate->add_option("--test", abl_test, "labeled test cloud(s)")->required();
  ablate->add_option("--scenarios", abl_scenarios,
                     "'all' or comma-separated scenario names")
      ->default_val("all");
  ablate->add_option("--out", abl_out, "report table (text)")->required();
  ablate->add_option("--kv-out", abl_kv, "machine-readable report");
  ablate->add_option("--radius-m", abl_params.radius_m, "neighborhood radius")
      ->default_val(1.0);
  ablate->add_option("--seed", abl_params.forest.seed, "base seed")->default_val(0);
  ablate->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "ablate";
    finish_forest_params(abl_params.forest, abl_max_features, abl_class_weight);
    ctx.parameters = {{"scenarios", abl_scenarios},
                      {"radius_m", abl_params.radius_m},
                      {"trees", abl_params.forest.n_estimators},
                      {"seed", abl_params.forest.seed},
                      {"threads", threads}};
    ctx.inputs = abl_train;
    ctx.inputs.insert(ctx.inputs.end(), abl_test.begin(), abl_test.end());
    ctx.outputs.push_back(abl_out);

    std::vector<MultispectralCloud> train_clouds, test_clouds;
    for (const auto& p : abl_train) train_clouds.push_back(load_normalized(p));
    for (const auto& p : abl_test) test_clouds.push_back(load_normalized(p));
    const auto scenarios = parse_scenarios(abl_scenarios);
    const auto rows = run_ablation(train_clouds, test_clouds, scenarios, abl_params);
    write_text_file(abl_out, ablation_table_text(rows));
    if (!abl_kv.empty()) {
      write_text_file(abl_kv, ablation_table_kv(rows));
      ctx.outputs.push_back(abl_kv);
    }
    ctx.write_manifest(manifest_path(abl_out));
    log_line("ablate: " + std::to_string(rows.size()) + " scenario rows written");
  });

  // ---- vi-report ----
  auto* vi = app.add_subcommand("vi-report", "vegetation index separability report");
  std::string vi_in, vi_out;
  vi->add_option("--in", vi_in, "labeled fused cloud")->required();
  vi->add_option("--out", vi_out, "report file")->required();
  vi->callback([&] {
    configure_threads(threads);
    RunContext ctx;
    ctx.subcommand = "vi-report";
    ctx.parameters = {{"threads", threads}};
    ctx.inputs.push_back(vi_in);
    ctx.outputs.push_back(vi_out);
    const auto cloud = read_multispectral_cloud(vi_in);
    std::string text;
    std::vector<std::pair<double, VegetationIndexKind>> ranking;
    for (VegetationIndexKind kind : kAllVegetationIndices) {
      const auto report = vi_separability(cloud, kind);
      ranking.push_back({report.score, kind});
      text += to_text(report) + "\n";
    }
    std::sort(ranking.begin(), ranking.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    text += "# ranking (best separability first)\n";
    char buf[96];
    for (const auto& [score, kind] : ranking) {
      std::snprintf(buf, sizeof(buf), "%-16s %.6f\n", vi_name(kind), score);
      text += buf;
    }
    write_text_file(vi_out, text);
    ctx.write_manifest(manifest_path(vi_out));
    log_line("vi-report: best index is " + std::string(vi_name(ranking.front().second)));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    std::cerr << "forestseg: I/O error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "forestseg: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "forestseg: error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
