#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forestseg/features.hpp"
#include "forestseg/random_forest.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

/// Rows are ground truth, columns are predictions.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t truth_count(std::size_t cls) const;
  std::uint64_t predicted_count(std::size_t cls) const;
};

ConfusionMatrix confusion_matrix(std::span<const SemanticClass> truth,
                                 std::span<const SemanticClass> predicted);

/// Per-class IoU weights; key forest components (trunk, branches, foliage,
/// woody debris) count double by default.
struct WiouWeights {
  std::array<double, kNumClasses> weights = {1.0, 1.0, 2.0, 2.0, 2.0, 2.0};
};

struct MetricReport {
  std::array<double, kNumClasses> per_class_iou{};
  /// Classes participating in the IoU means (present in truth or
  /// predictions); absent classes carry IoU 0 and are excluded.
  std::array<bool, kNumClasses> included{};
  std::array<bool, kNumClasses> in_truth{};
  double miou = 0.0;
  double wiou = 0.0;
  double macc = 0.0;  // mean per-class recall over truth-present classes
  double oa = 0.0;
};

/// Aggregates per-class IoU into mIoU (unweighted mean) and wIoU
/// (weight-normalized mean) over the included classes. This is the exact
/// formula pair metrics() uses, exposed so published per-class IoU rows can
/// be checked directly.
struct IouAggregate {
  double miou = 0.0;
  double wiou = 0.0;
};
IouAggregate aggregate_iou(std::span<const double> per_class_iou,
                           std::span<const bool> included, const WiouWeights& weights);

/// IoU_c = TP/(TP+FP+FN), OA = trace/total, mAcc = mean recall over classes
/// present in truth; mIoU/wIoU means run over classes present in truth or
/// predictions (a class predicted but absent from truth counts with IoU 0;
/// a class absent from both is excluded).
MetricReport metrics(const ConfusionMatrix& cm, const WiouWeights& weights = {});

struct AblationParams {
  double radius_m = 1.0;  // geometric-feature radius (scenarios with geometry)
  ForestParams forest;
  WiouWeights weights;
};

struct AblationRow {
  FeatureScenario scenario;
  std::uint64_t derived_seed = 0;  // per-scenario training seed
  MetricReport report;
};

/// For each scenario: assemble feature tables for the train and test clouds
/// (normalization per input cloud), train a forest with a seed derived from
/// (params.forest.seed, scenario position), predict the test set, compute
/// metrics. Row order follows the scenario list.
std::vector<AblationRow> run_ablation(const std::vector<MultispectralCloud>& train,
                                      const std::vector<MultispectralCloud>& test,
                                      const std::vector<FeatureScenario>& scenarios,
                                      const AblationParams& params);

/// Aligned text table, one scenario row: per-class IoU then mIoU, wIoU,
/// mAcc, OA, all in percent with 2 decimals.
std::string ablation_table_text(std::span<const AblationRow> rows);

/// Machine-readable `key=value` lines, one row per scenario, values at full
/// double precision (byte-comparable across runs).
std::string ablation_table_kv(std::span<const AblationRow> rows);

/// The metric fields of one report as ` key=value` pairs (full precision).
std::string metric_report_kv(const MetricReport& report);

/// Single-report text (same columns as one ablation row plus the confusion
/// matrix and the class-inclusion footer).
std::string metric_report_text(const MetricReport& report, const ConfusionMatrix& cm);

}  // namespace forestseg
