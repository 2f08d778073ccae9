#include "forestseg/evaluation.hpp"

#include <cstdio>
#include <string>

#include "forestseg/error.hpp"
#include "forestseg/rng.hpp"

namespace forestseg {
namespace {

/// Builds the concatenated feature table and label vector for a group of
/// clouds (scaling is per cloud, matching per-plot normalization).
std::pair<FeatureTable, std::vector<SemanticClass>> assemble(
    const std::vector<MultispectralCloud>& clouds, const FeatureMask& mask,
    double radius_m) {
  if (clouds.empty()) throw ValidationError("no clouds given");
  FeatureTable table;
  std::vector<SemanticClass> labels;
  for (const auto& cloud : clouds) {
    FeatureTable part = compute_feature_table(cloud, mask, radius_m);
    auto part_labels = extract_labels(cloud);
    if (table.columns.empty()) {
      table = std::move(part);
    } else {
      table.values.insert(table.values.end(), part.values.begin(), part.values.end());
      table.rows += part.rows;
    }
    labels.insert(labels.end(), part_labels.begin(), part_labels.end());
  }
  return {std::move(table), std::move(labels)};
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::truth_count(std::size_t cls) const {
  std::uint64_t t = 0;
  for (auto v : counts[cls]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t cls) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[cls];
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const SemanticClass> truth,
                                 std::span<const SemanticClass> predicted) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("confusion_matrix: length mismatch (" +
                          std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])]++;
  }
  return cm;
}

IouAggregate aggregate_iou(std::span<const double> per_class_iou,
                           std::span<const bool> included, const WiouWeights& weights) {
  if (per_class_iou.size() != kNumClasses || included.size() != kNumClasses) {
    throw ValidationError("aggregate_iou expects one entry per class");
  }
  for (double w : weights.weights) {
    if (!(w > 0.0)) throw ValidationError("wIoU weights must be > 0");
  }
  IouAggregate agg;
  double sum = 0.0, wsum = 0.0, wtotal = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (!included[c]) continue;
    sum += per_class_iou[c];
    wsum += weights.weights[c] * per_class_iou[c];
    wtotal += weights.weights[c];
    ++n;
  }
  if (n == 0) throw ValidationError("aggregate_iou: no classes included");
  agg.miou = sum / static_cast<double>(n);
  agg.wiou = wsum / wtotal;
  return agg;
}

MetricReport metrics(const ConfusionMatrix& cm, const WiouWeights& weights) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ValidationError("metrics on empty confusion matrix");

  MetricReport report;
  std::uint64_t trace = 0;
  double recall_sum = 0.0;
  std::size_t truth_classes = 0;

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t tp = cm.counts[c][c];
    const std::uint64_t truth_n = cm.truth_count(c);
    const std::uint64_t pred_n = cm.predicted_count(c);
    const std::uint64_t fn = truth_n - tp;
    const std::uint64_t fp = pred_n - tp;
    trace += tp;
    report.in_truth[c] = truth_n > 0;
    report.included[c] = truth_n > 0 || pred_n > 0;
    if (report.included[c]) {
      const std::uint64_t denom = tp + fp + fn;
      report.per_class_iou[c] =
          denom > 0 ? static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    }
    if (truth_n > 0) {
      recall_sum += static_cast<double>(tp) / static_cast<double>(truth_n);
      ++truth_classes;
    }
  }

  report.oa = static_cast<double>(trace) / static_cast<double>(total);
  report.macc = recall_sum / static_cast<double>(truth_classes);
  const auto agg = aggregate_iou(report.per_class_iou, report.included, weights);
  report.miou = agg.miou;
  report.wiou = agg.wiou;
  return report;
}

std::vector<AblationRow> run_ablation(const std::vector<MultispectralCloud>& train,
                                      const std::vector<MultispectralCloud>& test,
                                      const std::vector<FeatureScenario>& scenarios,
                                      const AblationParams& params) {
  if (scenarios.empty()) throw ValidationError("no scenarios given");

  std::vector<AblationRow> rows(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    AblationRow& row = rows[s];
    row.scenario = scenarios[s];
    row.derived_seed = Rng::derive(params.forest.seed, s);

    auto [train_table, train_labels] = assemble(train, row.scenario.mask, params.radius_m);
    auto [test_table, test_labels] = assemble(test, row.scenario.mask, params.radius_m);

    ForestParams fp = params.forest;
    fp.seed = row.derived_seed;
    ForestModel model = train_forest(train_table, train_labels, fp);
    model.mask = row.scenario.mask;
    model.radius_m = params.radius_m;

    const Prediction pred = predict(model, test_table);
    row.report = metrics(confusion_matrix(test_labels, pred.labels), params.weights);
  }
  return rows;
}

namespace {

void append_metrics_columns(std::string& out, const MetricReport& r) {
  char buf[200];
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof(buf), " %7.2f", 100.0 * r.per_class_iou[c]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), " %7.2f %7.2f %7.2f %7.2f", 100.0 * r.miou,
                100.0 * r.wiou, 100.0 * r.macc, 100.0 * r.oa);
  out += buf;
}

constexpr const char* kFooter =
    "# classes absent from ground truth and predictions are excluded from "
    "mIoU/wIoU; mAcc averages recall over classes present in ground truth\n";

}  // namespace

std::string ablation_table_text(std::span<const AblationRow> rows) {
  std::string out = "Feature vector                IoU(%):";
  char buf[200];
  for (SemanticClass c : kAllClasses) {
    std::snprintf(buf, sizeof(buf), " %7.7s", class_name(c));
    out += buf;
  }
  out += "    mIoU    wIoU    mAcc      OA\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-36.36s", row.scenario.name.c_str());
    out += buf;
    append_metrics_columns(out, row.report);
    out += '\n';
  }
  out += kFooter;
  return out;
}

std::string ablation_table_kv(std::span<const AblationRow> rows) {
  // Full-precision values so two runs can be compared byte for byte.
  std::string out;
  char buf[400];
  for (const auto& row : rows) {
    out += "scenario=\"" + row.scenario.name + "\"";
    std::snprintf(buf, sizeof(buf), " seed=%llu",
                  static_cast<unsigned long long>(row.derived_seed));
    out += buf;
    out += metric_report_kv(row.report);
    out += '\n';
  }
  return out;
}

std::string metric_report_kv(const MetricReport& report) {
  std::string out;
  char buf[80];
  for (SemanticClass c : kAllClasses) {
    std::snprintf(buf, sizeof(buf), " iou_%s=%.17g", class_name(c),
                  100.0 * report.per_class_iou[static_cast<std::size_t>(c)]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), " miou=%.17g wiou=%.17g macc=%.17g oa=%.17g",
                100.0 * report.miou, 100.0 * report.wiou, 100.0 * report.macc,
                100.0 * report.oa);
  out += buf;
  return out;
}

std::string metric_report_text(const MetricReport& report, const ConfusionMatrix& cm) {
  std::string out = "confusion matrix (rows = truth, cols = predicted):\n";
  char buf[200];
  out += "                ";
  for (SemanticClass c : kAllClasses) {
    std::snprintf(buf, sizeof(buf), " %10.10s", class_name(c));
    out += buf;
  }
  out += '\n';
  for (SemanticClass r : kAllClasses) {
    std::snprintf(buf, sizeof(buf), "%-16.16s", class_name(r));
    out += buf;
    for (SemanticClass c : kAllClasses) {
      std::snprintf(buf, sizeof(buf), " %10llu",
                    static_cast<unsigned long long>(
                        cm.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
      out += buf;
    }
    out += '\n';
  }
  out += "\nclass            IoU(%)  included\n";
  for (SemanticClass c : kAllClasses) {
    const auto i = static_cast<std::size_t>(c);
    std::snprintf(buf, sizeof(buf), "%-16.16s %6.2f  %s\n", class_name(c),
                  100.0 * report.per_class_iou[i], report.included[i] ? "yes" : "no");
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "\nmIoU %.2f  wIoU %.2f  mAcc %.2f  OA %.2f\n",
                100.0 * report.miou, 100.0 * report.wiou, 100.0 * report.macc,
                100.0 * report.oa);
  out += buf;
  out += kFooter;
  return out;
}

}  // namespace forestseg
