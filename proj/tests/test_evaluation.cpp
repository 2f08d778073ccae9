#include "doctest.h"

#include "forestseg/evaluation.hpp"
#include "forestseg/io.hpp"
#include "forestseg/preprocess.hpp"
#include "forestseg/rng.hpp"
#include "forestseg/synthetic.hpp"

using namespace forestseg;

namespace {

// Published ablation rows: six per-class IoU percentages with their mIoU
// and wIoU columns. The reproduction tolerance absorbs the half-ulp of the
// two-decimal rounding.
struct PublishedRow {
  const char* name;
  std::array<double, 6> iou;
  double miou;
  double wiou;
};

constexpr PublishedRow kPublishedRows[9] = {
    {"Coordinates", {92.54, 25.41, 60.87, 5.64, 88.59, 38.15}, 51.87, 50.45},
    {"+SWIR", {92.70, 28.46, 64.87, 11.12, 88.92, 26.60}, 52.11, 50.42},
    {"+NIR", {92.50, 35.55, 64.31, 3.98, 89.29, 29.59}, 52.54, 50.24},
    {"+Green", {92.60, 36.47, 63.10, 6.35, 89.44, 28.30}, 52.71, 50.35},
    {"+SWIR + NIR", {92.87, 33.77, 60.33, 3.77, 89.13, 38.53}, 53.07, 51.02},
    {"+SWIR + Green", {92.81, 27.90, 63.19, 4.47, 88.77, 23.73}, 50.15, 48.10},
    {"+NIR + Green", {92.23, 40.19, 65.08, 7.55, 89.80, 22.75}, 52.93, 50.28},
    {"+SWIR + NIR + Green", {98.61, 93.20, 79.09, 57.85, 97.27, 87.58}, 85.60, 83.54},
    {"+SWIR + NIR + Green + VI", {92.58, 29.11, 63.35, 5.77, 88.79, 33.44}, 52.17, 50.44},
};

MultispectralCloud tiny_labeled_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.extent_x_m = 18.0;
  spec.extent_y_m = 18.0;
  spec.n_trees = 8;
  spec.total_points = 6000;
  spec.seed = seed;
  auto scene = generate_scene(spec);
  return normalize_height(scene.reference, {});
}

}  // namespace

TEST_CASE("confusion matrix basics") {
  using SC = SemanticClass;
  const std::vector<SC> truth = {SC::Ground, SC::Trunk, SC::Foliage, SC::Trunk};

  SUBCASE("perfect prediction is diagonal") {
    const auto cm = confusion_matrix(truth, truth);
    CHECK(cm.total() == 4);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[2][2] == 2);
    CHECK(cm.counts[4][4] == 1);
    CHECK(cm.counts[2][4] == 0);
  }

  SUBCASE("uniform misprediction fills a single off-diagonal cell") {
    const std::vector<SC> all_ground(4, SC::Ground);
    const std::vector<SC> all_foliage(4, SC::Foliage);
    const auto cm = confusion_matrix(all_ground, all_foliage);
    CHECK(cm.counts[0][4] == 4);
    CHECK(cm.total() == 4);
  }

  SUBCASE("length mismatch is an error") {
    CHECK_THROWS_AS(confusion_matrix(truth, std::vector<SC>{SC::Ground}),
                    ValidationError);
  }
}

TEST_CASE("confusion matrix row sums equal the truth histogram") {
  Rng rng(6);
  std::vector<SemanticClass> truth(10000), pred(10000);
  std::array<std::uint64_t, kNumClasses> hist{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<SemanticClass>(rng.next_below(6));
    pred[i] = static_cast<SemanticClass>(rng.next_below(6));
    hist[static_cast<std::size_t>(truth[i])]++;
  }
  const auto cm = confusion_matrix(truth, pred);
  for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(cm.truth_count(c) == hist[c]);
}

TEST_CASE("published per-class IoU rows reproduce their mIoU and wIoU") {
  const std::array<bool, 6> all_included = {true, true, true, true, true, true};
  for (const auto& row : kPublishedRows) {
    const auto agg = aggregate_iou(row.iou, all_included, {});
    INFO(row.name);
    CHECK(std::abs(agg.miou - row.miou) <= 0.005 + 1e-9);
    CHECK(std::abs(agg.wiou - row.wiou) <= 0.005 + 1e-9);
  }
}

TEST_CASE("perfect prediction scores 1.0 on every metric") {
  Rng rng(8);
  std::vector<SemanticClass> truth(600);
  for (auto& t : truth) t = static_cast<SemanticClass>(rng.next_below(6));
  const auto report = metrics(confusion_matrix(truth, truth));
  CHECK(report.oa == 1.0);
  CHECK(report.macc == doctest::Approx(1.0));
  CHECK(report.miou == doctest::Approx(1.0));
  CHECK(report.wiou == doctest::Approx(1.0));
}

TEST_CASE("uniform weights make wIoU equal mIoU exactly") {
  Rng rng(9);
  std::vector<SemanticClass> truth(500), pred(500);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<SemanticClass>(rng.next_below(6));
    pred[i] = rng.next_double() < 0.7 ? truth[i]
                                      : static_cast<SemanticClass>(rng.next_below(6));
  }
  WiouWeights uniform;
  uniform.weights = {1, 1, 1, 1, 1, 1};
  const auto report = metrics(confusion_matrix(truth, pred), uniform);
  CHECK(report.wiou == report.miou);
}

TEST_CASE("metrics are invariant under integer scaling of the matrix") {
  Rng rng(10);
  std::vector<SemanticClass> truth(300), pred(300);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<SemanticClass>(rng.next_below(6));
    pred[i] = rng.next_double() < 0.6 ? truth[i]
                                      : static_cast<SemanticClass>(rng.next_below(6));
  }
  auto cm = confusion_matrix(truth, pred);
  const auto base = metrics(cm);
  for (auto& row : cm.counts) {
    for (auto& v : row) v *= 7;
  }
  const auto scaled = metrics(cm);
  CHECK(scaled.oa == doctest::Approx(base.oa).epsilon(1e-12));
  CHECK(scaled.miou == doctest::Approx(base.miou).epsilon(1e-12));
  CHECK(scaled.wiou == doctest::Approx(base.wiou).epsilon(1e-12));
  CHECK(scaled.macc == doctest::Approx(base.macc).epsilon(1e-12));
}

TEST_CASE("per-class IoU never exceeds recall") {
  Rng rng(11);
  std::vector<SemanticClass> truth(2000), pred(2000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<SemanticClass>(rng.next_below(6));
    pred[i] = rng.next_double() < 0.5 ? truth[i]
                                      : static_cast<SemanticClass>(rng.next_below(6));
  }
  const auto cm = confusion_matrix(truth, pred);
  const auto report = metrics(cm);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (!report.in_truth[c]) continue;
    const double recall = static_cast<double>(cm.counts[c][c]) /
                          static_cast<double>(cm.truth_count(c));
    CHECK(report.per_class_iou[c] <= recall + 1e-12);
  }
}

TEST_CASE("class absent everywhere is excluded; hallucinated class scores zero") {
  using SC = SemanticClass;
  // Truth: ground only. Predictions: half ground, half foliage. Trunk etc.
  // appear nowhere and must not drag the means down.
  std::vector<SC> truth(10, SC::Ground);
  std::vector<SC> pred(10, SC::Ground);
  pred[0] = SC::Foliage;
  const auto report = metrics(confusion_matrix(truth, pred));
  CHECK(report.included[0]);
  CHECK(report.included[4]);      // hallucinated foliage included with IoU 0
  CHECK_FALSE(report.included[2]);
  CHECK(report.per_class_iou[4] == 0.0);
  CHECK(report.miou == doctest::Approx((0.9 + 0.0) / 2.0));
  CHECK(report.macc == doctest::Approx(0.9));  // only ground is in truth
}

TEST_CASE("small ablation run is deterministic and ordered") {
  const auto cloud = tiny_labeled_scene(400);
  SplitSpec split_spec;
  split_spec.unit = SplitUnit::PerPoint;
  split_spec.seed = 2;
  const auto split = split_train_test({cloud}, split_spec);

  AblationParams params;
  params.forest.n_estimators = 12;
  params.forest.seed = 99;
  const std::vector<FeatureScenario> scenarios = {scenario_from_name("coordinates"),
                                                  scenario_from_name("+swir+nir+green")};
  const auto rows = run_ablation(split.train, split.test, scenarios, params);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].scenario.name == "Coordinates");
  CHECK(rows[1].scenario.name == "+SWIR + NIR + Green");

  const auto rows2 = run_ablation(split.train, split.test, scenarios, params);
  CHECK(ablation_table_kv(rows) == ablation_table_kv(rows2));

  const auto text = ablation_table_text(rows);
  CHECK(text.find("Coordinates") != std::string::npos);
  CHECK(text.find("mIoU") != std::string::npos);
}
