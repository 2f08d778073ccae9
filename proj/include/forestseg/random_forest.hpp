#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forestseg/features.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

enum class MaxFeaturesRule : std::uint8_t { Log2 = 0, Sqrt = 1, All = 2 };
enum class ClassWeightMode : std::uint8_t { Balanced = 0, Uniform = 1 };

struct ForestParams {
  int n_estimators = 200;
  int max_depth = 50;
  MaxFeaturesRule max_features = MaxFeaturesRule::Log2;
  int min_samples_split = 2;
  int min_samples_leaf = 10;
  ClassWeightMode class_weight = ClassWeightMode::Balanced;
  std::uint64_t seed = 0;
};

/// One CART tree. Internal nodes route on feature <= threshold; leaves
/// carry summed per-class sample weights.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;     // index into leaf_weights when a leaf
  };
  std::vector<Node> nodes;
  std::vector<std::array<double, kNumClasses>> leaf_weights;

  const std::array<double, kNumClasses>& leaf_for(std::span<const double> row) const;
  std::size_t node_count() const { return nodes.size(); }
};

struct ForestModel {
  ForestParams params;
  std::vector<std::string> feature_schema;
  FeatureMask mask;       // feature blocks this model was trained on
  double radius_m = 1.0;  // neighborhood radius for the geometric block
  std::array<double, kNumClasses> class_weights{};
  std::vector<DecisionTree> trees;
};

/// weight_c = N / (K_present * count_c); classes absent from `labels` get 0.
std::array<double, kNumClasses> class_weights_balanced(
    std::span<const SemanticClass> labels);

/// Trains n_estimators CART trees on seeded bootstrap samples with weighted
/// Gini splits (per-sample weight = class weight of its label, uniform mode
/// = 1). Threshold candidates are midpoints between consecutive distinct
/// sorted values at the node; ties break on lowest feature index, then
/// lowest threshold. Each tree draws from an RNG keyed by (seed,
/// tree_index), so parallel training is schedule-independent and the model
/// is fully determined by (data, params, seed).
ForestModel train_forest(const FeatureTable& table,
                         std::span<const SemanticClass> labels,
                         const ForestParams& params);

struct Prediction {
  std::vector<SemanticClass> labels;
  /// Per-class scores (normalized summed leaf weights); filled only when
  /// requested.
  std::vector<std::array<double, kNumClasses>> scores;
};

/// Sums leaf weight vectors across trees per row, normalizes, argmax; ties
/// go to the lowest class code. Throws on schema mismatch.
Prediction predict(const ForestModel& model, const FeatureTable& table,
                   bool with_scores = false);

/// Versioned binary model file; round-trips to identical predictions.
void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

/// Serializes to an in-memory buffer (save_model writes exactly this).
std::string serialize_model(const ForestModel& model);

}  // namespace forestseg
