#include "forestseg/random_forest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "forestseg/error.hpp"
#include "forestseg/rng.hpp"

namespace forestseg {
namespace {

constexpr char kModelMagic[16] = {'M', 'S', 'F', 'O', 'R', 'E', 'S', 'T',
                                  'R', 'F', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;

int features_per_node(MaxFeaturesRule rule, int d) {
  switch (rule) {
    case MaxFeaturesRule::Log2:
      return std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(d)))));
    case MaxFeaturesRule::Sqrt:
      return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
    case MaxFeaturesRule::All:
      return d;
  }
  return d;
}

/// Column-major copy of the table plus one global feature-sorted order;
/// shared read-only by all trees.
struct TrainingView {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> col;            // [d][n]
  std::vector<std::vector<std::uint32_t>> order;   // [d][n], sorted by (value, index)
  std::vector<std::uint8_t> label;                 // [n]
};

TrainingView make_view(const FeatureTable& table, std::span<const SemanticClass> labels) {
  TrainingView v;
  v.n = table.rows;
  v.d = table.cols();
  v.col.assign(v.d, std::vector<double>(v.n));
  for (std::size_t i = 0; i < v.n; ++i) {
    for (std::size_t f = 0; f < v.d; ++f) v.col[f][i] = table.at(i, f);
  }
  v.label.resize(v.n);
  for (std::size_t i = 0; i < v.n; ++i) v.label[i] = static_cast<std::uint8_t>(labels[i]);

  v.order.assign(v.d, {});
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(v.d); ++f) {
    auto& ord = v.order[f];
    ord.resize(v.n);
    std::iota(ord.begin(), ord.end(), 0u);
    const double* vals = v.col[f].data();
    std::sort(ord.begin(), ord.end(), [vals](std::uint32_t a, std::uint32_t b) {
      return vals[a] != vals[b] ? vals[a] < vals[b] : a < b;
    });
  }
  return v;
}

struct SplitChoice {
  double score = -std::numeric_limits<double>::infinity();
  std::int32_t feature = -1;
  double threshold = 0.0;

  bool better_than(const SplitChoice& other) const {
    if (score != other.score) return score > other.score;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

/// Builds one tree over presorted per-feature index arrays that are
/// partitioned in place as the tree grows (each feature's slice stays
/// sorted within every node range).
class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& view, const ForestParams& params,
              const std::array<double, kNumClasses>& class_weights, Rng rng)
      : view_(view), params_(params), rng_(rng) {
    counts_.assign(view_.n, 0u);
    for (std::size_t i = 0; i < view_.n; ++i) {
      counts_[rng_.next_below(view_.n)]++;
    }
    weight_of_.resize(view_.n);
    for (std::size_t i = 0; i < view_.n; ++i) {
      const double cw = params_.class_weight == ClassWeightMode::Balanced
                            ? class_weights[view_.label[i]]
                            : 1.0;
      weight_of_[i] = static_cast<double>(counts_[i]) * cw;
    }

    // Active (drawn) samples in per-feature sorted order.
    std::size_t m = 0;
    for (auto c : counts_) m += (c > 0);
    ord_.assign(view_.d * m, 0u);
    for (std::size_t f = 0; f < view_.d; ++f) {
      std::uint32_t* dst = ord_.data() + f * m;
      std::size_t k = 0;
      for (std::uint32_t idx : view_.order[f]) {
        if (counts_[idx] > 0) dst[k++] = idx;
      }
    }
    m_ = m;
    scratch_.resize(m);
  }

  DecisionTree build() {
    DecisionTree tree;
    if (m_ > 0) {
      grow(tree, 0, static_cast<std::uint32_t>(m_), 0);
    } else {
      // Degenerate bootstrap (cannot happen for n >= 1, kept for safety).
      tree.nodes.push_back({});
      tree.nodes.back().leaf = 0;
      tree.leaf_weights.push_back({});
    }
    return tree;
  }

 private:
  struct NodeStats {
    std::array<double, kNumClasses> class_weight_sum{};
    std::uint64_t draws = 0;
    double total_weight = 0.0;
    int classes_present = 0;
  };

  NodeStats stats_of(std::uint32_t lo, std::uint32_t hi) const {
    NodeStats s;
    const std::uint32_t* members = ord_.data();  // feature 0 slice
    for (std::uint32_t k = lo; k < hi; ++k) {
      const std::uint32_t idx = members[k];
      s.class_weight_sum[view_.label[idx]] += weight_of_[idx];
      s.draws += counts_[idx];
    }
    for (double w : s.class_weight_sum) {
      s.total_weight += w;
      if (w > 0.0) s.classes_present++;
    }
    return s;
  }

  std::int32_t make_leaf(DecisionTree& tree, const NodeStats& stats) {
    DecisionTree::Node node;
    node.leaf = static_cast<std::int32_t>(tree.leaf_weights.size());
    tree.leaf_weights.push_back(stats.class_weight_sum);
    tree.nodes.push_back(node);
    return static_cast<std::int32_t>(tree.nodes.size() - 1);
  }

  /// Scans one feature's sorted slice for the best weighted-Gini split.
  /// Score is sum_c W_Lc^2/W_L + sum_c W_Rc^2/W_R (maximizing it minimizes
  /// the weighted child impurity).
  void scan_feature(std::int32_t f, std::uint32_t lo, std::uint32_t hi,
                    const NodeStats& stats, SplitChoice& best) const {
    const std::uint32_t* members = ord_.data() + static_cast<std::size_t>(f) * m_;
    const double* vals = view_.col[f].data();

    std::array<double, kNumClasses> left_w{};
    double left_total = 0.0;
    std::uint64_t left_draws = 0;
    const std::uint64_t min_leaf = static_cast<std::uint64_t>(params_.min_samples_leaf);

    for (std::uint32_t k = lo; k + 1 < hi; ++k) {
      const std::uint32_t idx = members[k];
      left_w[view_.label[idx]] += weight_of_[idx];
      left_total += weight_of_[idx];
      left_draws += counts_[idx];

      const double v = vals[idx];
      const double v_next = vals[members[k + 1]];
      if (v == v_next) continue;  // split only between distinct values
      if (left_draws < min_leaf) continue;
      const std::uint64_t right_draws = stats.draws - left_draws;
      if (right_draws < min_leaf) break;  // draws only shrink on the right

      const double right_total = stats.total_weight - left_total;
      if (!(left_total > 0.0) || !(right_total > 0.0)) continue;
      double sum_sq_l = 0.0, sum_sq_r = 0.0;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        sum_sq_l += left_w[c] * left_w[c];
        const double rw = stats.class_weight_sum[c] - left_w[c];
        sum_sq_r += rw * rw;
      }
      double threshold = 0.5 * (v + v_next);
      if (threshold >= v_next) threshold = v;  // guard midpoint rounding

      SplitChoice cand;
      cand.score = sum_sq_l / left_total + sum_sq_r / right_total;
      cand.feature = f;
      cand.threshold = threshold;
      if (cand.better_than(best)) best = cand;
    }
  }

  std::int32_t grow(DecisionTree& tree, std::uint32_t lo, std::uint32_t hi, int depth) {
    const NodeStats stats = stats_of(lo, hi);
    if (depth >= params_.max_depth || stats.classes_present <= 1 ||
        stats.draws < static_cast<std::uint64_t>(params_.min_samples_split)) {
      return make_leaf(tree, stats);
    }

    // Sample candidate features without replacement.
    const int d = static_cast<int>(view_.d);
    const int k = features_per_node(params_.max_features, d);
    std::vector<std::int32_t> pool(view_.d);
    std::iota(pool.begin(), pool.end(), 0);
    SplitChoice best;
    for (int j = 0; j < k; ++j) {
      const auto pick = j + static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(d - j)));
      std::swap(pool[j], pool[pick]);
      scan_feature(pool[j], lo, hi, stats, best);
    }
    if (best.feature < 0) return make_leaf(tree, stats);

    // Stable partition of every feature's slice; sorted order within each
    // side is preserved.
    const double* split_vals = view_.col[best.feature].data();
    std::uint32_t n_left = 0;
    for (std::size_t f = 0; f < view_.d; ++f) {
      std::uint32_t* members = ord_.data() + f * m_;
      std::uint32_t l = 0, r = 0;
      const std::uint32_t width = hi - lo;
      for (std::uint32_t idx = lo; idx < hi; ++idx) {
        const std::uint32_t s = members[idx];
        if (split_vals[s] <= best.threshold) {
          members[lo + l++] = s;  // left block compacts in place
        } else {
          scratch_[r++] = s;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + r, members + lo + l);
      (void)width;
      n_left = l;
    }

    const auto self = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[self].feature = best.feature;
    tree.nodes[self].threshold = best.threshold;
    const std::int32_t left = grow(tree, lo, lo + n_left, depth + 1);
    const std::int32_t right = grow(tree, lo + n_left, hi, depth + 1);
    tree.nodes[self].left = left;
    tree.nodes[self].right = right;
    return self;
  }

  const TrainingView& view_;
  const ForestParams& params_;
  Rng rng_;
  std::vector<std::uint32_t> counts_;
  std::vector<double> weight_of_;
  std::vector<std::uint32_t> ord_;  // d slices of m_ active samples
  std::vector<std::uint32_t> scratch_;
  std::size_t m_ = 0;
};

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end) {
  if (p + sizeof(T) > end) throw IoError("model file truncated");
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace

const std::array<double, kNumClasses>& DecisionTree::leaf_for(
    std::span<const double> row) const {
  std::int32_t node = 0;
  while (nodes[node].feature >= 0) {
    node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                             : nodes[node].right;
  }
  return leaf_weights[nodes[node].leaf];
}

std::array<double, kNumClasses> class_weights_balanced(
    std::span<const SemanticClass> labels) {
  if (labels.empty()) throw ValidationError("class_weights_balanced on empty labels");
  std::array<std::uint64_t, kNumClasses> counts{};
  for (SemanticClass c : labels) counts[static_cast<std::size_t>(c)]++;
  int present = 0;
  for (auto c : counts) present += (c > 0);
  std::array<double, kNumClasses> weights{};
  const double n = static_cast<double>(labels.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    weights[c] = counts[c] > 0
                     ? n / (static_cast<double>(present) * static_cast<double>(counts[c]))
                     : 0.0;
  }
  return weights;
}

ForestModel train_forest(const FeatureTable& table,
                         std::span<const SemanticClass> labels,
                         const ForestParams& params) {
  if (table.rows != labels.size()) {
    throw ValidationError("feature table rows (" + std::to_string(table.rows) +
                          ") do not match label count (" +
                          std::to_string(labels.size()) + ")");
  }
  if (table.rows < static_cast<std::size_t>(params.min_samples_split)) {
    throw ValidationError("too few samples to train");
  }
  if (params.n_estimators < 1) throw ValidationError("n_estimators must be >= 1");
  if (params.max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (params.min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");

  std::array<std::uint64_t, kNumClasses> counts{};
  for (SemanticClass c : labels) counts[static_cast<std::size_t>(c)]++;
  int present = 0;
  for (auto c : counts) present += (c > 0);
  if (present < 2) throw ValidationError("training requires at least 2 classes");

  ForestModel model;
  model.params = params;
  model.feature_schema = table.columns;
  model.class_weights = class_weights_balanced(labels);

  const TrainingView view = make_view(table, labels);
  model.trees.resize(params.n_estimators);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(params.n_estimators); ++t) {
    TreeBuilder builder(view, params, model.class_weights,
                        Rng(params.seed, static_cast<std::uint64_t>(t)));
    model.trees[t] = builder.build();
  }
  return model;
}

Prediction predict(const ForestModel& model, const FeatureTable& table,
                   bool with_scores) {
  if (table.columns != model.feature_schema) {
    throw ValidationError("feature schema mismatch between model and table");
  }
  if (model.trees.empty()) throw ValidationError("model has no trees");

  Prediction pred;
  pred.labels.resize(table.rows);
  if (with_scores) pred.scores.resize(table.rows);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(table.rows); ++i) {
    const auto row = table.row(i);
    std::array<double, kNumClasses> acc{};
    for (const auto& tree : model.trees) {
      const auto& w = tree.leaf_for(row);
      for (std::size_t c = 0; c < kNumClasses; ++c) acc[c] += w[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
      if (acc[c] > acc[best]) best = c;  // ties keep the lowest class code
    }
    pred.labels[i] = static_cast<SemanticClass>(best);
    if (with_scores) {
      double total = 0.0;
      for (double v : acc) total += v;
      if (total > 0.0) {
        for (double& v : acc) v /= total;
      }
      pred.scores[i] = acc;
    }
  }
  return pred;
}

std::string serialize_model(const ForestModel& model) {
  std::string buf;
  buf.append(kModelMagic, sizeof(kModelMagic));
  put<std::uint32_t>(buf, kModelVersion);
  put<std::int32_t>(buf, model.params.n_estimators);
  put<std::int32_t>(buf, model.params.max_depth);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(model.params.max_features));
  put<std::int32_t>(buf, model.params.min_samples_split);
  put<std::int32_t>(buf, model.params.min_samples_leaf);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(model.params.class_weight));
  put<std::uint64_t>(buf, model.params.seed);
  const FeatureMask& m = model.mask;
  for (bool b : {m.coordinates, m.swir, m.nir, m.green, m.vi, m.geometric}) {
    put<std::uint8_t>(buf, b ? 1 : 0);
  }
  put<double>(buf, model.radius_m);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(kNumClasses));
  for (double w : model.class_weights) put<double>(buf, w);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(model.feature_schema.size()));
  for (const auto& name : model.feature_schema) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
  }
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& tree : model.trees) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      put<std::int32_t>(buf, node.feature);
      put<double>(buf, node.threshold);
      put<std::int32_t>(buf, node.left);
      put<std::int32_t>(buf, node.right);
      put<std::int32_t>(buf, node.leaf);
    }
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(tree.leaf_weights.size()));
    for (const auto& w : tree.leaf_weights) {
      for (double v : w) put<double>(buf, v);
    }
  }
  return buf;
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
  const std::string buf = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const char* p = data.data();
  const char* end = data.data() + data.size();

  if (data.size() < sizeof(kModelMagic) ||
      std::memcmp(p, kModelMagic, sizeof(kModelMagic)) != 0) {
    throw IoError(path.string() + ": not a forest model file");
  }
  p += sizeof(kModelMagic);
  const auto version = take<std::uint32_t>(p, end);
  if (version != kModelVersion) {
    throw IoError(path.string() + ": unsupported model version " + std::to_string(version));
  }

  ForestModel model;
  model.params.n_estimators = take<std::int32_t>(p, end);
  model.params.max_depth = take<std::int32_t>(p, end);
  model.params.max_features = static_cast<MaxFeaturesRule>(take<std::uint8_t>(p, end));
  model.params.min_samples_split = take<std::int32_t>(p, end);
  model.params.min_samples_leaf = take<std::int32_t>(p, end);
  model.params.class_weight = static_cast<ClassWeightMode>(take<std::uint8_t>(p, end));
  model.params.seed = take<std::uint64_t>(p, end);
  bool* mask_fields[6] = {&model.mask.coordinates, &model.mask.swir, &model.mask.nir,
                          &model.mask.green, &model.mask.vi, &model.mask.geometric};
  for (bool* b : mask_fields) *b = take<std::uint8_t>(p, end) != 0;
  model.radius_m = take<double>(p, end);

  const auto n_classes = take<std::uint32_t>(p, end);
  if (n_classes != kNumClasses) {
    throw ValidationError(path.string() + ": model class count " +
                          std::to_string(n_classes) + " != " + std::to_string(kNumClasses));
  }
  for (auto& w : model.class_weights) w = take<double>(p, end);

  const auto n_cols = take<std::uint32_t>(p, end);
  model.feature_schema.resize(n_cols);
  for (auto& name : model.feature_schema) {
    const auto len = take<std::uint32_t>(p, end);
    if (p + len > end) throw IoError("model file truncated");
    name.assign(p, len);
    p += len;
  }

  const auto n_trees = take<std::uint32_t>(p, end);
  if (n_trees == 0) throw ValidationError(path.string() + ": model has zero trees");
  if (n_trees != static_cast<std::uint32_t>(model.params.n_estimators)) {
    throw ValidationError(path.string() + ": tree count does not match n_estimators");
  }
  model.trees.resize(n_trees);
  for (auto& tree : model.trees) {
    const auto n_nodes = take<std::uint32_t>(p, end);
    if (n_nodes == 0) throw ValidationError(path.string() + ": empty tree");
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      node.feature = take<std::int32_t>(p, end);
      node.threshold = take<double>(p, end);
      node.left = take<std::int32_t>(p, end);
      node.right = take<std::int32_t>(p, end);
      node.leaf = take<std::int32_t>(p, end);
    }
    const auto n_leaves = take<std::uint32_t>(p, end);
    tree.leaf_weights.resize(n_leaves);
    for (auto& w : tree.leaf_weights) {
      for (auto& v : w) v = take<double>(p, end);
    }
    // Structural validation so corrupt files fail loudly instead of crashing.
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        if (node.left < 0 || node.right < 0 ||
            node.left >= static_cast<std::int32_t>(n_nodes) ||
            node.right >= static_cast<std::int32_t>(n_nodes) ||
            node.feature >= static_cast<std::int32_t>(model.feature_schema.size())) {
          throw ValidationError(path.string() + ": malformed tree node");
        }
      } else if (node.leaf < 0 || node.leaf >= static_cast<std::int32_t>(n_leaves)) {
        throw ValidationError(path.string() + ": leaf index out of range");
      }
    }
  }
  if (p != end) throw IoError(path.string() + ": trailing bytes after model data");
  return model;
}

}  // namespace forestseg
