#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "forestseg/random_forest.hpp"
#include "forestseg/rng.hpp"

using namespace forestseg;
namespace fs = std::filesystem;

namespace {

FeatureTable make_table(std::vector<std::string> columns,
                        const std::vector<std::vector<double>>& rows) {
  FeatureTable t;
  t.columns = std::move(columns);
  t.rows = rows.size();
  for (const auto& r : rows) t.values.insert(t.values.end(), r.begin(), r.end());
  return t;
}

struct Blobs {
  FeatureTable table;
  std::vector<SemanticClass> labels;
};

Blobs gaussian_blobs(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  b.table.columns = {"f0", "f1"};
  auto add = [&](double cx, double cy, SemanticClass cls) {
    for (std::size_t i = 0; i < per_class; ++i) {
      b.table.values.push_back(cx + 0.3 * rng.next_normal());
      b.table.values.push_back(cy + 0.3 * rng.next_normal());
      b.labels.push_back(cls);
    }
  };
  add(0.0, 0.0, SemanticClass::Ground);
  add(5.0, 5.0, SemanticClass::Foliage);
  b.table.rows = b.labels.size();
  return b;
}

double accuracy(std::span<const SemanticClass> truth, std::span<const SemanticClass> pred) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

fs::path temp_file(const char* name) {
  const auto dir = fs::temp_directory_path() / "forestseg_rf_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("balanced class weights follow N / (K * count)") {
  std::vector<SemanticClass> labels;
  for (int i = 0; i < 90; ++i) labels.push_back(SemanticClass::Ground);
  for (int i = 0; i < 10; ++i) labels.push_back(SemanticClass::Trunk);
  const auto w = class_weights_balanced(labels);
  CHECK(w[0] == doctest::Approx(100.0 / (2 * 90)));
  CHECK(w[2] == doctest::Approx(5.0));
  CHECK(w[1] == 0.0);  // absent class

  // Equal counts give unit weights.
  labels.clear();
  for (SemanticClass c : kAllClasses) {
    for (int i = 0; i < 7; ++i) labels.push_back(c);
  }
  for (double v : class_weights_balanced(labels)) CHECK(v == doctest::Approx(1.0));

  // Single class present.
  labels.assign(12, SemanticClass::Foliage);
  CHECK(class_weights_balanced(labels)[4] == doctest::Approx(1.0));
  CHECK_THROWS_AS(class_weights_balanced({}), ValidationError);
}

TEST_CASE("doubling one class's samples halves its balanced weight") {
  std::vector<SemanticClass> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(SemanticClass::Ground);
  for (int i = 0; i < 20; ++i) labels.push_back(SemanticClass::Foliage);
  const auto w1 = class_weights_balanced(labels);
  for (int i = 0; i < 20; ++i) labels.push_back(SemanticClass::Foliage);
  const auto w2 = class_weights_balanced(labels);
  // weight * count stays proportional to N: w2_foliage relates to w1 by
  // (N2/N1) * (count1/count2) = (80/60) * (20/40) = 2/3.
  CHECK(w2[4] == doctest::Approx(w1[4] * (80.0 / 60.0) * 0.5));
}

TEST_CASE("separable blobs train to near-perfect training accuracy") {
  const auto blobs = gaussian_blobs(200, 7);
  ForestParams params;
  params.n_estimators = 30;
  params.min_samples_leaf = 1;
  params.seed = 13;
  const auto model = train_forest(blobs.table, blobs.labels, params);
  const auto pred = predict(model, blobs.table);
  CHECK(accuracy(blobs.labels, pred.labels) >= 0.99);
}

TEST_CASE("same data and seed give bit-identical serialized models") {
  const auto blobs = gaussian_blobs(120, 21);
  ForestParams params;
  params.n_estimators = 16;
  params.seed = 5;
  const auto a = train_forest(blobs.table, blobs.labels, params);
  const auto b = train_forest(blobs.table, blobs.labels, params);
  CHECK(serialize_model(a) == serialize_model(b));

  ForestParams other = params;
  other.seed = 6;
  const auto c = train_forest(blobs.table, blobs.labels, other);
  CHECK(serialize_model(a) != serialize_model(c));
}

TEST_CASE("a single depth-0 tree predicts its leaf class everywhere") {
  ForestModel model;
  model.params.n_estimators = 1;
  model.feature_schema = {"f0"};
  DecisionTree tree;
  DecisionTree::Node leaf;
  leaf.leaf = 0;
  tree.nodes.push_back(leaf);
  tree.leaf_weights.push_back({0, 0, 0, 0, 10.0, 0});  // all mass on foliage
  model.trees.push_back(tree);

  const auto table = make_table({"f0"}, {{0.0}, {5.0}, {-3.0}});
  const auto pred = predict(model, table, true);
  for (auto lbl : pred.labels) CHECK(lbl == SemanticClass::Foliage);
  CHECK(pred.scores[0][4] == doctest::Approx(1.0));
}

TEST_CASE("scaling leaf weights by a positive constant never changes the argmax") {
  const auto blobs = gaussian_blobs(80, 33);
  ForestParams params;
  params.n_estimators = 12;
  params.seed = 3;
  auto model = train_forest(blobs.table, blobs.labels, params);
  const auto before = predict(model, blobs.table);
  for (auto& tree : model.trees) {
    for (auto& w : tree.leaf_weights) {
      for (double& v : w) v *= 37.5;
    }
  }
  const auto after = predict(model, blobs.table);
  CHECK(before.labels == after.labels);
}

TEST_CASE("model save/load round-trips to identical predictions") {
  const auto blobs = gaussian_blobs(150, 44);
  ForestParams params;
  params.n_estimators = 10;
  params.seed = 9;
  const auto model = train_forest(blobs.table, blobs.labels, params);
  const auto path = temp_file("model.bin");
  save_model(model, path);
  const auto loaded = load_model(path);
  CHECK(serialize_model(model) == serialize_model(loaded));

  Rng rng(55);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 1000; ++i) {
    rows.push_back({rng.next_uniform(-2, 7), rng.next_uniform(-2, 7)});
  }
  const auto table = make_table({"f0", "f1"}, rows);
  CHECK(predict(model, table).labels == predict(loaded, table).labels);
}

TEST_CASE("truncated and corrupt model files fail loudly") {
  const auto blobs = gaussian_blobs(60, 1);
  ForestParams params;
  params.n_estimators = 4;
  const auto model = train_forest(blobs.table, blobs.labels, params);
  const auto path = temp_file("model_full.bin");
  save_model(model, path);

  const auto serialized = serialize_model(model);
  const auto truncated_path = temp_file("model_truncated.bin");
  std::ofstream(truncated_path, std::ios::binary)
      .write(serialized.data(), static_cast<std::streamsize>(serialized.size() / 2));
  CHECK_THROWS_AS(load_model(truncated_path), IoError);

  const auto garbage_path = temp_file("model_garbage.bin");
  std::ofstream(garbage_path, std::ios::binary).write("not a model", 11);
  CHECK_THROWS_AS(load_model(garbage_path), IoError);
}

TEST_CASE("a zero-tree model file fails validation") {
  ForestModel empty;
  empty.params.n_estimators = 0;
  empty.feature_schema = {"f0"};
  const auto path = temp_file("model_empty.bin");
  std::ofstream(path, std::ios::binary) << serialize_model(empty);
  CHECK_THROWS_AS(load_model(path), ValidationError);
}

TEST_CASE("schema mismatch at predict time is an error") {
  const auto blobs = gaussian_blobs(60, 2);
  ForestParams params;
  params.n_estimators = 3;
  const auto model = train_forest(blobs.table, blobs.labels, params);
  const auto wrong = make_table({"other"}, {{1.0}});
  CHECK_THROWS_AS(predict(model, wrong), ValidationError);
}

TEST_CASE("single-class training data is rejected") {
  auto blobs = gaussian_blobs(50, 3);
  std::fill(blobs.labels.begin(), blobs.labels.end(), SemanticClass::Ground);
  ForestParams params;
  CHECK_THROWS_AS(train_forest(blobs.table, blobs.labels, params), ValidationError);
}

TEST_CASE("raising min_samples_leaf never grows the trees") {
  const auto blobs = gaussian_blobs(250, 77);
  std::size_t previous = SIZE_MAX;
  for (int msl : {1, 5, 10, 25, 60}) {
    ForestParams params;
    params.n_estimators = 8;
    params.min_samples_leaf = msl;
    params.seed = 11;
    const auto model = train_forest(blobs.table, blobs.labels, params);
    std::size_t nodes = 0;
    for (const auto& tree : model.trees) nodes += tree.node_count();
    CHECK(nodes <= previous);
    previous = nodes;
  }
}
