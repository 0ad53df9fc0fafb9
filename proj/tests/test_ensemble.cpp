#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "stylo/ensemble.hpp"
#include "stylo/io.hpp"
#include "stylo/rng.hpp"

using namespace stylo::ensemble;
using stylo::rng::Rng;

namespace {

template <class Fn>
void expect_error(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected an error containing '" << needle << "'");
  } catch (const stylo::Error& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// Features on a half-integer grid: affine maps and midpoints stay exact, so
// rescaling-invariance checks can demand bitwise-equal predictions.
Eigen::MatrixXd grid_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd X(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      X(i, j) = static_cast<double>(rng.below(10)) / 2.0;
  return X;
}

std::vector<int> random_labels(int rows, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(rows));
  for (auto& v : y) v = static_cast<int>(rng.below(2));
  y[0] = 0;  // guarantee both classes
  y[1] = 1;
  return y;
}

// The four XOR cells duplicated 25 times each: exactly representable by a
// depth-2 tree (split f0 at the root, then f1 in each child).
void xor_data(Eigen::MatrixXd& X, std::vector<int>& y) {
  X.resize(100, 2);
  y.assign(100, 0);
  const double cells[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 100; ++i) {
    X(i, 0) = cells[i % 4][0];
    X(i, 1) = cells[i % 4][1];
    y[static_cast<std::size_t>(i)] = static_cast<int>(X(i, 0)) ^ static_cast<int>(X(i, 1));
  }
}

TreeEnsemble probability_stump() {
  TreeEnsemble m;
  m.kind = ModelKind::kRandomForest;
  m.feature_names = {"f0", "f1"};
  Tree t;
  t.nodes.push_back({0, 0.5, 1, 2, 0.5, 4.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 0.0, 2.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 1.0, 2.0});
  m.trees.push_back(t);
  return m;
}

}  // namespace

// X = [0,0,1,1] on one feature, y = [0,0,1,1], one round, depth 1, lr = 1,
// l2 = 1. Hand evaluation: base rate 1/2 gives base_score 0, so every g_i is
// +-1/2 and every h_i is 1/4. The only candidate split (midpoint 1/2) has
// G_L = 1, H_L = 1/2, G_R = -1, H_R = 1/2, gain (1/1.5 + 1/1.5)/2 = 2/3, and
// leaf values -G/(H + 1) = -+2/3.
TEST_CASE("gbt: one-round hand fixture") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 0, 1, 1;
  const std::vector<int> y = {0, 0, 1, 1};
  GbtConfig config;
  config.n_rounds = 1;
  config.learning_rate = 1.0;
  config.max_depth = 1;
  config.l2_reg = 1.0;

  std::vector<double> loss;
  const TreeEnsemble model = train_gbt(X, y, {"x"}, config, 0, &loss);

  CHECK(model.base_score == 0.0);
  REQUIRE(model.trees.size() == 1);
  const Tree& tree = model.trees[0];
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 0.5);
  CHECK(tree.nodes[0].cover == 1.0);  // hessian mass 4 * 1/4
  const TreeNode& left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
  const TreeNode& right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
  CHECK(left.is_leaf());
  CHECK(right.is_leaf());
  CHECK(left.value == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(right.value == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(left.cover == 0.5);
  CHECK(right.cover == 0.5);

  Eigen::VectorXd x0(1), x1(1);
  x0 << 0.0;
  x1 << 1.0;
  CHECK(predict(model, x0).probability ==
        doctest::Approx(1.0 / (1.0 + std::exp(2.0 / 3.0))).epsilon(1e-12));
  CHECK(predict(model, x0).label == 0);
  CHECK(predict(model, x1).label == 1);

  REQUIRE(loss.size() == 2);
  CHECK(loss[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss[1] ==
        doctest::Approx(std::log1p(std::exp(-2.0 / 3.0))).epsilon(1e-12));
}

TEST_CASE("gbt: zero rounds predicts the training base rate") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 1, 2, 3, 4, 5, 6, 7;
  GbtConfig config;
  config.n_rounds = 0;

  const TreeEnsemble skewed = train_gbt(X, {0, 1, 1, 1}, {}, config, 1);
  CHECK(skewed.trees.empty());
  Eigen::VectorXd x(2);
  x << 9.0, -3.0;
  CHECK(predict(skewed, x).probability == doctest::Approx(0.75).epsilon(1e-15));

  const TreeEnsemble balanced = train_gbt(X, {0, 0, 1, 1}, {}, config, 1);
  CHECK(balanced.base_score == 0.0);
  CHECK(predict(balanced, x).probability == 0.5);
}

TEST_CASE("gbt: training loss is non-increasing") {
  Rng rng{91};
  const Eigen::MatrixXd X = grid_matrix(80, 3, rng);
  std::vector<int> y(80);
  for (int i = 0; i < 80; ++i) {
    const bool flip = rng.below(10) == 0;
    y[static_cast<std::size_t>(i)] = (X(i, 0) > X(i, 1)) != flip ? 1 : 0;
  }
  GbtConfig config;
  config.n_rounds = 60;
  config.learning_rate = 0.3;
  config.max_depth = 3;

  std::vector<double> loss;
  train_gbt(X, y, {}, config, 5, &loss);
  REQUIRE(loss.size() == 61);
  for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-12);
}

TEST_CASE("gbt: single-class labels degenerate to the clamped base rate") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  GbtConfig config;
  config.n_rounds = 3;
  std::vector<std::string> warnings;
  const TreeEnsemble model = train_gbt(X, {1, 1, 1}, {}, config, 2, nullptr, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("single-class") != std::string::npos);
  Eigen::VectorXd x(1);
  x << 5.0;
  CHECK(predict(model, x).probability > 0.99);
}

TEST_CASE("forest: xor is learned exactly at depth 2") {
  Eigen::MatrixXd X;
  std::vector<int> y;
  xor_data(X, y);
  ForestConfig config;
  config.n_trees = 50;
  config.max_depth = 2;
  config.features_per_split = 2;

  const TreeEnsemble model = train_random_forest(X, y, {"a", "b"}, config, 7);
  const Metrics m = evaluate(model, X, y);
  CHECK(m.accuracy == 1.0);
  CHECK(m.n_test == 100);
  CHECK(m.tp + m.tn == 100);
}

TEST_CASE("forest: pure labels give a single-leaf forest with a warning") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 1, 2, 3, 4, 5, 6, 7;
  std::vector<std::string> warnings;
  const TreeEnsemble model =
      train_random_forest(X, {1, 1, 1, 1}, {}, ForestConfig{}, 3, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("single-class") != std::string::npos);
  REQUIRE(model.trees.size() == 1);
  CHECK(model.trees[0].nodes.size() == 1);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const Prediction p = predict(model, x);
  CHECK(p.probability == 1.0);
  CHECK(p.label == 1);
}

TEST_CASE("training is deterministic per seed") {
  Rng rng{17};
  const Eigen::MatrixXd X = grid_matrix(100, 6, rng);
  const std::vector<int> y = random_labels(100, rng);

  ForestConfig fc;
  fc.n_trees = 20;
  fc.max_depth = 5;
  const std::string f1 = to_json(train_random_forest(X, y, {}, fc, 42));
  const std::string f2 = to_json(train_random_forest(X, y, {}, fc, 42));
  const std::string f3 = to_json(train_random_forest(X, y, {}, fc, 43));
  CHECK(f1 == f2);
  CHECK(f1 != f3);

  GbtConfig gc;
  gc.n_rounds = 20;
  gc.learning_rate = 0.3;
  const std::string g1 = to_json(train_gbt(X, y, {}, gc, 42));
  const std::string g2 = to_json(train_gbt(X, y, {}, gc, 42));
  CHECK(g1 == g2);
}

// Threshold splits depend only on the ordering of feature values, so mapping
// a column through x -> 2x + 1 in both training and test data must leave
// every prediction bitwise unchanged.
TEST_CASE("strictly monotone feature rescaling leaves predictions unchanged") {
  Rng rng{23};
  const Eigen::MatrixXd X = grid_matrix(90, 4, rng);
  const std::vector<int> y = random_labels(90, rng);
  Eigen::MatrixXd X2 = X;
  X2.col(2) = (2.0 * X.col(2)).array() + 1.0;

  const Eigen::MatrixXd T = grid_matrix(20, 4, rng);
  Eigen::MatrixXd T2 = T;
  T2.col(2) = (2.0 * T.col(2)).array() + 1.0;

  ForestConfig fc;
  fc.n_trees = 15;
  fc.max_depth = 4;
  const TreeEnsemble forest1 = train_random_forest(X, y, {}, fc, 11);
  const TreeEnsemble forest2 = train_random_forest(X2, y, {}, fc, 11);

  GbtConfig gc;
  gc.n_rounds = 15;
  gc.learning_rate = 0.3;
  const TreeEnsemble gbt1 = train_gbt(X, y, {}, gc, 11);
  const TreeEnsemble gbt2 = train_gbt(X2, y, {}, gc, 11);

  for (int i = 0; i < T.rows(); ++i) {
    CHECK(predict(forest1, T.row(i)).probability ==
          predict(forest2, T2.row(i)).probability);
    CHECK(predict(gbt1, T.row(i)).probability ==
          predict(gbt2, T2.row(i)).probability);
  }
}

TEST_CASE("ensemble output is invariant under tree reordering") {
  Rng rng{29};
  const Eigen::MatrixXd X = grid_matrix(60, 3, rng);
  const std::vector<int> y = random_labels(60, rng);
  ForestConfig fc;
  fc.n_trees = 9;
  fc.max_depth = 4;
  TreeEnsemble model = train_random_forest(X, y, {}, fc, 31);

  Eigen::VectorXd x(3);
  x << 1.5, 0.5, 3.0;
  const double before = raw_output(model, x);
  std::rotate(model.trees.begin(), model.trees.begin() + 4, model.trees.end());
  CHECK(raw_output(model, x) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("predict: handmade fixtures trace the expected paths") {
  // Forest of three identical stumps: the mean vote equals one stump's vote.
  TreeEnsemble forest = probability_stump();
  forest.trees.push_back(forest.trees[0]);
  forest.trees.push_back(forest.trees[0]);
  Eigen::VectorXd x(2);
  x << 0.0, 7.0;
  CHECK(predict(forest, x).probability == 0.0);
  x << 1.0, 7.0;
  CHECK(predict(forest, x).probability == 1.0);

  // Depth-2 hand-traced tree.
  TreeEnsemble deep;
  deep.kind = ModelKind::kRandomForest;
  deep.feature_names = {"f0", "f1"};
  Tree t;
  t.nodes.push_back({0, 0.5, 1, 2, 0.5, 8.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 0.2, 4.0});
  t.nodes.push_back({1, 1.5, 3, 4, 0.8, 4.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 0.7, 2.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 0.9, 2.0});
  deep.trees.push_back(t);
  x << 0.0, 9.0;
  CHECK(predict(deep, x).probability == 0.2);
  x << 1.0, 1.0;
  CHECK(predict(deep, x).probability == 0.7);
  x << 1.0, 2.0;
  CHECK(predict(deep, x).probability == 0.9);

  // Boosted model whose leaves are all zero predicts sigmoid(base_score).
  TreeEnsemble gbt;
  gbt.kind = ModelKind::kGradientBoosted;
  gbt.feature_names = {"f0"};
  gbt.base_score = 0.4;
  Tree stump;
  stump.nodes.push_back({-1, 0.0, -1, -1, 0.0, 1.0});
  gbt.trees.push_back(stump);
  Eigen::VectorXd x1(1);
  x1 << 123.0;
  CHECK(predict(gbt, x1).probability == doctest::Approx(sigmoid(0.4)).epsilon(1e-15));
}

TEST_CASE("evaluate: accuracy and confusion counts") {
  const TreeEnsemble model = probability_stump();
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 0, 1, 1, 0, 1, 1;  // votes 0, 0, 1, 1

  Metrics right = evaluate(model, X, {0, 0, 1, 1});
  CHECK(right.accuracy == 1.0);
  CHECK(right.tp == 2);
  CHECK(right.tn == 2);
  CHECK(right.fp == 0);
  CHECK(right.fn == 0);

  Metrics wrong = evaluate(model, X, {1, 1, 0, 0});
  CHECK(wrong.accuracy == 0.0);
  CHECK(wrong.fp == 2);
  CHECK(wrong.fn == 2);

  Metrics mixed = evaluate(model, X, {0, 1, 1, 0});
  CHECK(mixed.accuracy == 0.5);
  CHECK(mixed.accuracy ==
        static_cast<double>(mixed.tp + mixed.tn) / mixed.n_test);

  expect_error([&] { evaluate(model, Eigen::MatrixXd(0, 2), {}); }, "empty");
}

TEST_CASE("json round trip is byte-identical and predictions survive") {
  Rng rng{37};
  const Eigen::MatrixXd X = grid_matrix(70, 4, rng);
  const std::vector<int> y = random_labels(70, rng);
  ForestConfig fc;
  fc.n_trees = 8;
  fc.max_depth = 4;
  const TreeEnsemble model = train_random_forest(X, y, {}, fc, 53);

  const std::string s1 = to_json(model);
  const TreeEnsemble back = ensemble_from_json(s1);
  CHECK(to_json(back) == s1);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = X.row(i);
    CHECK(predict(back, x).probability == predict(model, x).probability);
  }

  const std::string path = "ensemble_roundtrip.json";
  save_model(model, path);
  const TreeEnsemble loaded = load_model(path);
  CHECK(to_json(loaded) == s1);
  std::remove(path.c_str());
}

TEST_CASE("invalid inputs are rejected") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 1, 2, 3, 4, 5, 6, 7;
  const std::vector<int> y = {0, 1, 0, 1};

  expect_error([&] { train_random_forest(X, {0, 1}, {}, ForestConfig{}, 0); },
               "labels");
  expect_error([&] { train_random_forest(X, {0, 2, 0, 1}, {}, ForestConfig{}, 0); },
               "0 or 1");
  expect_error(
      [&] { train_random_forest(X, y, {"only_one"}, ForestConfig{}, 0); },
      "feature names");
  expect_error([&] {
    ForestConfig config;
    config.n_trees = 0;
    train_random_forest(X, y, {}, config, 0);
  }, "n_trees");
  expect_error([&] {
    Eigen::MatrixXd one(1, 2);
    one << 0, 1;
    train_random_forest(one, {1}, {}, ForestConfig{}, 0);
  }, "at least");
  expect_error([&] {
    GbtConfig config;
    config.learning_rate = 0.0;
    train_gbt(X, y, {}, config, 0);
  }, "learning_rate");

  const TreeEnsemble model = probability_stump();
  Eigen::VectorXd bad(3);
  bad << 1, 2, 3;
  expect_error([&] { predict(model, bad); }, "dimension");
}
