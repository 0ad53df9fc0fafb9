#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

// From-scratch binary tree ensembles: a bootstrap random forest with Gini
// splits and logistic-loss gradient boosting. Split candidates are midpoints
// between sorted distinct feature values; ties resolve to the lowest feature
// index, then the lowest threshold, so training is deterministic per seed.

namespace stylo::ensemble {

enum class ModelKind { kRandomForest, kGradientBoosted };
std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view s);

// Internal nodes route x[feature] <= threshold to the left child. value is
// the class probability at the node for forests and the margin increment for
// boosted trees (already scaled by the learning rate). cover is the training
// weight that reached the node: bootstrap sample count for forests, hessian
// mass for boosted trees; the explainer weights path expectations with it.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double cover = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

// Walks x to a leaf and returns its value.
double tree_value(const Tree& tree, const Eigen::VectorXd& x);

struct ForestConfig {
  int n_trees = 200;
  int max_depth = 12;
  int min_leaf = 1;
  int features_per_split = 0;  // 0 picks ceil(sqrt(feature count))
};

struct GbtConfig {
  int n_rounds = 300;
  double learning_rate = 0.1;
  int max_depth = 4;
  int min_leaf = 1;
  double l2_reg = 1.0;
};

struct TreeEnsemble {
  ModelKind kind = ModelKind::kRandomForest;
  std::vector<Tree> trees;
  double base_score = 0.0;  // margin init for boosted trees, 0 for forests
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  ForestConfig forest_config;  // the config matching kind was used in training
  GbtConfig gbt_config;

  std::size_t feature_count() const { return feature_names.size(); }
};

// Bootstrap-bagged trees with Gini splits over per-node random feature
// subsets. Labels must be 0/1; X rows are samples. Empty feature_names are
// synthesized as f0..f{d-1}. A single-class y degenerates to one root leaf
// and appends a warning.
TreeEnsemble train_random_forest(const Eigen::MatrixXd& X,
                                 const std::vector<int>& y,
                                 std::vector<std::string> feature_names,
                                 ForestConfig config, std::uint64_t seed,
                                 std::vector<std::string>* warnings = nullptr);

// base_score is the log-odds of the training base rate; each round fits one
// tree to (gradient, hessian) statistics of the logistic loss, leaf value
// -G/(H + l2_reg) scaled by the learning rate, split gain
// (G_L^2/(H_L+reg) + G_R^2/(H_R+reg) - G^2/(H+reg)) / 2. loss_curve, when
// given, receives the mean training loss before boosting and after each round.
TreeEnsemble train_gbt(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       std::vector<std::string> feature_names, GbtConfig config,
                       std::uint64_t seed,
                       std::vector<double>* loss_curve = nullptr,
                       std::vector<std::string>* warnings = nullptr);

// Attribution-space output: mean tree vote for a forest, base_score plus the
// summed leaf values for boosted trees.
double raw_output(const TreeEnsemble& model, const Eigen::VectorXd& x);

struct Prediction {
  double probability = 0.0;
  int label = 0;  // 1 iff probability >= 0.5
};

Prediction predict(const TreeEnsemble& model, const Eigen::VectorXd& x);
std::vector<Prediction> predict_all(const TreeEnsemble& model,
                                    const Eigen::MatrixXd& X);

struct Metrics {
  double accuracy = 0.0;
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;
  int n_test = 0;
};

Metrics evaluate(const TreeEnsemble& model, const Eigen::MatrixXd& X,
                 const std::vector<int>& y);

// JSON object text; parse -> dump round trips byte-identically.
std::string to_json(const TreeEnsemble& model);
TreeEnsemble ensemble_from_json(std::string_view text);
void save_model(const TreeEnsemble& model, const std::string& path);
TreeEnsemble load_model(const std::string& path);

}  // namespace stylo::ensemble
