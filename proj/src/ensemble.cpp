#include "stylo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <utility>

#include "json.hpp"

#include "stylo/io.hpp"
#include "stylo/rng.hpp"

namespace stylo::ensemble {

namespace {

using json = nlohmann::ordered_json;

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// softplus(margin) - y * margin without overflow at large |margin|.
double logistic_loss(double margin, int y) {
  const double softplus = margin > 0.0
                              ? margin + std::log1p(std::exp(-margin))
                              : std::log1p(std::exp(margin));
  return softplus - y * margin;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // strictly positive improvement
};

void validate_training_inputs(const Eigen::MatrixXd& X, const std::vector<int>& y,
                              std::vector<std::string>& names) {
  if (X.rows() < 2) throw Error("train: needs at least 2 samples");
  if (X.cols() < 1) throw Error("train: needs at least 1 feature");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw Error("train: " + std::to_string(X.rows()) + " rows but " +
                std::to_string(y.size()) + " labels");
  for (const int v : y)
    if (v != 0 && v != 1) throw Error("train: labels must be 0 or 1");
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      names.push_back("f" + std::to_string(j));
  } else if (names.size() != static_cast<std::size_t>(X.cols())) {
    throw Error("train: got " + std::to_string(names.size()) +
                " feature names for " + std::to_string(X.cols()) + " features");
  }
}

double tree_value_row(const Tree& tree, const Eigen::MatrixXd& X, int row) {
  int idx = 0;
  while (!tree.nodes[static_cast<std::size_t>(idx)].is_leaf()) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    idx = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(idx)].value;
}

class ForestTreeBuilder {
 public:
  ForestTreeBuilder(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const ForestConfig& config, rng::Rng& rng)
      : X_(X), y_(y), config_(config), rng_(rng) {}

  Tree build(std::vector<int> rows) {
    Tree tree;
    nodes_ = &tree.nodes;
    grow(std::move(rows), 0);
    return tree;
  }

 private:
  static double gini(int pos, int n) {
    const double p = static_cast<double>(pos) / n;
    return 2.0 * p * (1.0 - p);
  }

  int grow(std::vector<int> rows, int depth) {
    const int n = static_cast<int>(rows.size());
    int pos = 0;
    for (const int r : rows) pos += y_[static_cast<std::size_t>(r)];

    const int idx = static_cast<int>(nodes_->size());
    nodes_->push_back({});
    (*nodes_)[static_cast<std::size_t>(idx)].value = static_cast<double>(pos) / n;
    (*nodes_)[static_cast<std::size_t>(idx)].cover = n;

    if (depth >= config_.max_depth || pos == 0 || pos == n ||
        n < 2 * config_.min_leaf)
      return idx;
    const Split split = best_split(rows, n, pos);
    if (split.feature < 0) return idx;

    std::vector<int> left, right;
    for (const int r : rows)
      (X_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    (*nodes_)[static_cast<std::size_t>(idx)].feature = split.feature;
    (*nodes_)[static_cast<std::size_t>(idx)].threshold = split.threshold;
    const int li = grow(std::move(left), depth + 1);
    (*nodes_)[static_cast<std::size_t>(idx)].left = li;
    const int ri = grow(std::move(right), depth + 1);
    (*nodes_)[static_cast<std::size_t>(idx)].right = ri;
    return idx;
  }

  Split best_split(const std::vector<int>& rows, int n, int pos) {
    Split best;
    const double parent = gini(pos, n);
    std::vector<int> feats =
        rng_.sample_indices(static_cast<int>(X_.cols()), config_.features_per_split);
    std::sort(feats.begin(), feats.end());

    std::vector<std::pair<double, int>> vals;  // (feature value, label)
    vals.reserve(rows.size());
    for (const int f : feats) {
      vals.clear();
      for (const int r : rows)
        vals.emplace_back(X_(r, f), y_[static_cast<std::size_t>(r)]);
      std::sort(vals.begin(), vals.end());
      int pos_left = 0;
      for (int i = 0; i + 1 < n; ++i) {
        pos_left += vals[static_cast<std::size_t>(i)].second;
        if (vals[static_cast<std::size_t>(i)].first ==
            vals[static_cast<std::size_t>(i + 1)].first)
          continue;
        const int n_left = i + 1;
        const int n_right = n - n_left;
        if (n_left < config_.min_leaf || n_right < config_.min_leaf) continue;
        const double score = parent - (n_left * gini(pos_left, n_left) +
                                       n_right * gini(pos - pos_left, n_right)) /
                                          n;
        if (score > best.score) {
          best.feature = f;
          best.threshold = (vals[static_cast<std::size_t>(i)].first +
                            vals[static_cast<std::size_t>(i + 1)].first) /
                           2.0;
          best.score = score;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const std::vector<int>& y_;
  const ForestConfig& config_;
  rng::Rng& rng_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

class GbtTreeBuilder {
 public:
  GbtTreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                 const Eigen::VectorXd& h, const GbtConfig& config)
      : X_(X), g_(g), h_(h), config_(config) {}

  Tree build() {
    Tree tree;
    nodes_ = &tree.nodes;
    std::vector<int> rows(static_cast<std::size_t>(X_.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    grow(std::move(rows), 0);
    return tree;
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    double G = 0.0;
    double H = 0.0;
    for (const int r : rows) {
      G += g_[r];
      H += h_[r];
    }

    const int idx = static_cast<int>(nodes_->size());
    nodes_->push_back({});
    (*nodes_)[static_cast<std::size_t>(idx)].value =
        -G / (H + config_.l2_reg) * config_.learning_rate;
    (*nodes_)[static_cast<std::size_t>(idx)].cover = H;

    const int n = static_cast<int>(rows.size());
    if (depth >= config_.max_depth || n < 2 * config_.min_leaf) return idx;
    const Split split = best_split(rows, n, G, H);
    if (split.feature < 0) return idx;

    std::vector<int> left, right;
    for (const int r : rows)
      (X_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    (*nodes_)[static_cast<std::size_t>(idx)].feature = split.feature;
    (*nodes_)[static_cast<std::size_t>(idx)].threshold = split.threshold;
    const int li = grow(std::move(left), depth + 1);
    (*nodes_)[static_cast<std::size_t>(idx)].left = li;
    const int ri = grow(std::move(right), depth + 1);
    (*nodes_)[static_cast<std::size_t>(idx)].right = ri;
    return idx;
  }

  Split best_split(const std::vector<int>& rows, int n, double G, double H) {
    Split best;
    const double reg = config_.l2_reg;
    const double parent = G * G / (H + reg);

    std::vector<std::tuple<double, double, double>> vals;  // value, g, h
    vals.reserve(rows.size());
    for (int f = 0; f < static_cast<int>(X_.cols()); ++f) {
      vals.clear();
      for (const int r : rows) vals.emplace_back(X_(r, f), g_[r], h_[r]);
      std::sort(vals.begin(), vals.end());
      double gl = 0.0;
      double hl = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        gl += std::get<1>(vals[static_cast<std::size_t>(i)]);
        hl += std::get<2>(vals[static_cast<std::size_t>(i)]);
        if (std::get<0>(vals[static_cast<std::size_t>(i)]) ==
            std::get<0>(vals[static_cast<std::size_t>(i + 1)]))
          continue;
        const int n_left = i + 1;
        if (n_left < config_.min_leaf || n - n_left < config_.min_leaf) continue;
        const double gr = G - gl;
        const double hr = H - hl;
        const double score =
            0.5 * (gl * gl / (hl + reg) + gr * gr / (hr + reg) - parent);
        if (score > best.score) {
          best.feature = f;
          best.threshold = (std::get<0>(vals[static_cast<std::size_t>(i)]) +
                            std::get<0>(vals[static_cast<std::size_t>(i + 1)])) /
                           2.0;
          best.score = score;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& g_;
  const Eigen::VectorXd& h_;
  const GbtConfig& config_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

json nodes_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const TreeNode& nd : tree.nodes)
    nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value,
                     nd.cover});
  return nodes;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kRandomForest ? "random_forest" : "gradient_boosted";
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "random_forest") return ModelKind::kRandomForest;
  if (s == "gradient_boosted") return ModelKind::kGradientBoosted;
  throw Error("unknown model kind: " + std::string(s));
}

double tree_value(const Tree& tree, const Eigen::VectorXd& x) {
  int idx = 0;
  while (!tree.nodes[static_cast<std::size_t>(idx)].is_leaf()) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(idx)].value;
}

TreeEnsemble train_random_forest(const Eigen::MatrixXd& X,
                                 const std::vector<int>& y,
                                 std::vector<std::string> feature_names,
                                 ForestConfig config, std::uint64_t seed,
                                 std::vector<std::string>* warnings) {
  validate_training_inputs(X, y, feature_names);
  if (config.n_trees < 1) throw Error("train: n_trees must be positive");
  if (config.max_depth < 0) throw Error("train: max_depth must be nonnegative");
  if (config.min_leaf < 1) throw Error("train: min_leaf must be positive");

  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  config.features_per_split =
      config.features_per_split <= 0
          ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))))
          : std::min(config.features_per_split, d);

  TreeEnsemble model;
  model.kind = ModelKind::kRandomForest;
  model.feature_names = std::move(feature_names);
  model.seed = seed;
  model.forest_config = config;

  const int pos = std::accumulate(y.begin(), y.end(), 0);
  if (pos == 0 || pos == n) {
    if (warnings)
      warnings->push_back("training labels are single-class; the forest is a single leaf");
    Tree leaf;
    leaf.nodes.push_back({-1, 0.0, -1, -1, pos == 0 ? 0.0 : 1.0,
                          static_cast<double>(n)});
    model.trees.push_back(std::move(leaf));
    return model;
  }

  for (int t = 0; t < config.n_trees; ++t) {
    rng::Rng rng{rng::derive(seed, static_cast<std::uint64_t>(t))};
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (auto& r : rows)
      r = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    ForestTreeBuilder builder{X, y, config, rng};
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return model;
}

TreeEnsemble train_gbt(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       std::vector<std::string> feature_names, GbtConfig config,
                       std::uint64_t seed, std::vector<double>* loss_curve,
                       std::vector<std::string>* warnings) {
  validate_training_inputs(X, y, feature_names);
  if (config.learning_rate <= 0.0)
    throw Error("train: learning_rate must be positive");
  if (config.n_rounds < 0) throw Error("train: n_rounds must be nonnegative");
  if (config.max_depth < 0) throw Error("train: max_depth must be nonnegative");
  if (config.min_leaf < 1) throw Error("train: min_leaf must be positive");
  if (config.l2_reg < 0.0) throw Error("train: l2_reg must be nonnegative");

  const int n = static_cast<int>(X.rows());
  TreeEnsemble model;
  model.kind = ModelKind::kGradientBoosted;
  model.feature_names = std::move(feature_names);
  model.seed = seed;
  model.gbt_config = config;

  const int pos = std::accumulate(y.begin(), y.end(), 0);
  double base_rate = static_cast<double>(pos) / n;
  if (pos == 0 || pos == n) {
    if (warnings)
      warnings->push_back(
          "training labels are single-class; boosting starts from a clamped base rate");
    base_rate = std::clamp(base_rate, 1e-12, 1.0 - 1e-12);
  }
  model.base_score = std::log(base_rate / (1.0 - base_rate));

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_score);
  const auto mean_loss = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += logistic_loss(margin[i], y[static_cast<std::size_t>(i)]);
    return s / n;
  };
  if (loss_curve) {
    loss_curve->clear();
    loss_curve->push_back(mean_loss());
  }

  Eigen::VectorXd g(n);
  Eigen::VectorXd h(n);
  for (int round = 0; round < config.n_rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - y[static_cast<std::size_t>(i)];
      h[i] = p * (1.0 - p);
    }
    GbtTreeBuilder builder{X, g, h, config};
    Tree tree = builder.build();
    for (int i = 0; i < n; ++i) margin[i] += tree_value_row(tree, X, i);
    model.trees.push_back(std::move(tree));
    if (loss_curve) loss_curve->push_back(mean_loss());
  }
  return model;
}

double raw_output(const TreeEnsemble& model, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model.feature_count())
    throw Error("predict: dimension mismatch, input has " +
                std::to_string(x.size()) + " features but the model expects " +
                std::to_string(model.feature_count()));
  if (model.kind == ModelKind::kRandomForest) {
    if (model.trees.empty()) throw Error("predict: forest has no trees");
    double s = 0.0;
    for (const Tree& tree : model.trees) s += tree_value(tree, x);
    return s / static_cast<double>(model.trees.size());
  }
  double s = model.base_score;
  for (const Tree& tree : model.trees) s += tree_value(tree, x);
  return s;
}

Prediction predict(const TreeEnsemble& model, const Eigen::VectorXd& x) {
  const double raw = raw_output(model, x);
  Prediction p;
  p.probability = model.kind == ModelKind::kRandomForest ? raw : sigmoid(raw);
  p.label = p.probability >= 0.5 ? 1 : 0;
  return p;
}

std::vector<Prediction> predict_all(const TreeEnsemble& model,
                                    const Eigen::MatrixXd& X) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out.push_back(predict(model, X.row(i)));
  return out;
}

Metrics evaluate(const TreeEnsemble& model, const Eigen::MatrixXd& X,
                 const std::vector<int>& y) {
  if (X.rows() == 0) throw Error("evaluate: empty test set");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw Error("evaluate: " + std::to_string(X.rows()) + " rows but " +
                std::to_string(y.size()) + " labels");
  Metrics m;
  m.n_test = static_cast<int>(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int truth = y[static_cast<std::size_t>(i)];
    if (truth != 0 && truth != 1) throw Error("evaluate: labels must be 0 or 1");
    const Prediction p = predict(model, X.row(i));
    if (p.label == 1)
      ++(truth == 1 ? m.tp : m.fp);
    else
      ++(truth == 0 ? m.tn : m.fn);
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / m.n_test;
  return m;
}

std::string to_json(const TreeEnsemble& model) {
  json obj = json::object();
  obj["format"] = "stylo-ensemble";
  obj["version"] = 1;
  obj["kind"] = std::string(to_string(model.kind));
  obj["seed"] = model.seed;
  obj["base_score"] = model.base_score;
  if (model.kind == ModelKind::kRandomForest) {
    obj["config"] = {{"n_trees", model.forest_config.n_trees},
                     {"max_depth", model.forest_config.max_depth},
                     {"min_leaf", model.forest_config.min_leaf},
                     {"features_per_split", model.forest_config.features_per_split}};
  } else {
    obj["config"] = {{"n_rounds", model.gbt_config.n_rounds},
                     {"learning_rate", model.gbt_config.learning_rate},
                     {"max_depth", model.gbt_config.max_depth},
                     {"min_leaf", model.gbt_config.min_leaf},
                     {"l2_reg", model.gbt_config.l2_reg}};
  }
  obj["feature_names"] = model.feature_names;
  json trees = json::array();
  for (const Tree& tree : model.trees) trees.push_back(nodes_to_json(tree));
  obj["trees"] = std::move(trees);
  return obj.dump();
}

TreeEnsemble ensemble_from_json(std::string_view text) {
  try {
    const json obj = json::parse(text);
    if (obj.at("format").get<std::string>() != "stylo-ensemble" ||
        obj.at("version").get<int>() != 1)
      throw Error("ensemble model: unknown format or version");

    TreeEnsemble model;
    model.kind = model_kind_from_string(obj.at("kind").get<std::string>());
    model.seed = obj.at("seed").get<std::uint64_t>();
    model.base_score = obj.at("base_score").get<double>();
    const json& config = obj.at("config");
    if (model.kind == ModelKind::kRandomForest) {
      model.forest_config.n_trees = config.at("n_trees").get<int>();
      model.forest_config.max_depth = config.at("max_depth").get<int>();
      model.forest_config.min_leaf = config.at("min_leaf").get<int>();
      model.forest_config.features_per_split =
          config.at("features_per_split").get<int>();
    } else {
      model.gbt_config.n_rounds = config.at("n_rounds").get<int>();
      model.gbt_config.learning_rate = config.at("learning_rate").get<double>();
      model.gbt_config.max_depth = config.at("max_depth").get<int>();
      model.gbt_config.min_leaf = config.at("min_leaf").get<int>();
      model.gbt_config.l2_reg = config.at("l2_reg").get<double>();
    }
    model.feature_names =
        obj.at("feature_names").get<std::vector<std::string>>();

    for (const json& tree_json : obj.at("trees")) {
      Tree tree;
      for (const json& nd : tree_json) {
        if (!nd.is_array() || nd.size() != 6)
          throw Error("ensemble model: malformed node");
        TreeNode node;
        node.feature = nd[0].get<int>();
        node.threshold = nd[1].get<double>();
        node.left = nd[2].get<int>();
        node.right = nd[3].get<int>();
        node.value = nd[4].get<double>();
        node.cover = nd[5].get<double>();
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw Error("ensemble model: empty tree");
      const int count = static_cast<int>(tree.nodes.size());
      for (const TreeNode& node : tree.nodes) {
        if (node.is_leaf()) {
          if (node.left != -1 || node.right != -1)
            throw Error("ensemble model: leaf with children");
        } else {
          if (node.feature >= static_cast<int>(model.feature_count()))
            throw Error("ensemble model: feature index out of range");
          if (node.left < 0 || node.left >= count || node.right < 0 ||
              node.right >= count)
            throw Error("ensemble model: child index out of range");
        }
      }
      model.trees.push_back(std::move(tree));
    }
    if (model.kind == ModelKind::kRandomForest && model.trees.empty())
      throw Error("ensemble model: forest has no trees");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("ensemble model: ") + e.what());
  }
}

void save_model(const TreeEnsemble& model, const std::string& path) {
  io::write_file(path, to_json(model) + "\n");
}

TreeEnsemble load_model(const std::string& path) {
  return ensemble_from_json(io::read_file(path));
}

}  // namespace stylo::ensemble
