#include "stylo/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "json.hpp"
#include "stylo/rng.hpp"
#include "stylo/stats.hpp"
#include "stylo/utf8.hpp"

namespace stylo::explain {

namespace {

using json = nlohmann::ordered_json;

// Exact path-dependent TreeSHAP (Lundberg et al.). The path records, for
// each feature met so far, the fraction of subsets flowing down when the
// feature is out of the coalition (zero_fraction, cover ratios) or in it
// (one_fraction, 0/1 routing), plus the permutation weight per subset size.

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, unsigned depth, double zero_fraction,
                 double one_fraction, int feature) {
  path[depth].feature = feature;
  path[depth].zero_fraction = zero_fraction;
  path[depth].one_fraction = one_fraction;
  path[depth].pweight = depth == 0 ? 1.0 : 0.0;
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) /
                           static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) /
                      static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, unsigned depth, unsigned path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[depth].pweight;

  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) /
                        static_cast<double>((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) /
                               static_cast<double>(depth + 1);
    } else {
      path[i].pweight = (path[i].pweight * (depth + 1)) /
                        static_cast<double>(zero_fraction * (depth - i));
    }
  }
  for (unsigned i = path_index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight if the element at path_index were unwound.
double unwound_path_sum(const PathElement* path, unsigned depth,
                        unsigned path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;

  if (one_fraction != 0) {
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
      const double tmp =
          next_one_portion / static_cast<double>((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i);
    }
  } else {
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
      total += path[i].pweight / (zero_fraction * (depth - i));
    }
  }
  return total * (depth + 1);
}

void shap_recursive(const std::vector<ensemble::TreeNode>& nodes,
                    const Eigen::VectorXd& x, Eigen::VectorXd& phi,
                    int node_index, unsigned depth, PathElement* parent_path,
                    double parent_zero, double parent_one, int parent_feature) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, parent_zero, parent_one, parent_feature);

  const ensemble::TreeNode& node = nodes[static_cast<std::size_t>(node_index)];
  if (node.is_leaf()) {
    for (unsigned i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const PathElement& el = path[i];
      phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const int hot = x[node.feature] <= node.threshold ? node.left : node.right;
  const int cold = hot == node.left ? node.right : node.left;
  const double hot_zero =
      nodes[static_cast<std::size_t>(hot)].cover / node.cover;
  const double cold_zero =
      nodes[static_cast<std::size_t>(cold)].cover / node.cover;
  double incoming_zero = 1.0;
  double incoming_one = 1.0;

  // A feature already on the path gets its earlier split undone and folded
  // into the incoming fractions, then redone at this node.
  unsigned path_index = 0;
  for (; path_index <= depth; ++path_index)
    if (path[path_index].feature == node.feature) break;
  if (path_index != depth + 1) {
    incoming_zero = path[path_index].zero_fraction;
    incoming_one = path[path_index].one_fraction;
    unwind_path(path, depth, path_index);
    depth -= 1;
  }

  shap_recursive(nodes, x, phi, hot, depth + 1, path, hot_zero * incoming_zero,
                 incoming_one, node.feature);
  shap_recursive(nodes, x, phi, cold, depth + 1, path,
                 cold_zero * incoming_zero, 0.0, node.feature);
}

struct TreeInfo {
  double expectation = 0.0;  // cover-weighted mean of the leaves
  int max_depth = 0;
};

TreeInfo tree_info(const std::vector<ensemble::TreeNode>& nodes, int i) {
  const auto& node = nodes[static_cast<std::size_t>(i)];
  if (node.is_leaf()) return {node.value, 0};
  const TreeInfo left = tree_info(nodes, node.left);
  const TreeInfo right = tree_info(nodes, node.right);
  const double wl = nodes[static_cast<std::size_t>(node.left)].cover;
  const double wr = nodes[static_cast<std::size_t>(node.right)].cover;
  return {(wl * left.expectation + wr * right.expectation) / (wl + wr),
          std::max(left.max_depth, right.max_depth) + 1};
}

// Per-model state reused across inputs: tree expectations, the path scratch
// buffer sized for the deepest tree, and the model-space base value.
struct ShapWorkspace {
  double base = 0.0;
  std::vector<PathElement> scratch;
};

ShapWorkspace prepare_shap(const ensemble::TreeEnsemble& model) {
  ShapWorkspace ws;
  int deepest = 0;
  double total = 0.0;
  for (const ensemble::Tree& tree : model.trees) {
    const TreeInfo info = tree_info(tree.nodes, 0);
    total += info.expectation;
    deepest = std::max(deepest, info.max_depth);
  }
  if (model.kind == ensemble::ModelKind::kRandomForest)
    ws.base = total / static_cast<double>(model.trees.size());
  else
    ws.base = model.base_score + total;
  const unsigned maxd = static_cast<unsigned>(deepest) + 2;
  ws.scratch.resize((maxd * (maxd + 1)) / 2);
  return ws;
}

Eigen::VectorXd shap_values(const ensemble::TreeEnsemble& model,
                            ShapWorkspace& ws, const Eigen::VectorXd& x) {
  Eigen::VectorXd phi =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.feature_count()));
  for (const ensemble::Tree& tree : model.trees)
    shap_recursive(tree.nodes, x, phi, 0, 0, ws.scratch.data(), 1.0, 1.0, -1);
  if (model.kind == ensemble::ModelKind::kRandomForest)
    phi /= static_cast<double>(model.trees.size());
  return phi;
}

std::vector<RankedFeature> sort_ranking(const ensemble::TreeEnsemble& model,
                                        const Eigen::VectorXd& scores) {
  std::vector<RankedFeature> ranked(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    auto& r = ranked[static_cast<std::size_t>(i)];
    r.feature = static_cast<int>(i);
    r.name = model.feature_names[static_cast<std::size_t>(i)];
    r.score = scores[i];
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedFeature& a, const RankedFeature& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.feature < b.feature;
            });
  return ranked;
}

}  // namespace

Attribution tree_shap(const ensemble::TreeEnsemble& model,
                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd xv = x;
  Attribution att;
  att.model_output = ensemble::raw_output(model, xv);  // validates the input
  ShapWorkspace ws = prepare_shap(model);
  att.values = shap_values(model, ws, xv);
  att.base_value = ws.base;
  return att;
}

std::vector<RankedFeature> global_importance(
    const ensemble::TreeEnsemble& model,
    const Eigen::Ref<const Eigen::MatrixXd>& background) {
  const auto d = static_cast<Eigen::Index>(model.feature_count());
  if (background.rows() == 0)
    throw Error("global_importance: empty background");
  if (background.cols() != d)
    throw Error("global_importance: background has " +
                std::to_string(background.cols()) +
                " columns but the model expects " + std::to_string(d));
  ShapWorkspace ws = prepare_shap(model);
  Eigen::VectorXd mean_abs = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < background.rows(); ++r)
    mean_abs += shap_values(model, ws, background.row(r).transpose()).cwiseAbs();
  mean_abs /= static_cast<double>(background.rows());
  return sort_ranking(model, mean_abs);
}

std::vector<RankedFeature> permutation_importance(
    const ensemble::TreeEnsemble& model,
    const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& y,
    int n_repeats, std::uint64_t seed) {
  if (n_repeats < 1)
    throw Error("permutation_importance: n_repeats must be positive");
  Eigen::MatrixXd Xp = X;
  const double base = ensemble::evaluate(model, Xp, y).accuracy;
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<Eigen::Index>(model.feature_count());

  Eigen::VectorXd drops = Eigen::VectorXd::Zero(d);
  std::vector<std::size_t> order(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int rep = 0; rep < n_repeats; ++rep) {
      const std::uint64_t stream =
          static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(n_repeats) +
          static_cast<std::uint64_t>(rep);
      rng::Rng rng(rng::derive(seed, stream));
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      for (std::size_t i = 0; i < n; ++i)
        Xp(static_cast<Eigen::Index>(i), j) =
            X(static_cast<Eigen::Index>(order[i]), j);
      drops[j] += base - ensemble::evaluate(model, Xp, y).accuracy;
    }
    Xp.col(j) = X.col(j);
    drops[j] /= static_cast<double>(n_repeats);
  }
  return sort_ranking(model, drops);
}

namespace {

corpus::ByteSpan sentence_span(const corpus::TokenizedDoc& doc,
                               const corpus::SentenceRange& s) {
  return {doc.tokens[s.begin].span.begin, doc.tokens[s.end - 1].span.end};
}

void check_report_matches(const SalienceReport& report,
                          const corpus::TokenizedDoc& doc) {
  if (report.scores.size() != doc.sentences.size())
    throw Error("salience: report has " + std::to_string(report.scores.size()) +
                " sentences but the document has " +
                std::to_string(doc.sentences.size()));
}

}  // namespace

SalienceReport sentence_salience(const ensemble::TreeEnsemble& model,
                                 const tfidf::TfidfModel& vectorizer,
                                 const corpus::TokenizedDoc& doc,
                                 const vago::Lexicon& lexicon, int top_k) {
  if (top_k < 0) throw Error("salience: top_k must be nonnegative");
  if (model.feature_count() != vectorizer.size())
    throw Error("salience: the model expects " +
                std::to_string(model.feature_count()) +
                " features but the vectorizer has " +
                std::to_string(vectorizer.size()) + " terms");

  const std::size_t n_sent = doc.sentences.size();
  // Occurrence counts per vocabulary column, per sentence and overall.
  // Ordered maps keep the score summation order deterministic.
  std::vector<std::map<std::size_t, int>> by_sentence(n_sent);
  std::map<std::size_t, int> totals;
  for (std::size_t s = 0; s < n_sent; ++s) {
    const auto& range = doc.sentences[s];
    for (std::uint32_t i = range.begin; i < range.end; ++i) {
      const auto kind = doc.tokens[i].kind;
      if (kind == corpus::TokenKind::kPunct) continue;
      const auto it =
          vectorizer.vocabulary.find(utf8::to_lower_copy(doc.surface(i)));
      if (it == vectorizer.vocabulary.end()) continue;
      ++by_sentence[s][it->second];
      ++totals[it->second];
    }
  }

  Eigen::VectorXd x =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vectorizer.size()));
  for (const auto& [col, count] : totals)
    x[static_cast<Eigen::Index>(col)] =
        static_cast<double>(count) * vectorizer.idf[static_cast<Eigen::Index>(col)];

  const Attribution att = tree_shap(model, x);

  SalienceReport report;
  report.base_value = att.base_value;
  report.model_output = att.model_output;
  report.scores.assign(n_sent, 0.0);
  for (std::size_t s = 0; s < n_sent; ++s) {
    for (const auto& [col, count] : by_sentence[s]) {
      const double share =
          static_cast<double>(count) / static_cast<double>(totals[col]);
      report.scores[s] += att.values[static_cast<Eigen::Index>(col)] * share;
    }
  }
  for (Eigen::Index col = 0; col < att.values.size(); ++col)
    if (!totals.count(static_cast<std::size_t>(col)))
      report.residual += att.values[col];

  if (totals.empty())
    report.warnings.push_back(
        "document contains no in-vocabulary terms; salience is all zero");

  std::vector<std::size_t> idx(n_sent);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (report.scores[a] != report.scores[b])
      return report.scores[a] > report.scores[b];
    return a < b;
  });
  idx.resize(std::min(static_cast<std::size_t>(top_k), n_sent));
  report.top = std::move(idx);

  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (doc.tokens[i].kind != corpus::TokenKind::kWord) continue;
    if (vago::classify_token(lexicon, doc.surface(i)))
      report.markers.push_back(doc.tokens[i].span);
  }
  return report;
}

std::string salience_to_json(const SalienceReport& report,
                             const corpus::TokenizedDoc& doc) {
  check_report_matches(report, doc);
  json obj;
  obj["base_value"] = report.base_value;
  obj["model_output"] = report.model_output;
  obj["residual"] = report.residual;
  json sentences = json::array();
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto span = sentence_span(doc, doc.sentences[s]);
    const bool is_top =
        std::find(report.top.begin(), report.top.end(), s) != report.top.end();
    sentences.push_back(
        {{"span", {span.begin, span.end}}, {"score", report.scores[s]},
         {"top", is_top}});
  }
  obj["sentences"] = std::move(sentences);
  json markers = json::array();
  for (const auto& m : report.markers) markers.push_back({m.begin, m.end});
  obj["markers"] = std::move(markers);
  if (!report.warnings.empty()) obj["warnings"] = report.warnings;
  return obj.dump();
}

std::string render_salience(const SalienceReport& report,
                            const corpus::TokenizedDoc& doc) {
  check_report_matches(report, doc);
  std::string out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto span = sentence_span(doc, doc.sentences[s]);
    const bool is_top =
        std::find(report.top.begin(), report.top.end(), s) != report.top.end();
    char head[32];
    std::snprintf(head, sizeof head, "%s [%+.4f] ", is_top ? ">>" : "  ",
                  report.scores[s]);
    out += head;
    std::uint32_t from = span.begin;
    for (const auto& m : report.markers) {
      if (m.begin < from || m.end > span.end) continue;
      out.append(doc.text, from, m.begin - from);
      out += '_';
      out.append(doc.text, m.begin, m.end - m.begin);
      out += '_';
      from = m.end;
    }
    out.append(doc.text, from, span.end - from);
    out += '\n';
  }
  return out;
}

DiscriminativeTerms discriminative_terms(
    const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& y,
    const std::vector<std::string>& terms) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw Error("discriminative_terms: " + std::to_string(X.rows()) +
                " rows but " + std::to_string(y.size()) + " labels");
  if (static_cast<Eigen::Index>(terms.size()) != X.cols())
    throw Error("discriminative_terms: " + std::to_string(X.cols()) +
                " columns but " + std::to_string(terms.size()) + " terms");
  std::vector<Eigen::Index> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1)
      throw Error("discriminative_terms: labels must be 0 or 1");
    (y[i] == 1 ? pos : neg).push_back(static_cast<Eigen::Index>(i));
  }
  if (pos.size() < 2 || neg.size() < 2)
    throw Error("discriminative_terms: both classes need at least two rows");

  Eigen::VectorXd a(static_cast<Eigen::Index>(pos.size()));
  Eigen::VectorXd b(static_cast<Eigen::Index>(neg.size()));
  DiscriminativeTerms res;
  res.all.resize(terms.size());
  std::vector<double> p_values(terms.size());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (std::size_t i = 0; i < pos.size(); ++i)
      a[static_cast<Eigen::Index>(i)] = X(pos[i], j);
    for (std::size_t i = 0; i < neg.size(); ++i)
      b[static_cast<Eigen::Index>(i)] = X(neg[i], j);
    const stats::TestResult test = stats::welch_t(a, b);
    auto& cmp = res.all[static_cast<std::size_t>(j)];
    cmp.term = terms[static_cast<std::size_t>(j)];
    cmp.column = static_cast<int>(j);
    cmp.mean_positive = a.mean();
    cmp.mean_negative = b.mean();
    cmp.t = test.statistic;
    cmp.log10_p = test.log10_p;
    p_values[static_cast<std::size_t>(j)] = test.p_value;
  }
  const std::vector<double> adjusted = stats::bonferroni(p_values);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    res.all[j].p_adjusted = adjusted[j];
    const auto& cmp = res.all[j];
    if (cmp.mean_positive > cmp.mean_negative) res.positive.push_back(cmp);
    if (cmp.mean_positive < cmp.mean_negative) res.negative.push_back(cmp);
  }
  const auto more_significant = [](const TermComparison& a,
                                   const TermComparison& b) {
    if (a.log10_p != b.log10_p) return a.log10_p < b.log10_p;
    if (std::abs(a.t) != std::abs(b.t)) return std::abs(a.t) > std::abs(b.t);
    return a.term < b.term;
  };
  std::sort(res.positive.begin(), res.positive.end(), more_significant);
  std::sort(res.negative.begin(), res.negative.end(), more_significant);
  return res;
}

}  // namespace stylo::explain
