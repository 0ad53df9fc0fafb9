#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/ensemble.hpp"
#include "stylo/tfidf.hpp"
#include "stylo/vago.hpp"

// Model explanations: exact TreeSHAP attributions, global and permutation
// feature rankings, per-sentence salience for TF-IDF models, and terms whose
// weights separate the two classes.

namespace stylo::explain {

// Shapley values in the model's raw output space: the margin for boosted
// trees, the mean vote for forests. base_value + values.sum() equals
// model_output (local accuracy).
struct Attribution {
  Eigen::VectorXd values;
  double base_value = 0.0;
  double model_output = 0.0;
};

// Exact path-dependent TreeSHAP. Expectations use the cover weights stored
// at training time, so no background data is passed here.
Attribution tree_shap(const ensemble::TreeEnsemble& model,
                      const Eigen::Ref<const Eigen::VectorXd>& x);

struct RankedFeature {
  int feature = -1;
  std::string name;
  double score = 0.0;
};

// Mean |SHAP| per feature over the background rows, sorted descending
// (ties by feature index).
std::vector<RankedFeature> global_importance(
    const ensemble::TreeEnsemble& model,
    const Eigen::Ref<const Eigen::MatrixXd>& background);

// Mean accuracy drop over n_repeats shuffles of each feature column,
// sorted descending. Each (feature, repeat) pair draws its permutation from
// its own derived stream, so results are seed-stable and parallelizable.
std::vector<RankedFeature> permutation_importance(
    const ensemble::TreeEnsemble& model,
    const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& y,
    int n_repeats, std::uint64_t seed);

struct SalienceReport {
  std::vector<double> scores;  // one per sentence, attribution mass
  std::vector<std::size_t> top;  // highest-scoring sentence indices, best first
  std::vector<corpus::ByteSpan> markers;  // vague-marker tokens, for underlining
  double base_value = 0.0;
  double model_output = 0.0;
  // Attribution mass on vocabulary terms absent from the document; together
  // with the sentence scores it accounts for model_output - base_value.
  double residual = 0.0;
  std::vector<std::string> warnings;
};

// SHAP over the document's TF-IDF vector, with each term's attribution split
// across sentences in proportion to where its occurrences fall. Word and
// number tokens are matched lowercased; terms outside the vocabulary carry
// no weight. A document with no in-vocabulary term reports all-zero scores
// and a warning.
SalienceReport sentence_salience(const ensemble::TreeEnsemble& model,
                                 const tfidf::TfidfModel& vectorizer,
                                 const corpus::TokenizedDoc& doc,
                                 const vago::Lexicon& lexicon, int top_k = 3);

// JSON object with sentence byte spans, scores, top-k flags and marker
// offsets ([begin, end] pairs, as in article files).
std::string salience_to_json(const SalienceReport& report,
                             const corpus::TokenizedDoc& doc);

// Plain-text view: one line per sentence, '>>' on the top-k ones, markers
// wrapped in underscores.
std::string render_salience(const SalienceReport& report,
                            const corpus::TokenizedDoc& doc);

struct TermComparison {
  std::string term;
  int column = -1;
  double mean_positive = 0.0;  // class-1 mean weight
  double mean_negative = 0.0;
  double t = 0.0;      // Welch statistic, positive when class 1 leans higher
  double p_adjusted = 1.0;  // Bonferroni over all columns
  double log10_p = 0.0;     // unadjusted, for ranking below underflow
};

struct DiscriminativeTerms {
  std::vector<TermComparison> all;  // one per column, column order
  // Most significant first; a term joins the side with the higher mean.
  std::vector<TermComparison> positive;
  std::vector<TermComparison> negative;
};

// Welch's t per term between class-1 and class-0 rows of a TF-IDF matrix.
// Both classes need at least two rows.
DiscriminativeTerms discriminative_terms(
    const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& y,
    const std::vector<std::string>& terms);

}  // namespace stylo::explain
