#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "stylo/corpus.hpp"

// Bag-of-words TF-IDF vectorization: tf is the raw in-document count, idf is
// ln(N / df). Terms are lowercased word and number tokens with stopwords
// removed; when a dependency parse is available, lemmas replace surfaces.

namespace stylo::tfidf {

using TermBag = std::vector<std::string>;
using StopwordSet = std::unordered_set<std::string>;

// One term per line, lowercased on load; '#' starts a comment.
StopwordSet parse_stopwords(std::string_view content);
StopwordSet load_stopwords(const std::string& path);

struct TfidfConfig {
  std::string stopword_list = "none";  // list id recorded in model files
  bool lemmatize = true;               // use parse lemmas when present
  std::size_t min_df = 2;              // drop terms in fewer documents
};

struct TfidfModel {
  TfidfConfig config;
  std::vector<std::string> terms;  // column -> term, lexicographic
  std::unordered_map<std::string, std::size_t> vocabulary;  // term -> column
  Eigen::VectorXd idf;

  std::size_t size() const { return terms.size(); }
};

// Terms of one article: word and number tokens of title + text, lowercased,
// stopwords dropped. With a parse and config.lemmatize, the lemmas of
// non-punctuation tokens are used instead.
TermBag extract_terms(const corpus::Article& article, const StopwordSet& stopwords,
                      const TfidfConfig& config,
                      const corpus::ParsedDoc* parse = nullptr);

TfidfModel fit_tfidf(const std::vector<TermBag>& documents, TfidfConfig config);
TfidfModel fit_tfidf(const corpus::ArticleSet& train, const StopwordSet& stopwords,
                     TfidfConfig config);

// Out-of-vocabulary terms are ignored; the result has model.size() entries.
Eigen::SparseVector<double> transform_tfidf(const TfidfModel& model,
                                            const TermBag& terms);

// Dense row-per-document matrix for model training.
Eigen::MatrixXd transform_matrix(const TfidfModel& model,
                                 const std::vector<TermBag>& documents);

// JSON object text; parse -> dump round trips byte-identically.
std::string to_json(const TfidfModel& model);
TfidfModel tfidf_from_json(std::string_view text);

}  // namespace stylo::tfidf
