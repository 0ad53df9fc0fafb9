#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/stats.hpp"

// Multi-annotator binary labels: ingestion, inter-annotator agreement, and
// per-label summary statistics across the two corpora.

namespace stylo::annotations {

// Annotation label set, fixed order.
inline constexpr std::array<const char*, 11> kLabels = {
    "Vague",          "Subjective",      "Exaggeration",   "Pejorative",
    "Descriptive",    "Propaganda",      "Satirical",      "DishonestTitle",
    "AdequateSources", "FakeNews",       "FalseInformation"};

inline constexpr std::size_t kNumLabels = kLabels.size();

std::size_t label_index(std::string_view name);  // throws on unknown name

struct AnnotatorVotes {
  std::string annotator;
  std::array<std::uint8_t, kNumLabels> votes{};
};

struct ArticleVotes {
  std::string article;
  std::vector<AnnotatorVotes> rows;
};

class AnnotationSet {
 public:
  AnnotationSet() = default;
  explicit AnnotationSet(std::vector<ArticleVotes> data);

  std::size_t article_count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  const std::vector<ArticleVotes>& by_article() const { return data_; }
  const ArticleVotes* find(std::string_view article_id) const;
  const std::vector<std::string>& annotators() const { return annotators_; }

 private:
  std::vector<ArticleVotes> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> annotators_;  // first-seen order
};

// CSV columns: article_id, annotator_id, then the 11 labels in kLabels
// order. Any further columns (annotator commentary) are dropped.
AnnotationSet load_annotations(const std::string& path);
AnnotationSet parse_annotations(std::string_view content,
                                const std::string& origin);

// |2x - 1| over the share x of 1-votes. Needs at least two votes.
double agreement_score(const std::vector<int>& votes);

struct LabelMeans {
  std::vector<std::string> articles;  // row order of matrix
  Eigen::MatrixXd matrix;             // articles x labels, entries in [0,1]
  std::vector<std::string> warnings;
  std::optional<std::size_t> row_of(std::string_view article_id) const;
};

// Mean binary vote per (article, label), averaging over exactly the
// annotators who covered that article. When a roster is given, roster
// articles without any annotation are excluded with a warning.
LabelMeans label_means(
    const AnnotationSet& set,
    const std::optional<std::vector<std::string>>& roster = std::nullopt);

using ClassOf = std::unordered_map<std::string, corpus::ArticleClass>;

struct AgreementByLabel {
  // means(label, 0) = regular group, means(label, 1) = propaganda group.
  Eigen::MatrixXd means;
  std::array<int, 2> article_counts{};
};

// Mean over articles of agreement_score, grouped by label and class. Every
// annotated article must map to regular or propaganda.
AgreementByLabel mean_agreement_by_label(const AnnotationSet& set,
                                         const ClassOf& classes);

// Pearson r between label-mean columns. Labels constant across articles get
// NaN in their whole row and column. Needs at least 3 articles.
Eigen::MatrixXd label_correlation_matrix(const LabelMeans& means);

struct LabelComparison {
  std::string label;
  double mean_regular = 0.0;
  double mean_propaganda = 0.0;
  stats::TestResult test;
  bool significant = false;  // p < 0.01
};

// Welch two-sample t-test per label over article-level means, regular vs
// propaganda. Both classes need at least 2 articles.
std::vector<LabelComparison> compare_corpora_by_label(const LabelMeans& means,
                                                      const ClassOf& classes);

}  // namespace stylo::annotations
