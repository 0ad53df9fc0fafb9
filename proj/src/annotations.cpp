#include "stylo/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stylo::annotations {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& msg) {
  throw Error(origin + " line " + std::to_string(line) + ": " + msg);
}

}  // namespace

std::size_t label_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i)
    if (name == kLabels[i]) return i;
  throw Error("unknown label '" + std::string(name) + "'");
}

AnnotationSet::AnnotationSet(std::vector<ArticleVotes> data)
    : data_(std::move(data)) {
  std::unordered_map<std::string, bool> seen_annotator;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const ArticleVotes& av = data_[i];
    if (av.article.empty()) throw Error("annotation with empty article id");
    if (av.rows.empty())
      throw Error("article '" + av.article + "' has no annotator rows");
    if (!index_.emplace(av.article, i).second)
      throw Error("duplicate article block '" + av.article + "'");
    std::unordered_map<std::string, bool> local;
    for (const AnnotatorVotes& row : av.rows) {
      if (row.annotator.empty())
        throw Error("empty annotator id on article '" + av.article + "'");
      if (!local.emplace(row.annotator, true).second)
        throw Error("duplicate annotator '" + row.annotator +
                    "' on article '" + av.article + "'");
      for (auto v : row.votes)
        if (v != 0 && v != 1)
          throw Error("non-binary vote on article '" + av.article + "'");
      if (seen_annotator.emplace(row.annotator, true).second)
        annotators_.push_back(row.annotator);
    }
  }
}

const ArticleVotes* AnnotationSet::find(std::string_view article_id) const {
  auto it = index_.find(std::string(article_id));
  return it == index_.end() ? nullptr : &data_[it->second];
}

AnnotationSet load_annotations(const std::string& path) {
  return parse_annotations(io::read_file(path), path);
}

AnnotationSet parse_annotations(std::string_view content,
                                const std::string& origin) {
  io::CsvReader reader{std::string(content)};
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error(origin + ": empty annotation file");
  if (row.size() < 2 + kNumLabels || row[0] != "article_id" ||
      row[1] != "annotator_id")
    throw Error(origin + ": header must start with article_id, annotator_id "
                         "and the 11 label columns");
  for (std::size_t l = 0; l < kNumLabels; ++l)
    if (row[2 + l] != kLabels[l])
      throw Error(origin + ": header column " + std::to_string(l + 3) +
                  " must be '" + kLabels[l] + "', got '" + row[2 + l] + "'");

  std::vector<ArticleVotes> data;
  std::unordered_map<std::string, std::size_t> article_row;
  while (reader.next(row)) {
    std::size_t line = reader.record_line();
    // Columns past the labels hold free-text commentary; they are dropped
    // here to keep annotators anonymous downstream.
    if (row.size() < 2 + kNumLabels)
      fail(origin, line, "expected at least " +
                             std::to_string(2 + kNumLabels) + " fields, got " +
                             std::to_string(row.size()));
    if (row[0].empty()) fail(origin, line, "empty article_id");
    if (row[1].empty()) fail(origin, line, "empty annotator_id");
    AnnotatorVotes votes;
    votes.annotator = row[1];
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      const std::string& v = row[2 + l];
      if (v == "0")
        votes.votes[l] = 0;
      else if (v == "1")
        votes.votes[l] = 1;
      else
        fail(origin, line,
             std::string(kLabels[l]) + " must be 0 or 1, got '" + v + "'");
    }
    auto [it, inserted] = article_row.emplace(row[0], data.size());
    if (inserted) {
      ArticleVotes av;
      av.article = row[0];
      data.push_back(std::move(av));
    }
    ArticleVotes& av = data[it->second];
    for (const AnnotatorVotes& existing : av.rows)
      if (existing.annotator == votes.annotator)
        fail(origin, line, "duplicate (article, annotator) pair (" + row[0] +
                               ", " + row[1] + ")");
    av.rows.push_back(std::move(votes));
  }
  return AnnotationSet(std::move(data));
}

double agreement_score(const std::vector<int>& votes) {
  if (votes.size() < 2)
    throw Error("agreement needs at least 2 votes, got " +
                std::to_string(votes.size()));
  double ones = 0;
  for (int v : votes) {
    if (v != 0 && v != 1) throw Error("votes must be 0 or 1");
    ones += v;
  }
  double x = ones / static_cast<double>(votes.size());
  return std::abs(2.0 * x - 1.0);
}

std::optional<std::size_t> LabelMeans::row_of(std::string_view article_id) const {
  for (std::size_t i = 0; i < articles.size(); ++i)
    if (articles[i] == article_id) return i;
  return std::nullopt;
}

LabelMeans label_means(const AnnotationSet& set,
                       const std::optional<std::vector<std::string>>& roster) {
  if (set.empty()) throw Error("label_means over an empty annotation set");
  LabelMeans out;
  std::vector<const ArticleVotes*> picked;
  if (roster) {
    for (const std::string& id : *roster) {
      const ArticleVotes* av = set.find(id);
      if (!av) {
        out.warnings.push_back("article '" + id +
                               "' has no annotations; excluded");
        continue;
      }
      picked.push_back(av);
    }
  } else {
    for (const ArticleVotes& av : set.by_article()) picked.push_back(&av);
  }
  out.matrix.resize(static_cast<Eigen::Index>(picked.size()),
                    static_cast<Eigen::Index>(kNumLabels));
  for (std::size_t i = 0; i < picked.size(); ++i) {
    out.articles.push_back(picked[i]->article);
    const auto& rows = picked[i]->rows;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      double sum = 0;
      for (const AnnotatorVotes& row : rows) sum += row.votes[l];
      out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
          sum / static_cast<double>(rows.size());
    }
  }
  return out;
}

AgreementByLabel mean_agreement_by_label(const AnnotationSet& set,
                                         const ClassOf& classes) {
  if (set.empty()) throw Error("agreement over an empty annotation set");
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kNumLabels, 2);
  std::array<int, 2> counts{};
  for (const ArticleVotes& av : set.by_article()) {
    auto it = classes.find(av.article);
    if (it == classes.end() || it->second == corpus::ArticleClass::kUnlabeled)
      throw Error("article '" + av.article + "' has no class");
    int group = it->second == corpus::ArticleClass::kRegular ? 0 : 1;
    ++counts[group];
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      std::vector<int> votes;
      votes.reserve(av.rows.size());
      for (const AnnotatorVotes& row : av.rows) votes.push_back(row.votes[l]);
      sums(static_cast<Eigen::Index>(l), group) += agreement_score(votes);
    }
  }
  AgreementByLabel out;
  out.article_counts = counts;
  out.means.resize(kNumLabels, 2);
  for (int g = 0; g < 2; ++g)
    out.means.col(g) =
        counts[g] ? (sums.col(g) / counts[g]).eval()
                  : Eigen::VectorXd::Constant(kNumLabels, kNaN).eval();
  return out;
}

Eigen::MatrixXd label_correlation_matrix(const LabelMeans& means) {
  const Eigen::Index n = means.matrix.rows();
  if (n < 3) throw Error("correlation needs at least 3 articles");
  const Eigen::Index m = static_cast<Eigen::Index>(kNumLabels);
  std::vector<bool> constant(kNumLabels);
  for (Eigen::Index l = 0; l < m; ++l) {
    const auto col = means.matrix.col(l);
    constant[static_cast<std::size_t>(l)] =
        (col.array() == col(0)).all();
  }
  Eigen::MatrixXd corr(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double r;
      if (constant[static_cast<std::size_t>(i)] ||
          constant[static_cast<std::size_t>(j)])
        r = kNaN;
      else if (i == j)
        r = 1.0;
      else
        r = stats::pearson(means.matrix.col(i), means.matrix.col(j)).r;
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

std::vector<LabelComparison> compare_corpora_by_label(const LabelMeans& means,
                                                      const ClassOf& classes) {
  std::vector<Eigen::Index> reg, pro;
  for (std::size_t i = 0; i < means.articles.size(); ++i) {
    auto it = classes.find(means.articles[i]);
    if (it == classes.end() || it->second == corpus::ArticleClass::kUnlabeled)
      throw Error("article '" + means.articles[i] + "' has no class");
    (it->second == corpus::ArticleClass::kRegular ? reg : pro)
        .push_back(static_cast<Eigen::Index>(i));
  }
  if (reg.size() < 2 || pro.size() < 2)
    throw Error("both classes need at least 2 articles (regular " +
                std::to_string(reg.size()) + ", propaganda " +
                std::to_string(pro.size()) + ")");

  std::vector<LabelComparison> out;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    Eigen::VectorXd a(static_cast<Eigen::Index>(reg.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(pro.size()));
    for (std::size_t i = 0; i < reg.size(); ++i)
      a(static_cast<Eigen::Index>(i)) =
          means.matrix(reg[i], static_cast<Eigen::Index>(l));
    for (std::size_t i = 0; i < pro.size(); ++i)
      b(static_cast<Eigen::Index>(i)) =
          means.matrix(pro[i], static_cast<Eigen::Index>(l));
    LabelComparison cmp;
    cmp.label = kLabels[l];
    cmp.mean_regular = a.mean();
    cmp.mean_propaganda = b.mean();
    cmp.test = stats::welch_t(a, b);
    cmp.significant = cmp.test.p_value < 0.01;
    out.push_back(std::move(cmp));
  }
  return out;
}

}  // namespace stylo::annotations
