#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stylo/io.hpp"
#include "stylo/rng.hpp"
#include "stylo/tfidf.hpp"

using namespace stylo::tfidf;
using stylo::corpus::Article;
using stylo::corpus::ArticleSet;

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

Article make_article(const std::string& id, const std::string& title,
                     const std::string& text) {
  Article a;
  a.id = id;
  a.source = "test";
  a.language = "en";
  a.title = title;
  a.text = text;
  return a;
}

// The toy corpus used throughout: after removing {the, on}, the bags are
//   d0: cat sat mat      d1: cat ran
//   d2: dog sat mat      d3: dog ran fast
// df: cat 2, dog 2, fast 1, mat 2, ran 2, sat 2; N = 4.
std::vector<TermBag> toy_bags() {
  return {{"cat", "sat", "mat"},
          {"cat", "ran"},
          {"dog", "sat", "mat"},
          {"dog", "ran", "fast"}};
}

constexpr double kLn2 = 0.6931471805599453;  // idf of a df-2 term
constexpr double kLn4 = 1.3862943611198906;  // idf of a df-1 term

}  // namespace

TEST_CASE("tfidf: toy corpus matches the hand-computed matrix") {
  TfidfConfig config;
  config.min_df = 1;
  const TfidfModel model = fit_tfidf(toy_bags(), config);

  const std::vector<std::string> want_terms = {"cat", "dog", "fast",
                                               "mat", "ran", "sat"};
  CHECK(model.terms == want_terms);
  REQUIRE(model.idf.size() == 6);
  const double want_idf[6] = {kLn2, kLn2, kLn4, kLn2, kLn2, kLn2};
  for (int j = 0; j < 6; ++j) CHECK(model.idf[j] == doctest::Approx(want_idf[j]).epsilon(1e-12));

  const Eigen::MatrixXd got = transform_matrix(model, toy_bags());
  const double want[4][6] = {
      {kLn2, 0, 0, kLn2, 0, kLn2},
      {kLn2, 0, 0, 0, kLn2, 0},
      {0, kLn2, 0, kLn2, 0, kLn2},
      {0, kLn2, kLn4, 0, kLn2, 0},
  };
  REQUIRE(got.rows() == 4);
  REQUIRE(got.cols() == 6);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(got(i, j) == doctest::Approx(want[i][j]).epsilon(1e-12));
}

TEST_CASE("tfidf: fitting from articles matches fitting from bags") {
  std::vector<Article> articles;
  articles.push_back(make_article("a0", "", "The cat sat on the mat ."));
  articles.push_back(make_article("a1", "", "The cat ran ."));
  articles.push_back(make_article("a2", "", "The dog sat on the mat ."));
  articles.push_back(make_article("a3", "", "The dog ran fast ."));
  const ArticleSet set{std::move(articles)};
  const StopwordSet stop = parse_stopwords("the\non\n");

  TfidfConfig config;
  config.min_df = 1;
  config.stopword_list = "toy";
  const TfidfModel model = fit_tfidf(set, stop, config);
  const TfidfModel from_bags = fit_tfidf(toy_bags(), config);
  CHECK(model.terms == from_bags.terms);
  CHECK((model.idf.array() == from_bags.idf.array()).all());
  CHECK(model.config.stopword_list == "toy");
}

TEST_CASE("tfidf: a term in every document has idf zero") {
  auto bags = toy_bags();
  for (auto& bag : bags) bag.push_back("the");
  TfidfConfig config;
  config.min_df = 1;
  const TfidfModel model = fit_tfidf(bags, config);
  const auto it = model.vocabulary.find("the");
  REQUIRE(it != model.vocabulary.end());
  CHECK(model.idf[static_cast<Eigen::Index>(it->second)] == 0.0);
  const Eigen::MatrixXd m = transform_matrix(model, bags);
  for (int i = 0; i < m.rows(); ++i)
    CHECK(m(i, static_cast<int>(it->second)) == 0.0);
}

TEST_CASE("tfidf: default min_df drops document-frequency-1 terms") {
  const TfidfModel model = fit_tfidf(toy_bags(), TfidfConfig{});
  CHECK(model.size() == 5);
  CHECK(model.vocabulary.count("fast") == 0);
}

TEST_CASE("tfidf: degenerate inputs are errors") {
  expect_error([] { fit_tfidf(std::vector<TermBag>{}, TfidfConfig{}); }, "empty");
  TfidfConfig strict;
  strict.min_df = 99;
  expect_error([&] { fit_tfidf(toy_bags(), strict); }, "vocabulary");
}

TEST_CASE("tfidf: transform is consistent, ignores OOV, and is linear in counts") {
  TfidfConfig config;
  config.min_df = 1;
  const TfidfModel model = fit_tfidf(toy_bags(), config);

  // Training documents reproduce their fitted rows.
  const Eigen::MatrixXd m = transform_matrix(model, toy_bags());
  for (std::size_t i = 0; i < 4; ++i) {
    const Eigen::VectorXd v = Eigen::VectorXd(transform_tfidf(model, toy_bags()[i]));
    CHECK((v - m.row(static_cast<int>(i)).transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  }

  // Fully out-of-vocabulary documents map to the zero vector.
  const Eigen::SparseVector<double> zero =
      transform_tfidf(model, {"sputnik", "zebra"});
  CHECK(zero.nonZeros() == 0);
  CHECK(zero.size() == 6);

  // Raw counts: duplicating the document doubles every weight.
  const TermBag bag0 = toy_bags()[0];
  TermBag doubled = bag0;
  doubled.insert(doubled.end(), bag0.begin(), bag0.end());
  const Eigen::VectorXd once = Eigen::VectorXd(transform_tfidf(model, bag0));
  const Eigen::VectorXd twice = Eigen::VectorXd(transform_tfidf(model, doubled));
  CHECK((twice - 2.0 * once).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("tfidf: extract_terms lowercases, keeps numbers, drops punctuation") {
  const Article a = make_article(
      "a0", "Fast Facts", "The cat's owner paid 3.5 million in 2022 !");
  const StopwordSet stop = parse_stopwords("# function words\nthe\nin\n");
  const TermBag terms = extract_terms(a, stop, TfidfConfig{});
  const TermBag want = {"fast", "facts", "cat's", "owner",
                        "paid", "3.5",   "million", "2022"};
  CHECK(terms == want);
}

TEST_CASE("tfidf: extract_terms uses lemmas when a parse is supplied") {
  const Article a = make_article("a0", "", "The cats ran .");
  stylo::corpus::ParsedDoc parse;
  parse.sentences.push_back({{"The", "the", "DET", "det"},
                             {"cats", "cat", "NOUN", "nsubj"},
                             {"ran", "run", "VERB", "root"},
                             {".", ".", "PUNCT", "punct"}});
  const StopwordSet stop = parse_stopwords("the\n");

  TfidfConfig config;
  const TermBag lemmas = extract_terms(a, stop, config, &parse);
  CHECK(lemmas == TermBag{"cat", "run"});

  config.lemmatize = false;  // falls back to surface tokens of title + text
  const TermBag surfaces = extract_terms(a, stop, config, &parse);
  CHECK(surfaces == TermBag{"cats", "ran"});
}

TEST_CASE("tfidf: idf is nonnegative and columns are dense on random corpora") {
  stylo::rng::Rng rng{20240811};
  for (std::size_t min_df : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
    std::vector<TermBag> bags;
    for (int d = 0; d < 30; ++d) {
      TermBag bag;
      const int len = 5 + static_cast<int>(rng.below(46));
      for (int k = 0; k < len; ++k)
        bag.push_back("t" + std::to_string(rng.below(30)));
      bags.push_back(std::move(bag));
    }
    TfidfConfig config;
    config.min_df = min_df;
    const TfidfModel model = fit_tfidf(bags, config);

    std::vector<bool> seen(model.size(), false);
    for (const auto& [term, col] : model.vocabulary) {
      REQUIRE(col < model.size());
      CHECK(!seen[col]);
      seen[col] = true;
      CHECK(model.terms[col] == term);
    }
    for (Eigen::Index j = 0; j < model.idf.size(); ++j) CHECK(model.idf[j] >= 0.0);
    CHECK(std::is_sorted(model.terms.begin(), model.terms.end()));

    // Independent recomputation of one transformed document.
    std::map<std::string, double> counts;
    for (const auto& t : bags[0]) counts[t] += 1.0;
    const Eigen::VectorXd v = Eigen::VectorXd(transform_tfidf(model, bags[0]));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const auto it = counts.find(model.terms[static_cast<std::size_t>(j)]);
      const double tf = it == counts.end() ? 0.0 : it->second;
      CHECK(v[j] == tf * model.idf[j]);
    }
  }
}

TEST_CASE("tfidf: json round trip is byte-identical") {
  TfidfConfig config;
  config.min_df = 1;
  config.stopword_list = "en";
  const TfidfModel model = fit_tfidf(toy_bags(), config);
  const std::string s1 = to_json(model);
  const TfidfModel back = tfidf_from_json(s1);
  CHECK(back.terms == model.terms);
  CHECK((back.idf.array() == model.idf.array()).all());
  CHECK(back.config.stopword_list == "en");
  CHECK(back.config.lemmatize == model.config.lemmatize);
  CHECK(back.config.min_df == model.config.min_df);
  CHECK(to_json(back) == s1);
}
