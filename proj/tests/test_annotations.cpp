#include "stylo/annotations.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "stylo/rng.hpp"

using namespace stylo;
using namespace stylo::annotations;
using corpus::ArticleClass;

namespace {

template <typename Fn>
void expect_error(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL("expected stylo::Error containing '" << needle << "'");
  } catch (const Error& e) {
    INFO("message: " << e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

// Six annotators; annotator j votes 1 on label l iff j < counts[l].
ArticleVotes make_votes(std::string article,
                        const std::array<int, kNumLabels>& counts,
                        int annotators = 6) {
  ArticleVotes av;
  av.article = std::move(article);
  for (int j = 0; j < annotators; ++j) {
    AnnotatorVotes row;
    row.annotator = "ann" + std::to_string(j + 1);
    for (std::size_t l = 0; l < kNumLabels; ++l)
      row.votes[l] = j < counts[l] ? 1 : 0;
    av.rows.push_back(std::move(row));
  }
  return av;
}

std::array<int, kNumLabels> counts_with(std::size_t label, int count) {
  std::array<int, kNumLabels> c{};
  c[label] = count;
  return c;
}

}  // namespace

TEST_CASE("agreement_score rescales vote shares with |2x-1|") {
  CHECK(agreement_score({1, 1, 1, 0, 0, 0}) == doctest::Approx(0.0));
  CHECK(agreement_score({1, 1, 1, 1, 1, 1}) == doctest::Approx(1.0));
  CHECK(agreement_score({0, 0, 0, 0, 0, 0}) == doctest::Approx(1.0));
  // 70% of raters in the same direction scores 0.4.
  CHECK(agreement_score({1, 1, 1, 1, 1, 1, 1, 0, 0, 0}) ==
        doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(agreement_score({1}), Error);
  CHECK_THROWS_AS(agreement_score({}), Error);
  CHECK_THROWS_AS(agreement_score({1, 2}), Error);
}

TEST_CASE("agreement over six annotators hits only {0, 1/3, 2/3, 1}") {
  const double expected[] = {1.0, 2.0 / 3, 1.0 / 3, 0.0, 1.0 / 3, 2.0 / 3, 1.0};
  for (int ones = 0; ones <= 6; ++ones) {
    std::vector<int> votes(6, 0);
    for (int i = 0; i < ones; ++i) votes[i] = 1;
    CHECK(agreement_score(votes) == doctest::Approx(expected[ones]).epsilon(1e-12));
  }
}

TEST_CASE("agreement is invariant under flipping every vote") {
  rng::Rng gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + gen.below(12);
    std::vector<int> votes(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      votes[i] = static_cast<int>(gen.below(2));
      flipped[i] = 1 - votes[i];
    }
    CHECK(agreement_score(votes) ==
          doctest::Approx(agreement_score(flipped)).epsilon(1e-12));
  }
}

static const char* kCsvFixture =
    "article_id,annotator_id,Vague,Subjective,Exaggeration,Pejorative,"
    "Descriptive,Propaganda,Satirical,DishonestTitle,AdequateSources,FakeNews,"
    "FalseInformation,commentary\n"
    "a1,ann1,1,0,0,0,1,1,0,0,1,0,0,sounds biased\n"
    "a1,ann2,0,1,0,0,1,1,0,0,1,0,0,\n"
    "a2,ann1,0,0,0,0,0,0,0,0,0,0,0,ok\n";

TEST_CASE("annotation csv loader keeps votes and drops commentary") {
  auto set = parse_annotations(kCsvFixture, "mem");
  CHECK(set.article_count() == 2);
  const ArticleVotes* a1 = set.find("a1");
  REQUIRE(a1 != nullptr);
  REQUIRE(a1->rows.size() == 2);
  CHECK(a1->rows[0].annotator == "ann1");
  CHECK(a1->rows[0].votes[label_index("Vague")] == 1);
  CHECK(a1->rows[0].votes[label_index("Subjective")] == 0);
  CHECK(a1->rows[1].votes[label_index("Subjective")] == 1);
  CHECK(a1->rows[0].votes[label_index("AdequateSources")] == 1);
  CHECK(set.annotators() == std::vector<std::string>{"ann1", "ann2"});

  const ArticleVotes* a2 = set.find("a2");
  REQUIRE(a2 != nullptr);
  CHECK(a2->rows.size() == 1);
}

TEST_CASE("annotation csv loader validates header, values, duplicates") {
  expect_error([] { parse_annotations("article_id,annotator_id,Vague\nx,y,1\n",
                                      "mem"); },
               "label columns");
  std::string swapped =
      "article_id,annotator_id,Subjective,Vague,Exaggeration,Pejorative,"
      "Descriptive,Propaganda,Satirical,DishonestTitle,AdequateSources,"
      "FakeNews,FalseInformation\n";
  expect_error([&] { parse_annotations(swapped, "mem"); }, "Vague");
  std::string bad_value =
      "article_id,annotator_id,Vague,Subjective,Exaggeration,Pejorative,"
      "Descriptive,Propaganda,Satirical,DishonestTitle,AdequateSources,"
      "FakeNews,FalseInformation\n"
      "a1,ann1,2,0,0,0,0,0,0,0,0,0,0\n";
  expect_error([&] { parse_annotations(bad_value, "mem"); }, "line 2");
  std::string dup =
      "article_id,annotator_id,Vague,Subjective,Exaggeration,Pejorative,"
      "Descriptive,Propaganda,Satirical,DishonestTitle,AdequateSources,"
      "FakeNews,FalseInformation\n"
      "a1,ann1,1,0,0,0,0,0,0,0,0,0,0\n"
      "a1,ann1,0,0,0,0,0,0,0,0,0,0,0\n";
  expect_error([&] { parse_annotations(dup, "mem"); }, "duplicate");
}

TEST_CASE("label_means averages votes per article over its own annotators") {
  std::vector<ArticleVotes> data;
  data.push_back(make_votes("a", counts_with(label_index("Propaganda"), 6)));
  data.push_back(make_votes("b", counts_with(label_index("Propaganda"), 1)));
  // Disjoint annotator pool for c, three annotators only.
  auto c = make_votes("c", counts_with(label_index("Vague"), 2), 3);
  for (auto& row : c.rows) row.annotator = "other-" + row.annotator;
  data.push_back(c);

  auto means = label_means(AnnotationSet(std::move(data)));
  REQUIRE(means.articles == std::vector<std::string>{"a", "b", "c"});
  CHECK(means.matrix(0, label_index("Propaganda")) == doctest::Approx(1.0));
  CHECK(means.matrix(1, label_index("Propaganda")) ==
        doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(means.matrix(2, label_index("Vague")) ==
        doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(means.matrix(2, label_index("Propaganda")) == doctest::Approx(0.0));
  CHECK(means.warnings.empty());
  CHECK(means.row_of("b") == 1);
  CHECK(!means.row_of("zz").has_value());
}

TEST_CASE("label_means is invariant under annotator reordering") {
  auto base = make_votes("a", {3, 1, 0, 5, 2, 6, 0, 4, 1, 2, 3});
  auto shuffled = base;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  auto m1 = label_means(AnnotationSet({base}));
  auto m2 = label_means(AnnotationSet({shuffled}));
  CHECK((m1.matrix - m2.matrix).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("label_means excludes roster articles without votes, with warning") {
  std::vector<ArticleVotes> data{make_votes("a", counts_with(0, 3))};
  auto means = label_means(AnnotationSet(std::move(data)),
                           std::vector<std::string>{"ghost", "a"});
  CHECK(means.articles == std::vector<std::string>{"a"});
  REQUIRE(means.warnings.size() == 1);
  CHECK(means.warnings[0].find("ghost") != std::string::npos);
}

TEST_CASE("mean_agreement_by_label groups agreement by label and class") {
  std::vector<ArticleVotes> data;
  data.push_back(make_votes("r1", counts_with(0, 6)));  // agreement 1
  data.push_back(make_votes("r2", counts_with(0, 3)));  // agreement 0
  data.push_back(make_votes("p1", counts_with(0, 4)));  // agreement 1/3
  AnnotationSet set(std::move(data));
  ClassOf classes{{"r1", ArticleClass::kRegular},
                  {"r2", ArticleClass::kRegular},
                  {"p1", ArticleClass::kPropaganda}};
  auto by = mean_agreement_by_label(set, classes);
  CHECK(by.article_counts[0] == 2);
  CHECK(by.article_counts[1] == 1);
  CHECK(by.means(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(by.means(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  // Unmarked labels are unanimous zeros in both groups.
  CHECK(by.means(5, 0) == doctest::Approx(1.0));
  CHECK(by.means(5, 1) == doctest::Approx(1.0));

  ClassOf missing{{"r1", ArticleClass::kRegular},
                  {"r2", ArticleClass::kRegular}};
  expect_error([&] { mean_agreement_by_label(set, missing); }, "p1");
  ClassOf unlabeled = classes;
  unlabeled["p1"] = ArticleClass::kUnlabeled;
  expect_error([&] { mean_agreement_by_label(set, unlabeled); }, "p1");
}

TEST_CASE("agreement direction: unanimous regular beats split propaganda") {
  std::vector<ArticleVotes> data;
  ClassOf classes;
  for (int i = 0; i < 5; ++i) {
    std::array<int, kNumLabels> full{};
    full.fill(i % 2 ? 6 : 0);  // unanimous either way
    data.push_back(make_votes("reg" + std::to_string(i), full));
    classes["reg" + std::to_string(i)] = ArticleClass::kRegular;
    std::array<int, kNumLabels> split{};
    split.fill(i % 2 ? 4 : 2);  // 4:2 either way
    data.push_back(make_votes("pro" + std::to_string(i), split));
    classes["pro" + std::to_string(i)] = ArticleClass::kPropaganda;
  }
  auto by = mean_agreement_by_label(AnnotationSet(std::move(data)), classes);
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    CHECK(by.means(l, 0) == doctest::Approx(1.0));
    CHECK(by.means(l, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(by.means(l, 0) > by.means(l, 1));
  }
}

TEST_CASE("label correlation matches the hand-computed fixture") {
  // Label 0 means over four articles: 0, 1/3, 2/3, 1.
  // Label 1 means:                    0, 1/2, 1/2, 1.
  // cov = 1/2, var0 = 5/9, var1 = 1/2, r = 3*sqrt(10)/10.
  std::vector<ArticleVotes> data;
  const int c0[] = {0, 2, 4, 6};
  const int c1[] = {0, 3, 3, 6};
  for (int i = 0; i < 4; ++i) {
    std::array<int, kNumLabels> counts{};
    counts[0] = c0[i];
    counts[1] = c1[i];
    data.push_back(make_votes("a" + std::to_string(i), counts));
  }
  auto means = label_means(AnnotationSet(std::move(data)));
  auto corr = label_correlation_matrix(means);
  REQUIRE(corr.rows() == 11);
  REQUIRE(corr.cols() == 11);
  CHECK(corr(0, 1) == doctest::Approx(3.0 * std::sqrt(10.0) / 10.0).epsilon(1e-12));
  CHECK(corr(1, 0) == doctest::Approx(corr(0, 1)));
  CHECK(corr(0, 0) == doctest::Approx(1.0));
  CHECK(corr(1, 1) == doctest::Approx(1.0));
  // Constant labels carry the undefined marker everywhere in their row/col.
  for (std::size_t l = 2; l < kNumLabels; ++l) {
    CHECK(std::isnan(corr(l, l)));
    CHECK(std::isnan(corr(0, l)));
    CHECK(std::isnan(corr(l, 0)));
  }
}

TEST_CASE("label correlation: duplicates give 1, complements give -1") {
  std::vector<ArticleVotes> data;
  const int c[] = {0, 2, 5, 6};
  for (int i = 0; i < 4; ++i) {
    std::array<int, kNumLabels> counts{};
    counts[0] = c[i];
    counts[1] = c[i];      // duplicate of label 0
    counts[2] = 6 - c[i];  // complement
    data.push_back(make_votes("a" + std::to_string(i), counts));
  }
  auto corr = label_correlation_matrix(label_means(AnnotationSet(std::move(data))));
  CHECK(corr(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(corr(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));

  // Symmetry wherever defined.
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      if (std::isnan(corr(i, j)))
        CHECK(std::isnan(corr(j, i)));
      else
        CHECK(corr(i, j) == doctest::Approx(corr(j, i)));
    }
}

TEST_CASE("label correlation needs at least three articles") {
  std::vector<ArticleVotes> data{make_votes("a", counts_with(0, 2)),
                                 make_votes("b", counts_with(0, 4))};
  auto means = label_means(AnnotationSet(std::move(data)));
  CHECK_THROWS_AS(label_correlation_matrix(means), Error);
}

TEST_CASE("compare_corpora_by_label runs Welch per label") {
  std::vector<ArticleVotes> data;
  ClassOf classes;
  // Label 0 means: regular 0, 0, 1/2, 1/2; propaganda 1/2, 1/2, 1, 1.
  const int reg[] = {0, 0, 3, 3}, pro[] = {3, 3, 6, 6};
  for (int i = 0; i < 4; ++i) {
    data.push_back(make_votes("r" + std::to_string(i), counts_with(0, reg[i])));
    classes["r" + std::to_string(i)] = ArticleClass::kRegular;
    data.push_back(make_votes("p" + std::to_string(i), counts_with(0, pro[i])));
    classes["p" + std::to_string(i)] = ArticleClass::kPropaganda;
  }
  auto means = label_means(AnnotationSet(std::move(data)));
  auto rows = compare_corpora_by_label(means, classes);
  REQUIRE(rows.size() == kNumLabels);
  CHECK(rows[0].label == "Vague");
  CHECK(rows[0].mean_regular == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rows[0].mean_propaganda == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rows[0].test.statistic ==
        doctest::Approx(-std::sqrt(6.0)).epsilon(1e-9));
  CHECK(rows[0].test.df == doctest::Approx(6.0).epsilon(1e-9));
  double expect_p = 2.0 * oracles::student_t_cdf_quadrature(-std::sqrt(6.0), 6.0);
  CHECK(rows[0].test.p_value == doctest::Approx(expect_p).epsilon(1e-9));
  CHECK(!rows[0].significant);  // p around 0.05, not below 0.01

  // All other labels are constant zero in both groups.
  for (std::size_t l = 1; l < kNumLabels; ++l) {
    CHECK(rows[l].test.statistic == doctest::Approx(0.0));
    CHECK(rows[l].test.p_value == doctest::Approx(1.0));
    CHECK(!rows[l].significant);
  }
}

TEST_CASE("compare_corpora_by_label flags complete separation") {
  std::vector<ArticleVotes> data;
  ClassOf classes;
  for (int i = 0; i < 5; ++i) {
    data.push_back(make_votes("r" + std::to_string(i), counts_with(0, 0)));
    classes["r" + std::to_string(i)] = ArticleClass::kRegular;
    data.push_back(make_votes("p" + std::to_string(i), counts_with(0, 6)));
    classes["p" + std::to_string(i)] = ArticleClass::kPropaganda;
  }
  auto rows = compare_corpora_by_label(label_means(AnnotationSet(std::move(data))),
                                       classes);
  CHECK(rows[0].test.complete_separation);
  CHECK(rows[0].test.p_value < 0.01);
  CHECK(rows[0].significant);

  // Fewer than two articles in a class is an error.
  std::vector<ArticleVotes> tiny{make_votes("r", counts_with(0, 1)),
                                 make_votes("p", counts_with(0, 5)),
                                 make_votes("p2", counts_with(0, 2))};
  ClassOf tiny_classes{{"r", ArticleClass::kRegular},
                       {"p", ArticleClass::kPropaganda},
                       {"p2", ArticleClass::kPropaganda}};
  auto tiny_means = label_means(AnnotationSet(std::move(tiny)));
  CHECK_THROWS_AS(compare_corpora_by_label(tiny_means, tiny_classes), Error);
}
