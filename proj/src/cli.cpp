#include "stylo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stylo/annotations.hpp"
#include "stylo/corpus.hpp"
#include "stylo/ensemble.hpp"
#include "stylo/explain.hpp"
#include "stylo/features.hpp"
#include "stylo/io.hpp"
#include "stylo/rng.hpp"
#include "stylo/stats.hpp"
#include "stylo/tfidf.hpp"
#include "stylo/vago.hpp"
#include "stylo/version.hpp"

namespace stylo::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration stamping. The hashed config holds the subcommand, input
// paths and every analysis parameter; output paths and --jobs stay out so the
// same analysis written elsewhere (or with more threads) yields the same
// bytes.

std::string config_hash(const ordered_json& cfg) {
  return io::hex64(io::fnv1a(cfg.dump()));
}

std::string csv_stamp(const ordered_json& cfg) {
  return "# stylo " + std::string(kVersion) + " config " + config_hash(cfg) +
         "\n";
}

ordered_json stamped_json(const ordered_json& cfg) {
  ordered_json out;
  out["toolkit_version"] = kVersion;
  out["config_hash"] = config_hash(cfg);
  return out;
}

void write_json(const std::string& path, const ordered_json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// ---------------------------------------------------------------------------
// Parallel per-article stages. Work item i writes only slot i, so the result
// does not depend on the thread count; the first exception wins.

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      jobs <= 1 ? 1 : std::min(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Shared data plumbing.

std::string resolve_lexicon_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("STYLO_LEXICON_DIR");
      env != nullptr && *env != '\0')
    return env;
  return "data";
}

std::string lexicon_path(const std::string& dir, const std::string& lang) {
  return dir + "/lexicon_" + lang + ".tsv";
}
std::string polarity_path(const std::string& dir, const std::string& lang) {
  return dir + "/polarity_" + lang + ".tsv";
}
std::string stopword_path(const std::string& dir, const std::string& lang) {
  return dir + "/stopwords_" + lang + ".txt";
}

struct ParseStore {
  std::string dir;
  corpus::ParsedDoc load(const std::string& id) const {
    const std::string path = dir + "/" + id + ".conllu";
    if (!fs::exists(path))
      throw Error("no parse for article '" + id + "' (expected " + path + ")");
    return corpus::read_conllu(path);
  }
};

std::vector<int> class_labels(const corpus::ArticleSet& set) {
  std::vector<int> y;
  y.reserve(set.size());
  for (const auto& a : set) {
    switch (a.cls) {
      case corpus::ArticleClass::kPropaganda: y.push_back(1); break;
      case corpus::ArticleClass::kRegular: y.push_back(0); break;
      default:
        throw Error("article '" + a.id +
                    "' has no class label; expected regular or propaganda");
    }
  }
  return y;
}

annotations::ClassOf class_map(const corpus::ArticleSet& set) {
  annotations::ClassOf classes;
  for (const auto& a : set)
    if (a.cls != corpus::ArticleClass::kUnlabeled) classes.emplace(a.id, a.cls);
  return classes;
}

struct FeatureInputs {
  vago::Lexicon lexicon;
  features::PolarityLexicon polarity;
};

FeatureInputs load_feature_inputs(const std::string& dir,
                                  const std::string& lang) {
  return {vago::load_lexicon(lexicon_path(dir, lang)),
          features::load_polarity(polarity_path(dir, lang))};
}

std::vector<tfidf::TermBag> term_bags(const corpus::ArticleSet& set,
                                      const tfidf::StopwordSet& stopwords,
                                      const tfidf::TfidfConfig& config,
                                      const ParseStore* parses) {
  std::vector<tfidf::TermBag> bags(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (parses != nullptr && config.lemmatize) {
      const corpus::ParsedDoc parsed = parses->load(set[i].id);
      bags[i] = tfidf::extract_terms(set[i], stopwords, config, &parsed);
    } else {
      bags[i] = tfidf::extract_terms(set[i], stopwords, config, nullptr);
    }
  }
  return bags;
}

features::FeatureMap document_features(const corpus::Article& article,
                                       const corpus::ParsedDoc& parsed,
                                       const FeatureInputs& lex,
                                       features::Aggregate aggregate) {
  std::vector<features::FeatureMap> rows;
  rows.reserve(parsed.sentences.size());
  for (std::size_t i = 0; i < parsed.sentences.size(); ++i) {
    std::optional<double> sentiment;
    if (article.sentiment && i < article.sentiment->size())
      sentiment = (*article.sentiment)[i];
    rows.push_back(features::sentence_features(parsed.sentences[i], lex.lexicon,
                                               lex.polarity, sentiment));
  }
  return features::aggregate_document(rows, aggregate);
}

std::vector<features::FeatureMap> all_document_features(
    const corpus::ArticleSet& set, const ParseStore& parses,
    const FeatureInputs& lex, features::Aggregate aggregate, int jobs) {
  std::vector<features::FeatureMap> maps(set.size());
  parallel_for(set.size(), jobs, [&](std::size_t i) {
    maps[i] = document_features(set[i], parses.load(set[i].id), lex, aggregate);
  });
  return maps;
}

Eigen::MatrixXd feature_matrix(const features::FeatureSpace& space,
                               const std::vector<features::FeatureMap>& maps) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(maps.size()),
                    static_cast<Eigen::Index>(space.size()));
  for (std::size_t i = 0; i < maps.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = space.vectorize(maps[i]).transpose();
  return X;
}

// Rebuilds the frozen feature order of a trained style model from its
// feature names.
features::FeatureSpace space_from_names(
    const std::vector<std::string>& names) {
  std::unordered_set<std::string> base(features::kBaseFeatures.begin(),
                                       features::kBaseFeatures.end());
  std::vector<std::string> deprels;
  for (const auto& n : names)
    if (base.count(n) == 0 && n != features::kOtherFeature)
      deprels.push_back(n);
  features::FeatureSpace space = features::FeatureSpace::build(deprels);
  if (space.names() != names)
    throw Error("model feature names do not form a valid feature space");
  return space;
}

// ---------------------------------------------------------------------------
// Pipeline models: a vectorizer/feature definition plus the tree ensemble,
// wrapped in one JSON file together with the training protocol.

constexpr const char* kModelFormat = "stylo-model";
constexpr const char* kTfidfRf = "tfidf-rf";
constexpr const char* kGbtStyle = "gbt-style";

struct PipelineModel {
  std::string pipeline;
  std::string language = "en";
  std::uint64_t seed = 0;
  corpus::SplitRatios ratios;
  std::string aggregate = "sum";                 // gbt-style
  std::optional<tfidf::TfidfModel> vectorizer;   // tfidf-rf
  ensemble::TreeEnsemble model;
};

ordered_json wrapper_json(const PipelineModel& pm, const ordered_json& cfg) {
  ordered_json out;
  out["format"] = kModelFormat;
  out["version"] = 1;
  out["toolkit_version"] = kVersion;
  out["config_hash"] = config_hash(cfg);
  out["pipeline"] = pm.pipeline;
  out["language"] = pm.language;
  out["seed"] = pm.seed;
  out["split"] = ordered_json{{"train", pm.ratios.train},
                              {"val", pm.ratios.val},
                              {"test", pm.ratios.test}};
  if (pm.pipeline == kGbtStyle) out["aggregate"] = pm.aggregate;
  if (pm.vectorizer)
    out["tfidf"] = ordered_json::parse(tfidf::to_json(*pm.vectorizer));
  out["ensemble"] = ordered_json::parse(ensemble::to_json(pm.model));
  return out;
}

PipelineModel load_pipeline_model(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("model file " + path + ": " + one_line(e.what()));
  }
  if (!j.is_object() || j.value("format", std::string()) != kModelFormat)
    throw Error("model file " + path + ": not a stylo model");
  if (j.value("version", 0) != 1)
    throw Error("model file " + path + ": unsupported model version");
  PipelineModel pm;
  pm.pipeline = j.value("pipeline", std::string());
  if (pm.pipeline != kTfidfRf && pm.pipeline != kGbtStyle)
    throw Error("model file " + path + ": unknown pipeline '" + pm.pipeline +
                "'");
  pm.language = j.value("language", std::string("en"));
  pm.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("split") && j["split"].is_object()) {
    pm.ratios.train = j["split"].value("train", 0.8);
    pm.ratios.val = j["split"].value("val", 0.1);
    pm.ratios.test = j["split"].value("test", 0.1);
  }
  pm.aggregate = j.value("aggregate", std::string("sum"));
  if (j.contains("tfidf"))
    pm.vectorizer = tfidf::tfidf_from_json(j["tfidf"].dump());
  if (pm.pipeline == kTfidfRf && !pm.vectorizer)
    throw Error("model file " + path + ": tfidf-rf model lacks a vectorizer");
  if (!j.contains("ensemble"))
    throw Error("model file " + path + ": missing ensemble");
  pm.model = ensemble::ensemble_from_json(j["ensemble"].dump());
  return pm;
}

// Rows of one article subset in the model's input space. Stopwords are not
// needed after fitting: the vocabulary already excludes them.
Eigen::MatrixXd tfidf_matrix(const PipelineModel& pm,
                             const corpus::ArticleSet& subset,
                             const ParseStore* parses) {
  const tfidf::TfidfModel& vec = *pm.vectorizer;
  if (vec.config.lemmatize && parses == nullptr)
    throw Error("model was trained on parse lemmas; pass --parses");
  const tfidf::StopwordSet none;
  return tfidf::transform_matrix(
      vec, term_bags(subset, none, vec.config, parses));
}

Eigen::MatrixXd style_matrix(const PipelineModel& pm,
                             const corpus::ArticleSet& subset,
                             const ParseStore& parses,
                             const FeatureInputs& lex, int jobs) {
  const features::FeatureSpace space =
      space_from_names(pm.model.feature_names);
  const features::Aggregate agg =
      features::aggregate_from_string(pm.aggregate);
  return feature_matrix(space,
                        all_document_features(subset, parses, lex, agg, jobs));
}

Eigen::MatrixXd pipeline_matrix(const PipelineModel& pm,
                                const corpus::ArticleSet& subset,
                                const ParseStore* parses,
                                const std::string& lexicon_dir, int jobs) {
  if (pm.pipeline == kTfidfRf) return tfidf_matrix(pm, subset, parses);
  if (parses == nullptr)
    throw Error("a gbt-style model needs --parses");
  const FeatureInputs lex = load_feature_inputs(lexicon_dir, pm.language);
  return style_matrix(pm, subset, *parses, lex, jobs);
}

// ---------------------------------------------------------------------------
// CSV emitters.

void write_vago_csv(const std::string& path, const ordered_json& cfg,
                    const corpus::ArticleSet& set,
                    const std::vector<vago::VagoScores>& scores) {
  std::string out = csv_stamp(cfg);
  out +=
      "article_id,class,words,vague,v_g,v_a,v_d,v_c,subjective,entities,"
      "vagueness,opinion,detail\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const vago::VagoScores& s = scores[i];
    out += io::csv_escape(set[i].id);
    out += ',' + corpus::to_string(set[i].cls);
    out += ',' + std::to_string(s.counts.words);
    out += ',' + std::to_string(s.counts.vague());
    out += ',' + std::to_string(s.counts.v_g);
    out += ',' + std::to_string(s.counts.v_a);
    out += ',' + std::to_string(s.counts.v_d);
    out += ',' + std::to_string(s.counts.v_c);
    out += ',' + std::to_string(s.counts.subjective());
    out += ',' + std::to_string(s.counts.entities);
    out += ',' + io::format_double(s.vagueness);
    out += ',' + io::format_double(s.opinion);
    out += ',' + io::format_double(s.detail);
    out += '\n';
  }
  io::write_file(path, out);
}

void append_test_columns(std::string& out, const stats::TestResult& t) {
  out += ',' + io::format_double(t.statistic);
  out += ',' + io::format_double(t.df);
  out += ',' + io::format_double(t.p_value);
  out += ',' + io::format_double(t.log10_p);
}

void write_importance_csv(const std::string& path, const ordered_json& cfg,
                          const std::vector<explain::RankedFeature>& ranking) {
  std::string out = csv_stamp(cfg);
  out += "rank,feature,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',' + io::csv_escape(ranking[i].name);
    out += ',' + io::format_double(ranking[i].score);
    out += '\n';
  }
  io::write_file(path, out);
}

void write_terms_csv(const std::string& path, const ordered_json& cfg,
                     const explain::DiscriminativeTerms& terms, int top) {
  std::string out = csv_stamp(cfg);
  out += "side,term,mean_propaganda,mean_regular,t,p_adjusted,log10_p\n";
  auto emit = [&](const std::vector<explain::TermComparison>& list,
                  const char* side) {
    const std::size_t limit =
        top <= 0 ? list.size()
                 : std::min(list.size(), static_cast<std::size_t>(top));
    for (std::size_t i = 0; i < limit; ++i) {
      const explain::TermComparison& c = list[i];
      out += side;
      out += ',' + io::csv_escape(c.term);
      out += ',' + io::format_double(c.mean_positive);
      out += ',' + io::format_double(c.mean_negative);
      out += ',' + io::format_double(c.t);
      out += ',' + io::format_double(c.p_adjusted);
      out += ',' + io::format_double(c.log10_p);
      out += '\n';
    }
  };
  emit(terms.positive, "propaganda");
  emit(terms.negative, "regular");
  io::write_file(path, out);
}

ordered_json metrics_json(const ordered_json& cfg, const PipelineModel& pm,
                          const std::string& split,
                          const ensemble::Metrics& m) {
  ordered_json out = stamped_json(cfg);
  out["pipeline"] = pm.pipeline;
  out["split"] = split;
  out["seed"] = pm.seed;
  out["n"] = m.n_test;
  out["accuracy"] = m.accuracy;
  out["tp"] = m.tp;
  out["fp"] = m.fp;
  out["tn"] = m.tn;
  out["fn"] = m.fn;
  return out;
}

double max_local_accuracy_gap(const ensemble::TreeEnsemble& model,
                              const Eigen::MatrixXd& X) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const explain::Attribution at = explain::tree_shap(model, x);
    worst = std::max(
        worst, std::abs(at.base_value + at.values.sum() - at.model_output));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Annotation statistics shared by annotate-stats and report.

void write_annotation_stats(const std::string& out_dir,
                            const ordered_json& cfg,
                            const annotations::AnnotationSet& ann,
                            const corpus::ArticleSet& articles,
                            std::vector<std::string>* files) {
  const annotations::ClassOf classes = class_map(articles);
  std::vector<std::string> roster;
  roster.reserve(articles.size());
  for (const auto& a : articles) roster.push_back(a.id);

  const annotations::LabelMeans means = annotations::label_means(ann, roster);
  for (const auto& w : means.warnings) std::cerr << "warning: " << w << "\n";

  auto path = [&](const char* name) { return out_dir + "/" + name; };
  auto record = [&](const char* name) {
    if (files != nullptr) files->emplace_back(name);
  };

  {
    const annotations::AgreementByLabel agg =
        annotations::mean_agreement_by_label(ann, classes);
    std::string out = csv_stamp(cfg);
    out += "# articles: regular=" + std::to_string(agg.article_counts[0]) +
           " propaganda=" + std::to_string(agg.article_counts[1]) + "\n";
    out += "label,regular,propaganda\n";
    for (std::size_t l = 0; l < annotations::kNumLabels; ++l) {
      out += annotations::kLabels[l];
      out += ',' + io::format_double(agg.means(static_cast<Eigen::Index>(l), 0));
      out += ',' + io::format_double(agg.means(static_cast<Eigen::Index>(l), 1));
      out += '\n';
    }
    io::write_file(path("agreement_by_label.csv"), out);
    record("agreement_by_label.csv");
  }

  {
    std::string out = csv_stamp(cfg);
    out += "article_id,class";
    for (const char* l : annotations::kLabels) out += std::string(",") + l;
    out += '\n';
    for (std::size_t r = 0; r < means.articles.size(); ++r) {
      const std::string& id = means.articles[r];
      const auto it = classes.find(id);
      out += io::csv_escape(id);
      out += ',' + (it == classes.end() ? std::string("unlabeled")
                                        : corpus::to_string(it->second));
      for (std::size_t l = 0; l < annotations::kNumLabels; ++l)
        out += ',' + io::format_double(means.matrix(
                         static_cast<Eigen::Index>(r),
                         static_cast<Eigen::Index>(l)));
      out += '\n';
    }
    io::write_file(path("label_means.csv"), out);
    record("label_means.csv");
  }

  {
    const Eigen::MatrixXd corr = annotations::label_correlation_matrix(means);
    std::string out = csv_stamp(cfg);
    out += "label";
    for (const char* l : annotations::kLabels) out += std::string(",") + l;
    out += '\n';
    for (std::size_t r = 0; r < annotations::kNumLabels; ++r) {
      out += annotations::kLabels[r];
      for (std::size_t c = 0; c < annotations::kNumLabels; ++c)
        out += ',' + io::format_double(corr(static_cast<Eigen::Index>(r),
                                            static_cast<Eigen::Index>(c)));
      out += '\n';
    }
    io::write_file(path("label_correlation.csv"), out);
    record("label_correlation.csv");
  }

  {
    const std::vector<annotations::LabelComparison> comps =
        annotations::compare_corpora_by_label(means, classes);
    std::string out = csv_stamp(cfg);
    out += "label,mean_regular,mean_propaganda,t,df,p_value,log10_p,significant\n";
    for (const auto& c : comps) {
      out += c.label;
      out += ',' + io::format_double(c.mean_regular);
      out += ',' + io::format_double(c.mean_propaganda);
      append_test_columns(out, c.test);
      out += c.significant ? ",true\n" : ",false\n";
    }
    io::write_file(path("label_comparison.csv"), out);
    record("label_comparison.csv");
  }
}

// ---------------------------------------------------------------------------
// Training shared by train and report.

struct ForestParams {
  int trees = 200;
  int depth = 12;
  int min_leaf = 1;
  int features_per_split = 0;
  std::size_t min_df = 2;
  bool use_stopwords = true;
};

struct GbtParams {
  int rounds = 300;
  double learning_rate = 0.1;
  int depth = 4;
  int min_leaf = 1;
  double l2 = 1.0;
  std::string aggregate = "sum";
};

PipelineModel fit_tfidf_rf(const corpus::ArticleSet& train_set,
                           const ForestParams& p, const std::string& language,
                           const std::string& lexicon_dir,
                           const ParseStore* parses, std::uint64_t seed,
                           std::vector<std::string>* warnings) {
  PipelineModel pm;
  pm.pipeline = kTfidfRf;
  pm.language = language;
  pm.seed = seed;
  tfidf::TfidfConfig tcfg;
  tcfg.min_df = p.min_df;
  tcfg.lemmatize = parses != nullptr;
  tcfg.stopword_list = p.use_stopwords ? language : "none";
  tfidf::StopwordSet stopwords;
  if (p.use_stopwords)
    stopwords = tfidf::load_stopwords(stopword_path(lexicon_dir, language));
  const auto bags = term_bags(train_set, stopwords, tcfg, parses);
  pm.vectorizer = tfidf::fit_tfidf(bags, tcfg);
  const Eigen::MatrixXd X = tfidf::transform_matrix(*pm.vectorizer, bags);
  const std::vector<int> y = class_labels(train_set);
  ensemble::ForestConfig fc;
  fc.n_trees = p.trees;
  fc.max_depth = p.depth;
  fc.min_leaf = p.min_leaf;
  fc.features_per_split = p.features_per_split;
  pm.model = ensemble::train_random_forest(X, y, pm.vectorizer->terms, fc,
                                           seed, warnings);
  return pm;
}

PipelineModel fit_gbt_style(const corpus::ArticleSet& train_set,
                            const GbtParams& p, const std::string& language,
                            const ParseStore& parses, const FeatureInputs& lex,
                            std::uint64_t seed, int jobs,
                            std::vector<std::string>* warnings) {
  PipelineModel pm;
  pm.pipeline = kGbtStyle;
  pm.language = language;
  pm.seed = seed;
  pm.aggregate = p.aggregate;
  const features::Aggregate agg = features::aggregate_from_string(p.aggregate);
  const auto maps = all_document_features(train_set, parses, lex, agg, jobs);
  const features::FeatureSpace space = features::FeatureSpace::from_maps(maps);
  const Eigen::MatrixXd X = feature_matrix(space, maps);
  const std::vector<int> y = class_labels(train_set);
  ensemble::GbtConfig gc;
  gc.n_rounds = p.rounds;
  gc.learning_rate = p.learning_rate;
  gc.max_depth = p.depth;
  gc.min_leaf = p.min_leaf;
  gc.l2_reg = p.l2;
  pm.model =
      ensemble::train_gbt(X, y, space.names(), gc, seed, nullptr, warnings);
  return pm;
}

// ---------------------------------------------------------------------------
// Subcommand flag bundles.

struct IngestFlags {
  std::string input;
  std::string format = "jsonl";
};

struct FilterFlags {
  std::string input, output;
  std::string format = "jsonl";
  int min_chars = 1000;
  int max_chars = 10000;
  std::string after = "2022-02-24";
  std::vector<std::string> require{"Russia", "Ukraine"};
  bool any_date = false;
  bool any_topic = false;
};

struct AnnotFlags {
  std::string annotations, articles, output_dir;
};

struct VagoFlags {
  std::string input, output;
  std::string language = "en";
  std::string lexicon_dir;
  int jobs = 1;
};

struct FeatureFlags {
  std::string input, parses, output;
  std::string language = "en";
  std::string lexicon_dir;
  std::string aggregate = "sum";
  int jobs = 1;
};

struct TrainFlags {
  std::string input, output, model, parses;
  std::string language = "en";
  std::string lexicon_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
  ForestParams forest;
  GbtParams gbt;
  bool no_stopwords = false;
};

struct EvalFlags {
  std::string model, input, parses, output;
  std::string split = "test";
  std::string lexicon_dir;
  int jobs = 1;
};

struct ExplainFlags {
  std::string model, input, parses, output, render;
  std::string lexicon_dir;
  bool shap = false;
  bool terms = false;
  std::string salience_article;
  int top = 25;
  int top_k = 3;
  int jobs = 1;
};

struct ReportFlags {
  std::string input, output_dir, annotations, parses;
  std::string language = "en";
  std::string lexicon_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
  int trees = 200;
  int rounds = 300;
  std::size_t min_df = 2;
  std::string aggregate = "sum";
  int top = 25;
};

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_ingest(const IngestFlags& f) {
  const corpus::Format fmt =
      f.format == "csv" ? corpus::Format::kCsv : corpus::Format::kJsonl;
  const corpus::ArticleSet set = corpus::load_articles(f.input, fmt);
  int counts[3] = {0, 0, 0};
  for (const auto& a : set) {
    if (a.cls == corpus::ArticleClass::kRegular) ++counts[0];
    else if (a.cls == corpus::ArticleClass::kPropaganda) ++counts[1];
    else ++counts[2];
  }
  std::cout << "ok: " << set.size() << " articles (" << counts[0]
            << " regular, " << counts[1] << " propaganda, " << counts[2]
            << " unlabeled)\n";
  return 0;
}

int cmd_filter(const FilterFlags& f) {
  ordered_json cfg;
  cfg["subcommand"] = "filter";
  cfg["input"] = f.input;
  cfg["format"] = f.format;
  cfg["min_chars"] = f.min_chars;
  cfg["max_chars"] = f.max_chars;
  cfg["after"] = f.any_date ? ordered_json() : ordered_json(f.after);
  cfg["require"] =
      f.any_topic ? std::vector<std::string>{} : f.require;

  const corpus::Format fmt =
      f.format == "csv" ? corpus::Format::kCsv : corpus::Format::kJsonl;
  const corpus::ArticleSet set = corpus::load_articles(f.input, fmt);
  corpus::FilterSpec spec;
  spec.min_chars = f.min_chars;
  spec.max_chars = f.max_chars;
  if (!f.any_date) spec.after_date = f.after;
  if (!f.any_topic) spec.required_terms = f.require;
  const corpus::ArticleSet kept = corpus::filter_articles(set, spec);
  corpus::write_articles_jsonl(kept, f.output);

  // JSONL cannot carry a comment stamp, so the run record sits beside it.
  ordered_json meta = stamped_json(cfg);
  meta["config"] = cfg;
  meta["input_articles"] = set.size();
  meta["kept"] = kept.size();
  meta["excluded"] = set.size() - kept.size();
  write_json(f.output + ".meta.json", meta);

  std::cout << "kept " << kept.size() << " of " << set.size() << " articles ("
            << set.size() - kept.size() << " excluded)\n";
  return 0;
}

int cmd_annotate_stats(const AnnotFlags& f) {
  ordered_json cfg;
  cfg["subcommand"] = "annotate-stats";
  cfg["annotations"] = f.annotations;
  cfg["articles"] = f.articles;

  const annotations::AnnotationSet ann =
      annotations::load_annotations(f.annotations);
  const corpus::ArticleSet articles =
      corpus::load_articles(f.articles, corpus::Format::kJsonl);
  fs::create_directories(f.output_dir);
  std::vector<std::string> files;
  write_annotation_stats(f.output_dir, cfg, ann, articles, &files);
  std::cout << "annotation stats: " << files.size() << " files in "
            << f.output_dir << "\n";
  return 0;
}

int cmd_vago(const VagoFlags& f) {
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  ordered_json cfg;
  cfg["subcommand"] = "vago";
  cfg["input"] = f.input;
  cfg["language"] = f.language;
  cfg["lexicon_dir"] = dir;

  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  const vago::Lexicon lexicon =
      vago::load_lexicon(lexicon_path(dir, f.language));
  std::vector<vago::VagoScores> scores(set.size());
  parallel_for(set.size(), f.jobs, [&](std::size_t i) {
    const corpus::TokenizedDoc doc = corpus::tokenize(set[i].text);
    const auto entities = vago::detect_named_entities(doc, set[i].ne_spans);
    scores[i] = vago::vago_scores(doc, lexicon, entities);
  });
  write_vago_csv(f.output, cfg, set, scores);
  std::cout << "vago: " << set.size() << " articles -> " << f.output << "\n";
  return 0;
}

int cmd_features(const FeatureFlags& f) {
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  ordered_json cfg;
  cfg["subcommand"] = "features";
  cfg["input"] = f.input;
  cfg["parses"] = f.parses;
  cfg["language"] = f.language;
  cfg["lexicon_dir"] = dir;
  cfg["aggregate"] = f.aggregate;

  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  const ParseStore parses{f.parses};
  const FeatureInputs lex = load_feature_inputs(dir, f.language);
  const features::Aggregate agg = features::aggregate_from_string(f.aggregate);
  const auto maps = all_document_features(set, parses, lex, agg, f.jobs);
  const features::FeatureSpace space = features::FeatureSpace::from_maps(maps);
  const Eigen::MatrixXd X = feature_matrix(space, maps);

  std::vector<std::string> ids, classes;
  for (const auto& a : set) {
    ids.push_back(a.id);
    classes.push_back(corpus::to_string(a.cls));
  }
  features::write_feature_matrix(f.output, space, ids, X, &classes);
  io::write_file(f.output, csv_stamp(cfg) + io::read_file(f.output));
  std::cout << "features: " << set.size() << " articles, " << space.size()
            << " columns -> " << f.output << "\n";
  return 0;
}

ordered_json train_config(const TrainFlags& f, const std::string& dir) {
  ordered_json cfg;
  cfg["subcommand"] = "train";
  cfg["input"] = f.input;
  cfg["model"] = f.model;
  cfg["seed"] = f.seed;
  cfg["language"] = f.language;
  cfg["lexicon_dir"] = dir;
  cfg["parses"] = f.parses;
  if (f.model == kTfidfRf) {
    cfg["trees"] = f.forest.trees;
    cfg["depth"] = f.forest.depth;
    cfg["min_leaf"] = f.forest.min_leaf;
    cfg["features_per_split"] = f.forest.features_per_split;
    cfg["min_df"] = f.forest.min_df;
    cfg["stopwords"] = !f.no_stopwords;
  } else {
    cfg["rounds"] = f.gbt.rounds;
    cfg["learning_rate"] = f.gbt.learning_rate;
    cfg["depth"] = f.gbt.depth;
    cfg["min_leaf"] = f.gbt.min_leaf;
    cfg["l2"] = f.gbt.l2;
    cfg["aggregate"] = f.gbt.aggregate;
  }
  return cfg;
}

int cmd_train(const TrainFlags& f) {
  if (f.model != kTfidfRf && f.model != kGbtStyle)
    throw Error("train: unknown model '" + f.model +
                "' (expected tfidf-rf or gbt-style)");
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  const ordered_json cfg = train_config(f, dir);

  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  const corpus::DatasetSplit split =
      corpus::split_dataset(set, corpus::SplitRatios{}, f.seed);
  if (split.train.empty()) throw Error("train: empty training split");

  std::optional<ParseStore> parses;
  if (!f.parses.empty()) parses = ParseStore{f.parses};
  std::vector<std::string> warnings;
  PipelineModel pm;
  if (f.model == kTfidfRf) {
    ForestParams p = f.forest;
    p.use_stopwords = !f.no_stopwords;
    pm = fit_tfidf_rf(split.train, p, f.language, dir,
                      parses ? &*parses : nullptr, f.seed, &warnings);
    std::cout << "trained tfidf-rf: " << pm.vectorizer->size()
              << " terms, " << pm.model.trees.size() << " trees on "
              << split.train.size() << " articles\n";
  } else {
    if (!parses) throw Error("train: --model gbt-style needs --parses");
    const FeatureInputs lex = load_feature_inputs(dir, f.language);
    pm = fit_gbt_style(split.train, f.gbt, f.language, *parses, lex, f.seed,
                       f.jobs, &warnings);
    std::cout << "trained gbt-style: " << pm.model.feature_count()
              << " features, " << pm.model.trees.size() << " rounds on "
              << split.train.size() << " articles\n";
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  write_json(f.output, wrapper_json(pm, cfg));

  if (!split.val.empty()) {
    const Eigen::MatrixXd Xv = pipeline_matrix(
        pm, split.val, parses ? &*parses : nullptr, dir, f.jobs);
    const ensemble::Metrics m =
        ensemble::evaluate(pm.model, Xv, class_labels(split.val));
    std::cout << "val accuracy " << io::format_double(m.accuracy) << " (n="
              << m.n_test << ")\n";
  }
  return 0;
}

int cmd_evaluate(const EvalFlags& f) {
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  ordered_json cfg;
  cfg["subcommand"] = "evaluate";
  cfg["model"] = f.model;
  cfg["input"] = f.input;
  cfg["split"] = f.split;
  cfg["parses"] = f.parses;

  const PipelineModel pm = load_pipeline_model(f.model);
  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  const corpus::DatasetSplit split =
      corpus::split_dataset(set, pm.ratios, pm.seed);
  const corpus::ArticleSet* subset = &set;
  if (f.split == "train") subset = &split.train;
  else if (f.split == "val") subset = &split.val;
  else if (f.split == "test") subset = &split.test;
  if (subset->empty())
    throw Error("evaluate: split '" + f.split + "' is empty");

  std::optional<ParseStore> parses;
  if (!f.parses.empty()) parses = ParseStore{f.parses};
  const Eigen::MatrixXd X =
      pipeline_matrix(pm, *subset, parses ? &*parses : nullptr, dir, f.jobs);
  const ensemble::Metrics m =
      ensemble::evaluate(pm.model, X, class_labels(*subset));
  const ordered_json out = metrics_json(cfg, pm, f.split, m);
  if (f.output.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_json(f.output, out);
    std::cout << "accuracy " << io::format_double(m.accuracy) << " (n="
              << m.n_test << ") -> " << f.output << "\n";
  }
  return 0;
}

int cmd_explain(const ExplainFlags& f) {
  const int modes = (f.shap ? 1 : 0) + (f.terms ? 1 : 0) +
                    (f.salience_article.empty() ? 0 : 1);
  if (modes != 1) {
    std::cerr
        << "usage error: pass exactly one of --shap, --salience, --terms\n";
    return 1;
  }
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  ordered_json cfg;
  cfg["subcommand"] = "explain";
  cfg["model"] = f.model;
  cfg["input"] = f.input;
  cfg["parses"] = f.parses;
  cfg["mode"] = f.shap ? "shap" : (f.terms ? "terms" : "salience");
  if (!f.salience_article.empty()) {
    cfg["article"] = f.salience_article;
    cfg["top_k"] = f.top_k;
  }
  if (f.terms) cfg["top"] = f.top;

  const PipelineModel pm = load_pipeline_model(f.model);
  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  std::optional<ParseStore> parses;
  if (!f.parses.empty()) parses = ParseStore{f.parses};

  if (f.shap) {
    const Eigen::MatrixXd X =
        pipeline_matrix(pm, set, parses ? &*parses : nullptr, dir, f.jobs);
    const auto ranking = explain::global_importance(pm.model, X);
    const double gap = max_local_accuracy_gap(pm.model, X);
    if (f.output.empty()) {
      for (std::size_t i = 0; i < std::min<std::size_t>(ranking.size(), 20);
           ++i)
        std::cout << ranking[i].name << " "
                  << io::format_double(ranking[i].score) << "\n";
    } else {
      write_importance_csv(f.output, cfg, ranking);
      std::cout << "importance: " << ranking.size() << " features -> "
                << f.output << "\n";
    }
    std::cout << "local accuracy: max |base + sum(phi) - output| = "
              << io::format_double(gap) << " over " << X.rows() << " rows\n";
    return 0;
  }

  if (f.terms) {
    if (!pm.vectorizer)
      throw Error("explain --terms needs a tfidf-rf model");
    const Eigen::MatrixXd X =
        tfidf_matrix(pm, set, parses ? &*parses : nullptr);
    const auto terms = explain::discriminative_terms(X, class_labels(set),
                                                     pm.vectorizer->terms);
    if (f.output.empty()) {
      const std::size_t limit =
          std::min<std::size_t>(terms.positive.size(),
                                static_cast<std::size_t>(f.top));
      for (std::size_t i = 0; i < limit; ++i)
        std::cout << "propaganda " << terms.positive[i].term << " t="
                  << io::format_double(terms.positive[i].t) << "\n";
    } else {
      write_terms_csv(f.output, cfg, terms, f.top);
      std::cout << "terms: " << terms.all.size() << " compared -> "
                << f.output << "\n";
    }
    return 0;
  }

  if (!pm.vectorizer)
    throw Error("explain --salience needs a tfidf-rf model");
  const corpus::Article* article = set.find(f.salience_article);
  if (article == nullptr)
    throw Error("article '" + f.salience_article + "' not found in " +
                f.input);
  const vago::Lexicon lexicon =
      vago::load_lexicon(lexicon_path(dir, pm.language));
  const corpus::TokenizedDoc doc = corpus::tokenize(article->text);
  const explain::SalienceReport report = explain::sentence_salience(
      pm.model, *pm.vectorizer, doc, lexicon, f.top_k);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  ordered_json out = stamped_json(cfg);
  out["article"] = article->id;
  const ordered_json body =
      ordered_json::parse(explain::salience_to_json(report, doc));
  for (const auto& [key, value] : body.items()) out[key] = value;
  if (f.output.empty()) std::cout << out.dump(2) << "\n";
  else {
    write_json(f.output, out);
    std::cout << "salience -> " << f.output << "\n";
  }
  if (!f.render.empty())
    io::write_file(f.render, explain::render_salience(report, doc));
  return 0;
}

int cmd_report(const ReportFlags& f) {
  const std::string dir = resolve_lexicon_dir(f.lexicon_dir);
  ordered_json cfg;
  cfg["subcommand"] = "report";
  cfg["input"] = f.input;
  cfg["annotations"] = f.annotations;
  cfg["parses"] = f.parses;
  cfg["language"] = f.language;
  cfg["lexicon_dir"] = dir;
  cfg["seed"] = f.seed;
  cfg["trees"] = f.trees;
  cfg["rounds"] = f.rounds;
  cfg["min_df"] = f.min_df;
  cfg["aggregate"] = f.aggregate;
  cfg["top"] = f.top;

  const corpus::ArticleSet set =
      corpus::load_articles(f.input, corpus::Format::kJsonl);
  class_labels(set);  // the report needs a fully labeled corpus
  fs::create_directories(f.output_dir);
  const vago::Lexicon lexicon =
      vago::load_lexicon(lexicon_path(dir, f.language));
  std::vector<std::string> files;
  auto path = [&](const std::string& name) { return f.output_dir + "/" + name; };

  {
    std::vector<vago::VagoScores> scores(set.size());
    parallel_for(set.size(), f.jobs, [&](std::size_t i) {
      const corpus::TokenizedDoc doc = corpus::tokenize(set[i].text);
      const auto entities = vago::detect_named_entities(doc, set[i].ne_spans);
      scores[i] = vago::vago_scores(doc, lexicon, entities);
    });
    write_vago_csv(path("vago_scores.csv"), cfg, set, scores);
    files.emplace_back("vago_scores.csv");
  }

  {
    std::vector<features::PunctProfile> profiles(set.size());
    parallel_for(set.size(), f.jobs, [&](std::size_t i) {
      profiles[i] = features::punctuation_profile(corpus::tokenize(set[i].text));
    });
    const std::array<std::pair<const char*,
                               double features::PunctProfile::*>, 6>
        metrics = {{{"punct_fraction", &features::PunctProfile::punct_fraction},
                    {"period", &features::PunctProfile::period},
                    {"comma", &features::PunctProfile::comma},
                    {"question", &features::PunctProfile::question},
                    {"quote", &features::PunctProfile::quote},
                    {"exclamation", &features::PunctProfile::exclamation}}};
    std::vector<double> reg, prop;
    std::string out = csv_stamp(cfg);
    out +=
        "metric,mean_regular,mean_propaganda,t,df,p_value,log10_p,"
        "p_bonferroni,significant\n";
    std::vector<double> raw_p;
    std::vector<std::string> rows;
    for (const auto& [name, member] : metrics) {
      reg.clear();
      prop.clear();
      for (std::size_t i = 0; i < set.size(); ++i) {
        (set[i].cls == corpus::ArticleClass::kPropaganda ? prop : reg)
            .push_back(profiles[i].*member);
      }
      const Eigen::VectorXd a =
          Eigen::Map<const Eigen::VectorXd>(reg.data(),
                                            static_cast<Eigen::Index>(reg.size()));
      const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(
          prop.data(), static_cast<Eigen::Index>(prop.size()));
      const stats::TestResult t = stats::welch_t(a, b);
      raw_p.push_back(t.p_value);
      std::string row = name;
      row += ',' + io::format_double(a.mean());
      row += ',' + io::format_double(b.mean());
      append_test_columns(row, t);
      rows.push_back(std::move(row));
    }
    const std::vector<double> adjusted = stats::bonferroni(raw_p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out += rows[i];
      out += ',' + io::format_double(adjusted[i]);
      out += adjusted[i] < 0.05 ? ",true\n" : ",false\n";
    }
    io::write_file(path("punctuation_comparison.csv"), out);
    files.emplace_back("punctuation_comparison.csv");
  }

  if (!f.annotations.empty()) {
    const annotations::AnnotationSet ann =
        annotations::load_annotations(f.annotations);
    write_annotation_stats(f.output_dir, cfg, ann, set, &files);
  }

  const corpus::DatasetSplit split =
      corpus::split_dataset(set, corpus::SplitRatios{}, f.seed);
  if (split.train.empty() || split.test.empty())
    throw Error("report: corpus too small for an 80/10/10 split");
  {
    std::string out = csv_stamp(cfg);
    out += "split,article_id\n";
    auto emit = [&](const char* name, const corpus::ArticleSet& s) {
      for (const auto& a : s) out += std::string(name) + ',' + io::csv_escape(a.id) + '\n';
    };
    emit("train", split.train);
    emit("val", split.val);
    emit("test", split.test);
    io::write_file(path("split_manifest.csv"), out);
    files.emplace_back("split_manifest.csv");
  }

  std::optional<ParseStore> parses;
  if (!f.parses.empty()) parses = ParseStore{f.parses};

  {
    ForestParams p;
    p.trees = f.trees;
    p.min_df = f.min_df;
    std::vector<std::string> warnings;
    const PipelineModel pm = fit_tfidf_rf(split.train, p, f.language, dir,
                                          nullptr, f.seed, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    write_json(path("model_tfidf_rf.json"), wrapper_json(pm, cfg));
    files.emplace_back("model_tfidf_rf.json");

    const Eigen::MatrixXd Xtest = tfidf_matrix(pm, split.test, nullptr);
    const ensemble::Metrics m =
        ensemble::evaluate(pm.model, Xtest, class_labels(split.test));
    write_json(path("metrics_tfidf_rf.json"), metrics_json(cfg, pm, "test", m));
    files.emplace_back("metrics_tfidf_rf.json");
    std::cout << "tfidf-rf test accuracy " << io::format_double(m.accuracy)
              << " (n=" << m.n_test << ")\n";

    const Eigen::MatrixXd Xtrain = tfidf_matrix(pm, split.train, nullptr);
    write_importance_csv(path("importance_tfidf_rf.csv"), cfg,
                         explain::global_importance(pm.model, Xtrain));
    files.emplace_back("importance_tfidf_rf.csv");

    const Eigen::MatrixXd Xall = tfidf_matrix(pm, set, nullptr);
    write_terms_csv(path("discriminative_terms.csv"), cfg,
                    explain::discriminative_terms(Xall, class_labels(set),
                                                  pm.vectorizer->terms),
                    f.top);
    files.emplace_back("discriminative_terms.csv");

    const corpus::Article& sample = split.test[0];
    const corpus::TokenizedDoc doc = corpus::tokenize(sample.text);
    const explain::SalienceReport report = explain::sentence_salience(
        pm.model, *pm.vectorizer, doc, lexicon, 3);
    for (const auto& w : report.warnings)
      std::cerr << "warning: " << w << "\n";
    ordered_json sal = stamped_json(cfg);
    sal["article"] = sample.id;
    const ordered_json body =
        ordered_json::parse(explain::salience_to_json(report, doc));
    for (const auto& [key, value] : body.items()) sal[key] = value;
    write_json(path("salience_" + sample.id + ".json"), sal);
    files.emplace_back("salience_" + sample.id + ".json");
    io::write_file(path("salience_" + sample.id + ".txt"),
                   explain::render_salience(report, doc));
    files.emplace_back("salience_" + sample.id + ".txt");
  }

  if (parses) {
    const FeatureInputs lex = load_feature_inputs(dir, f.language);
    const features::Aggregate agg =
        features::aggregate_from_string(f.aggregate);
    {
      const auto maps =
          all_document_features(set, *parses, lex, agg, f.jobs);
      const features::FeatureSpace space =
          features::FeatureSpace::from_maps(maps);
      const Eigen::MatrixXd X = feature_matrix(space, maps);
      std::vector<std::string> ids, classes;
      for (const auto& a : set) {
        ids.push_back(a.id);
        classes.push_back(corpus::to_string(a.cls));
      }
      features::write_feature_matrix(path("features.csv"), space, ids, X,
                                     &classes);
      io::write_file(path("features.csv"),
                     csv_stamp(cfg) + io::read_file(path("features.csv")));
      files.emplace_back("features.csv");
    }

    GbtParams p;
    p.rounds = f.rounds;
    p.aggregate = f.aggregate;
    std::vector<std::string> warnings;
    const PipelineModel pm = fit_gbt_style(split.train, p, f.language,
                                           *parses, lex, f.seed, f.jobs,
                                           &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    write_json(path("model_gbt_style.json"), wrapper_json(pm, cfg));
    files.emplace_back("model_gbt_style.json");

    const Eigen::MatrixXd Xtest =
        style_matrix(pm, split.test, *parses, lex, f.jobs);
    const std::vector<int> ytest = class_labels(split.test);
    const ensemble::Metrics m = ensemble::evaluate(pm.model, Xtest, ytest);
    write_json(path("metrics_gbt_style.json"),
               metrics_json(cfg, pm, "test", m));
    files.emplace_back("metrics_gbt_style.json");
    std::cout << "gbt-style test accuracy " << io::format_double(m.accuracy)
              << " (n=" << m.n_test << ")\n";

    const Eigen::MatrixXd Xtrain =
        style_matrix(pm, split.train, *parses, lex, f.jobs);
    write_importance_csv(path("importance_gbt_style.csv"), cfg,
                         explain::global_importance(pm.model, Xtrain));
    files.emplace_back("importance_gbt_style.csv");

    write_importance_csv(
        path("permutation_importance_gbt_style.csv"), cfg,
        explain::permutation_importance(pm.model, Xtest, ytest, 10,
                                        rng::derive(f.seed, 0x9e37)));
    files.emplace_back("permutation_importance_gbt_style.csv");
  }

  ordered_json summary = stamped_json(cfg);
  summary["config"] = cfg;
  summary["files"] = files;
  write_json(path("config.json"), summary);
  files.emplace_back("config.json");

  std::cout << "report: " << files.size() << " files in " << f.output_dir
            << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Text analysis toolkit for propaganda and regular press corpora"};
  app.name("stylo");
  app.set_version_flag("--version", std::string("stylo ") + kVersion);
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.require_subcommand(0, 1);
  // fallthrough lets --config trail the subcommand; configurable lets a
  // config file section select the subcommand by itself.
  auto add_cmd = [&app](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    sub->configurable();
    return sub;
  };

  IngestFlags ingest;
  auto* c_ingest = add_cmd("ingest", "Validate an article file");
  c_ingest->add_option("--input", ingest.input, "Article file")->required();
  c_ingest->add_option("--format", ingest.format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));

  FilterFlags filter;
  auto* c_filter = add_cmd("filter", "Length/date/topic corpus filter");
  c_filter->add_option("--input", filter.input, "Article file")->required();
  c_filter->add_option("--output", filter.output, "Filtered JSONL")
      ->required();
  c_filter->add_option("--format", filter.format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  c_filter->add_option("--min-chars", filter.min_chars, "Minimum text length");
  c_filter->add_option("--max-chars", filter.max_chars, "Maximum text length");
  c_filter->add_option("--after", filter.after,
                       "Keep articles published on/after this date");
  c_filter->add_flag("--any-date", filter.any_date, "Disable the date filter");
  c_filter->add_option("--require", filter.require,
                       "Topic terms, any must appear (repeatable)");
  c_filter->add_flag("--any-topic", filter.any_topic,
                     "Disable the topic filter");

  AnnotFlags annot;
  auto* c_annot = add_cmd(
      "annotate-stats", "Agreement, label means, correlations, comparisons");
  c_annot->add_option("--annotations", annot.annotations, "Annotation CSV")
      ->required();
  c_annot->add_option("--articles", annot.articles,
                      "Article JSONL with class labels")
      ->required();
  c_annot->add_option("--output-dir", annot.output_dir, "Output directory")
      ->required();

  VagoFlags vago_flags;
  auto* c_vago = add_cmd("vago", "Vagueness/opinion/detail scores");
  c_vago->add_option("--input", vago_flags.input, "Article JSONL")->required();
  c_vago->add_option("--output", vago_flags.output, "Scores CSV")->required();
  c_vago->add_option("--language", vago_flags.language, "Lexicon language");
  c_vago->add_option("--lexicon-dir", vago_flags.lexicon_dir,
                     "Lexicon directory (default $STYLO_LEXICON_DIR or data)");
  c_vago->add_option("--jobs", vago_flags.jobs, "Worker threads");

  FeatureFlags feat;
  auto* c_feat = add_cmd("features", "Stylometric feature matrix");
  c_feat->add_option("--input", feat.input, "Article JSONL")->required();
  c_feat->add_option("--parses", feat.parses, "Directory of <id>.conllu")
      ->required();
  c_feat->add_option("--output", feat.output, "Feature CSV")->required();
  c_feat->add_option("--language", feat.language, "Lexicon language");
  c_feat->add_option("--lexicon-dir", feat.lexicon_dir, "Lexicon directory");
  c_feat->add_option("--aggregate", feat.aggregate, "sum, mean or max")
      ->check(CLI::IsMember({"sum", "mean", "max"}));
  c_feat->add_option("--jobs", feat.jobs, "Worker threads");

  TrainFlags train;
  auto* c_train = add_cmd("train", "Train a classifier pipeline");
  c_train->add_option("--input", train.input, "Labeled article JSONL")
      ->required();
  c_train->add_option("--model", train.model, "tfidf-rf or gbt-style")
      ->required()
      ->check(CLI::IsMember({kTfidfRf, kGbtStyle}));
  c_train->add_option("--output", train.output, "Model JSON path")->required();
  c_train->add_option("--parses", train.parses,
                      "Parse directory (gbt-style; optional for tfidf-rf)");
  c_train->add_option("--seed", train.seed, "Split/training seed");
  c_train->add_option("--language", train.language, "Lexicon language");
  c_train->add_option("--lexicon-dir", train.lexicon_dir, "Lexicon directory");
  c_train->add_option("--jobs", train.jobs, "Worker threads");
  c_train->add_option("--trees", train.forest.trees, "Forest size");
  c_train->add_option("--depth", train.forest.depth, "Forest tree depth cap");
  c_train->add_option("--features-per-split", train.forest.features_per_split,
                      "Random features per node (0 = sqrt)");
  c_train->add_option("--min-df", train.forest.min_df,
                      "Minimum document frequency");
  c_train->add_flag("--no-stopwords", train.no_stopwords,
                    "Keep stopwords as terms");
  c_train->add_option("--rounds", train.gbt.rounds, "Boosting rounds");
  c_train->add_option("--learning-rate", train.gbt.learning_rate,
                      "Boosting learning rate");
  c_train->add_option("--gbt-depth", train.gbt.depth, "Boosted tree depth cap");
  c_train->add_option("--l2", train.gbt.l2, "Leaf L2 regularization");
  c_train->add_option("--aggregate", train.gbt.aggregate,
                      "Sentence aggregation: sum, mean or max")
      ->check(CLI::IsMember({"sum", "mean", "max"}));

  EvalFlags eval;
  auto* c_eval = add_cmd("evaluate", "Metrics of a trained model");
  c_eval->add_option("--model", eval.model, "Model JSON path")->required();
  c_eval->add_option("--input", eval.input, "Labeled article JSONL")
      ->required();
  c_eval->add_option("--split", eval.split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  c_eval->add_option("--parses", eval.parses, "Parse directory");
  c_eval->add_option("--output", eval.output, "Metrics JSON (default stdout)");
  c_eval->add_option("--lexicon-dir", eval.lexicon_dir, "Lexicon directory");
  c_eval->add_option("--jobs", eval.jobs, "Worker threads");

  ExplainFlags expl;
  auto* c_expl = add_cmd("explain", "Model explanations");
  c_expl->add_option("--model", expl.model, "Model JSON path")->required();
  c_expl->add_option("--input", expl.input, "Article JSONL")->required();
  c_expl->add_flag("--shap", expl.shap, "Global mean |SHAP| ranking");
  c_expl->add_option("--salience", expl.salience_article,
                     "Sentence salience for this article id");
  c_expl->add_flag("--terms", expl.terms, "Class-discriminative terms");
  c_expl->add_option("--parses", expl.parses, "Parse directory");
  c_expl->add_option("--output", expl.output, "Output file (default stdout)");
  c_expl->add_option("--render", expl.render,
                     "Salience plain-text view output path");
  c_expl->add_option("--top", expl.top, "Rows per side for --terms");
  c_expl->add_option("--top-k", expl.top_k, "Sentences to flag for --salience");
  c_expl->add_option("--lexicon-dir", expl.lexicon_dir, "Lexicon directory");
  c_expl->add_option("--jobs", expl.jobs, "Worker threads");

  ReportFlags report;
  auto* c_report =
      add_cmd("report", "Full analysis bundle in one directory");
  c_report->add_option("--input", report.input, "Labeled article JSONL")
      ->required();
  c_report->add_option("--output-dir", report.output_dir, "Output directory")
      ->required();
  c_report->add_option("--annotations", report.annotations,
                       "Annotation CSV (optional)");
  c_report->add_option("--parses", report.parses,
                       "Parse directory (optional, enables the style model)");
  c_report->add_option("--language", report.language, "Lexicon language");
  c_report->add_option("--lexicon-dir", report.lexicon_dir,
                       "Lexicon directory");
  c_report->add_option("--seed", report.seed, "Split/training seed");
  c_report->add_option("--jobs", report.jobs, "Worker threads");
  c_report->add_option("--trees", report.trees, "Forest size");
  c_report->add_option("--rounds", report.rounds, "Boosting rounds");
  c_report->add_option("--min-df", report.min_df,
                       "Minimum document frequency");
  c_report->add_option("--aggregate", report.aggregate,
                       "Sentence aggregation: sum, mean or max")
      ->check(CLI::IsMember({"sum", "mean", "max"}));
  c_report->add_option("--top", report.top, "Rows per side for term lists");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    std::cout << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << one_line(e.what()) << "\n";
    return 1;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest);
    if (c_filter->parsed()) return cmd_filter(filter);
    if (c_annot->parsed()) return cmd_annotate_stats(annot);
    if (c_vago->parsed()) return cmd_vago(vago_flags);
    if (c_feat->parsed()) return cmd_features(feat);
    if (c_train->parsed()) return cmd_train(train);
    if (c_eval->parsed()) return cmd_evaluate(eval);
    if (c_expl->parsed()) return cmd_explain(expl);
    if (c_report->parsed()) return cmd_report(report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 2;
  }
  std::cerr << "usage error: missing subcommand (see --help)\n";
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<std::size_t>(argc - 1) : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace stylo::cli
