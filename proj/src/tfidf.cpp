#include "stylo/tfidf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "json.hpp"

#include "stylo/io.hpp"
#include "stylo/utf8.hpp"

namespace stylo::tfidf {

namespace {

using json = nlohmann::ordered_json;

std::string strip(std::string_view line) {
  const std::size_t hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  std::size_t b = 0;
  std::size_t e = line.size();
  while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
  return std::string(line.substr(b, e - b));
}

}  // namespace

StopwordSet parse_stopwords(std::string_view content) {
  StopwordSet words;
  for (const std::string& line : io::split_lines(content)) {
    const std::string word = strip(line);
    if (!word.empty()) words.insert(utf8::to_lower_copy(word));
  }
  return words;
}

StopwordSet load_stopwords(const std::string& path) {
  return parse_stopwords(io::read_file(path));
}

TermBag extract_terms(const corpus::Article& article, const StopwordSet& stopwords,
                      const TfidfConfig& config, const corpus::ParsedDoc* parse) {
  TermBag terms;
  if (parse != nullptr && config.lemmatize) {
    for (const auto& sentence : parse->sentences) {
      for (const auto& token : sentence) {
        if (token.upos == "PUNCT") continue;
        std::string term = utf8::to_lower_copy(token.lemma);
        if (term.empty() || stopwords.count(term) != 0) continue;
        terms.push_back(std::move(term));
      }
    }
    return terms;
  }
  for (const std::string* part : {&article.title, &article.text}) {
    if (part->empty()) continue;
    const corpus::TokenizedDoc doc = corpus::tokenize(*part);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (doc.tokens[i].kind == corpus::TokenKind::kPunct) continue;
      std::string term = utf8::to_lower_copy(doc.surface(i));
      if (stopwords.count(term) != 0) continue;
      terms.push_back(std::move(term));
    }
  }
  return terms;
}

TfidfModel fit_tfidf(const std::vector<TermBag>& documents, TfidfConfig config) {
  if (documents.empty()) throw Error("tfidf: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& bag : documents) {
    const std::set<std::string_view> unique(bag.begin(), bag.end());
    for (const auto term : unique) ++df[std::string(term)];
  }

  TfidfModel model;
  model.config = std::move(config);
  const std::size_t min_df = std::max<std::size_t>(model.config.min_df, 1);
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    model.vocabulary.emplace(term, model.terms.size());
    model.terms.push_back(term);
  }
  if (model.terms.empty())
    throw Error("tfidf: vocabulary is empty after filtering");

  const double n = static_cast<double>(documents.size());
  model.idf.resize(static_cast<Eigen::Index>(model.terms.size()));
  for (std::size_t j = 0; j < model.terms.size(); ++j)
    model.idf[static_cast<Eigen::Index>(j)] =
        std::log(n / static_cast<double>(df[model.terms[j]]));
  return model;
}

TfidfModel fit_tfidf(const corpus::ArticleSet& train, const StopwordSet& stopwords,
                     TfidfConfig config) {
  std::vector<TermBag> bags;
  bags.reserve(train.articles().size());
  for (const auto& article : train.articles())
    bags.push_back(extract_terms(article, stopwords, config));
  return fit_tfidf(bags, std::move(config));
}

Eigen::SparseVector<double> transform_tfidf(const TfidfModel& model,
                                            const TermBag& terms) {
  std::map<std::size_t, double> counts;
  for (const auto& term : terms) {
    const auto it = model.vocabulary.find(term);
    if (it != model.vocabulary.end()) counts[it->second] += 1.0;
  }
  Eigen::SparseVector<double> v(static_cast<Eigen::Index>(model.size()));
  v.reserve(static_cast<Eigen::Index>(counts.size()));
  for (const auto& [col, tf] : counts) {
    const double w = tf * model.idf[static_cast<Eigen::Index>(col)];
    if (w != 0.0) v.insertBack(static_cast<Eigen::Index>(col)) = w;
  }
  return v;
}

Eigen::MatrixXd transform_matrix(const TfidfModel& model,
                                 const std::vector<TermBag>& documents) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(documents.size()),
      static_cast<Eigen::Index>(model.size()));
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const Eigen::SparseVector<double> v = transform_tfidf(model, documents[i]);
    for (Eigen::SparseVector<double>::InnerIterator it(v); it; ++it)
      m(static_cast<Eigen::Index>(i), it.index()) = it.value();
  }
  return m;
}

std::string to_json(const TfidfModel& model) {
  json obj = json::object();
  obj["format"] = "stylo-tfidf";
  obj["version"] = 1;
  obj["config"] = {{"stopword_list", model.config.stopword_list},
                   {"lemmatize", model.config.lemmatize},
                   {"min_df", model.config.min_df}};
  obj["terms"] = model.terms;
  obj["idf"] = std::vector<double>(model.idf.data(),
                                   model.idf.data() + model.idf.size());
  return obj.dump();
}

TfidfModel tfidf_from_json(std::string_view text) {
  try {
    const json obj = json::parse(text);
    if (obj.at("format").get<std::string>() != "stylo-tfidf" ||
        obj.at("version").get<int>() != 1)
      throw Error("tfidf model: unknown format or version");
    TfidfModel model;
    const json& config = obj.at("config");
    model.config.stopword_list = config.at("stopword_list").get<std::string>();
    model.config.lemmatize = config.at("lemmatize").get<bool>();
    model.config.min_df = config.at("min_df").get<std::size_t>();
    model.terms = obj.at("terms").get<std::vector<std::string>>();
    const auto idf = obj.at("idf").get<std::vector<double>>();
    if (idf.size() != model.terms.size())
      throw Error("tfidf model: terms and idf lengths differ");
    if (!std::is_sorted(model.terms.begin(), model.terms.end()))
      throw Error("tfidf model: terms are not sorted");
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
      if (!model.vocabulary.emplace(model.terms[j], j).second)
        throw Error("tfidf model: duplicate term " + model.terms[j]);
    }
    model.idf = Eigen::Map<const Eigen::VectorXd>(
        idf.data(), static_cast<Eigen::Index>(idf.size()));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("tfidf model: ") + e.what());
  }
}

}  // namespace stylo::tfidf
