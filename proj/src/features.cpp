#include "stylo/features.hpp"

#include <algorithm>
#include <set>

#include "stylo/utf8.hpp"

namespace stylo::features {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& msg) {
  throw Error(origin + " line " + std::to_string(line) + ": " + msg);
}

bool is_base_feature(std::string_view name) {
  for (const char* base : kBaseFeatures)
    if (name == base) return true;
  return false;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t from = 0;
  while (true) {
    std::size_t tab = line.find('\t', from);
    cols.push_back(line.substr(from, tab - from));
    if (tab == std::string::npos) break;
    from = tab + 1;
  }
  return cols;
}

}  // namespace

std::string deprel_feature_name(std::string_view deprel) {
  std::string out;
  out.reserve(deprel.size());
  for (char c : deprel)
    out.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
  return out;
}

FeatureSpace FeatureSpace::build(std::vector<std::string> deprel_features) {
  std::sort(deprel_features.begin(), deprel_features.end());
  FeatureSpace space;
  for (const char* base : kBaseFeatures) space.names_.emplace_back(base);
  for (std::size_t i = 0; i < deprel_features.size(); ++i) {
    const std::string& name = deprel_features[i];
    if (name.empty()) throw Error("empty feature name");
    if (is_base_feature(name) || name == kOtherFeature)
      throw Error("feature name '" + name + "' is reserved");
    if (i && name == deprel_features[i - 1])
      throw Error("duplicate feature name '" + name + "'");
    space.names_.push_back(name);
  }
  space.names_.emplace_back(kOtherFeature);
  for (std::size_t i = 0; i < space.names_.size(); ++i)
    space.index_.emplace(space.names_[i], i);
  return space;
}

FeatureSpace FeatureSpace::from_maps(const std::vector<FeatureMap>& maps) {
  std::set<std::string> deprels;
  for (const FeatureMap& m : maps)
    for (const auto& [name, _] : m)
      if (!is_base_feature(name) && name != kOtherFeature)
        deprels.insert(name);
  return build({deprels.begin(), deprels.end()});
}

std::optional<std::size_t> FeatureSpace::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd FeatureSpace::vectorize(const FeatureMap& map) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  const Eigen::Index other = static_cast<Eigen::Index>(size()) - 1;
  for (const auto& [name, value] : map) {
    auto it = index_.find(name);
    if (it != index_.end())
      v(static_cast<Eigen::Index>(it->second)) += value;
    else
      v(other) += value;
  }
  return v;
}

PolarityLexicon load_polarity(const std::string& path) {
  return parse_polarity(io::read_file(path), path);
}

PolarityLexicon parse_polarity(std::string_view content,
                               const std::string& origin) {
  PolarityLexicon lex;
  std::size_t line_no = 0;
  bool saw_header = false;
  for (const std::string& line : io::split_lines(content)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (!saw_header) {
      if (cols != std::vector<std::string>{"term", "polarity", "match_mode"})
        throw Error(origin +
                    ": polarity header must be term, polarity, match_mode");
      saw_header = true;
      continue;
    }
    if (cols.size() != 3)
      fail(origin, line_no, "expected 3 tab-separated fields, got " +
                                std::to_string(cols.size()));
    if (cols[0].empty()) fail(origin, line_no, "empty term");
    if (cols[2] != "surface" && cols[2] != "lemma")
      fail(origin, line_no, "match_mode must be surface or lemma");
    std::string term = utf8::to_lower_copy(cols[0]);
    bool positive;
    if (cols[1] == "positive") positive = true;
    else if (cols[1] == "negative") positive = false;
    else fail(origin, line_no, "polarity must be positive or negative, got '" +
                                   cols[1] + "'");
    if ((positive ? lex.negative : lex.positive).count(term))
      fail(origin, line_no, "conflicting polarity for term '" + term + "'");
    (positive ? lex.positive : lex.negative).insert(term);
  }
  if (!saw_header)
    throw Error(origin + ": polarity header must be term, polarity, match_mode");
  return lex;
}

double polarity_score(const corpus::ParsedSentence& sentence,
                      const PolarityLexicon& polarity) {
  int pos = 0, neg = 0;
  for (const auto& tok : sentence) {
    std::string surf = utf8::to_lower_copy(tok.surface);
    std::string lem = utf8::to_lower_copy(tok.lemma);
    if (polarity.positive.count(surf) || polarity.positive.count(lem))
      ++pos;
    else if (polarity.negative.count(surf) || polarity.negative.count(lem))
      ++neg;
  }
  return (pos - neg) / static_cast<double>(pos + neg + 1);
}

FeatureMap sentence_features(const corpus::ParsedSentence& sentence,
                             const vago::Lexicon& lexicon,
                             const PolarityLexicon& polarity,
                             std::optional<double> supplied_sentiment) {
  if (sentence.empty()) throw Error("sentence_features: empty sentence");
  FeatureMap f;
  f["LENGTH_SENT"] = static_cast<double>(sentence.size());

  int n_verb = 0, n_adj = 0, n_adv = 0, n_noun = 0;
  int propn_runs = 0;
  bool in_run = false;
  for (const auto& tok : sentence) {
    if (tok.upos == "VERB") ++n_verb;
    else if (tok.upos == "ADJ") ++n_adj;
    else if (tok.upos == "ADV") ++n_adv;
    else if (tok.upos == "NOUN") ++n_noun;
    if (tok.upos == "PROPN") {
      if (!in_run) ++propn_runs;
      in_run = true;
    } else {
      in_run = false;
    }
    f[deprel_feature_name(tok.deprel)] += 1.0;
  }
  f["N_VERB"] = n_verb;
  f["N_ADJ"] = n_adj;
  f["N_ADV"] = n_adv;
  f["N_NOUN"] = n_noun;

  corpus::ParsedDoc one;
  one.sentences.push_back(sentence);
  vago::VagoCounts counts = vago::parsed_counts(one, lexicon);
  counts.entities = propn_runs;
  if (counts.words == 0) {
    f["VAGO_VAGUE"] = 0.0;
    f["VAGO_OPINION"] = 0.0;
    f["VAGO_DETAIL"] = 0.0;
  } else {
    auto scores = vago::scores_from_counts(counts);
    f["VAGO_VAGUE"] = scores.vagueness;
    f["VAGO_OPINION"] = scores.opinion;
    f["VAGO_DETAIL"] = scores.detail;
  }

  f["SENTIMENT"] = supplied_sentiment ? *supplied_sentiment
                                      : polarity_score(sentence, polarity);
  return f;
}

Aggregate aggregate_from_string(std::string_view s) {
  if (s == "sum") return Aggregate::kSum;
  if (s == "mean") return Aggregate::kMean;
  if (s == "max") return Aggregate::kMax;
  throw Error("unknown aggregation '" + std::string(s) +
              "' (expected sum, mean, or max)");
}

std::string to_string(Aggregate op) {
  switch (op) {
    case Aggregate::kSum: return "sum";
    case Aggregate::kMean: return "mean";
    case Aggregate::kMax: return "max";
  }
  throw Error("bad Aggregate value");
}

FeatureMap aggregate_document(const std::vector<FeatureMap>& features,
                              Aggregate op) {
  if (features.empty())
    throw Error("aggregate_document over an empty sentence list");
  FeatureMap out;
  for (const FeatureMap& f : features)
    for (const auto& [name, _] : f) out.emplace(name, 0.0);
  switch (op) {
    case Aggregate::kSum:
    case Aggregate::kMean:
      for (const FeatureMap& f : features)
        for (const auto& [name, value] : f) out[name] += value;
      if (op == Aggregate::kMean)
        for (auto& [_, value] : out)
          value /= static_cast<double>(features.size());
      break;
    case Aggregate::kMax:
      for (const FeatureMap& f : features)
        for (const auto& [name, value] : f)
          out[name] = std::max(out[name], value);
      break;
  }
  return out;
}

PunctProfile punctuation_profile(const corpus::TokenizedDoc& doc) {
  if (doc.tokens.empty()) throw Error("punctuation profile of an empty document");
  PunctProfile p;
  p.total = static_cast<int>(doc.tokens.size());
  int period = 0, comma = 0, question = 0, quote = 0, exclamation = 0;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    switch (doc.tokens[i].kind) {
      case corpus::TokenKind::kWord: ++p.words; break;
      case corpus::TokenKind::kNumber: ++p.numbers; break;
      case corpus::TokenKind::kPunct: {
        ++p.punct;
        char32_t c = utf8::decode(doc.text, doc.tokens[i].span.begin).cp;
        if (c == U'.' || c == U'…') ++period;
        else if (c == U',') ++comma;
        else if (c == U'?') ++question;
        else if (c == U'!') ++exclamation;
        else if (c == U'"' || c == U'«' || c == U'»' ||
                 c == U'“' || c == U'”')
          ++quote;
        break;
      }
    }
  }
  double total = p.total;
  p.punct_fraction = p.punct / total;
  p.period = period / total;
  p.comma = comma / total;
  p.question = question / total;
  p.quote = quote / total;
  p.exclamation = exclamation / total;
  return p;
}

void write_feature_matrix(const std::string& path, const FeatureSpace& space,
                          const std::vector<std::string>& article_ids,
                          const Eigen::MatrixXd& rows,
                          const std::vector<std::string>* classes) {
  if (rows.rows() != static_cast<Eigen::Index>(article_ids.size()) ||
      rows.cols() != static_cast<Eigen::Index>(space.size()))
    throw Error("feature matrix shape does not match ids and feature space");
  if (classes && classes->size() != article_ids.size())
    throw Error("class column length does not match ids");
  std::string out = "article_id";
  for (const std::string& name : space.names()) {
    out += ',';
    out += io::csv_escape(name);
  }
  if (classes) out += ",class";
  out += '\n';
  for (std::size_t i = 0; i < article_ids.size(); ++i) {
    out += io::csv_escape(article_ids[i]);
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      out += ',';
      out += io::format_double(rows(static_cast<Eigen::Index>(i), j));
    }
    if (classes) {
      out += ',';
      out += io::csv_escape((*classes)[i]);
    }
    out += '\n';
  }
  io::write_file(path, out);
}

}  // namespace stylo::features
