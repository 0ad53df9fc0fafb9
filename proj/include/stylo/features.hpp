#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/vago.hpp"

// Stylometric sentence features (length, VAGO scores, sentiment, POS and
// dependency-relation counts), document aggregation, and punctuation
// profiles.

namespace stylo::features {

// Sentence-level features keyed by name; deprel counts use the uppercased
// relation name (punct -> PUNCT, acl:relcl -> ACL:RELCL).
using FeatureMap = std::map<std::string, double>;

inline constexpr std::array<const char*, 9> kBaseFeatures = {
    "LENGTH_SENT", "VAGO_VAGUE", "VAGO_OPINION", "VAGO_DETAIL", "SENTIMENT",
    "N_VERB",      "N_ADJ",      "N_ADV",        "N_NOUN"};

// Catch-all slot for dependency relations unseen at training time.
inline constexpr const char* kOtherFeature = "OTHER";

// Frozen feature order: the nine base features, the dependency-relation
// features sorted by name, then OTHER.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  // deprel_features are uppercased relation feature names; duplicates and
  // base-feature collisions are rejected.
  static FeatureSpace build(std::vector<std::string> deprel_features);
  // Collects relation names from feature maps (keys outside the base set).
  static FeatureSpace from_maps(const std::vector<FeatureMap>& maps);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Unknown keys fold into OTHER.
  Eigen::VectorXd vectorize(const FeatureMap& map) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string deprel_feature_name(std::string_view deprel);

struct PolarityLexicon {
  std::unordered_set<std::string> positive;  // lowercased
  std::unordered_set<std::string> negative;
};

// TSV columns: term, polarity (positive|negative), match_mode
// (surface|lemma); '#' lines skipped. Lemma entries match exactly, surface
// entries case-insensitively; both pools feed the same sets.
PolarityLexicon load_polarity(const std::string& path);
PolarityLexicon parse_polarity(std::string_view content,
                               const std::string& origin);

// Score in (-1, 1): (pos - neg) / (pos + neg + 1) over lexicon hits.
double polarity_score(const corpus::ParsedSentence& sentence,
                      const PolarityLexicon& polarity);

// Features for one parsed sentence. supplied_sentiment (when given) wins
// over the polarity lexicon. VAGO scores are sentence-level; the entity
// count is the number of maximal PROPN runs. A sentence with no word tokens
// scores 0 on all VAGO components.
FeatureMap sentence_features(
    const corpus::ParsedSentence& sentence, const vago::Lexicon& lexicon,
    const PolarityLexicon& polarity,
    std::optional<double> supplied_sentiment = std::nullopt);

enum class Aggregate { kSum, kMean, kMax };

Aggregate aggregate_from_string(std::string_view s);
std::string to_string(Aggregate op);

// Elementwise aggregation over the union of keys; absent keys count as 0.
FeatureMap aggregate_document(const std::vector<FeatureMap>& features,
                              Aggregate op = Aggregate::kSum);

struct PunctProfile {
  int total = 0;
  int punct = 0;
  int words = 0;
  int numbers = 0;
  double punct_fraction = 0.0;
  // Per-mark fractions of all tokens. Periods pool . and the ellipsis;
  // quotes pool " « » and curly double quotes.
  double period = 0.0;
  double comma = 0.0;
  double question = 0.0;
  double quote = 0.0;
  double exclamation = 0.0;
};

PunctProfile punctuation_profile(const corpus::TokenizedDoc& doc);

// Feature matrix CSV: article_id, then the feature space in order, then
// class when provided.
void write_feature_matrix(const std::string& path, const FeatureSpace& space,
                          const std::vector<std::string>& article_ids,
                          const Eigen::MatrixXd& rows,
                          const std::vector<std::string>* classes = nullptr);

}  // namespace stylo::features
