#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stylo/corpus.hpp"

// Lexicon-driven vagueness and subjectivity analysis. A document gets three
// ratio scores: vagueness (vague markers per word), opinion (subjective
// markers per word), and detail (named entities against vague markers).

namespace stylo::vago {

enum class VagueClass { kGenerality, kApproximation, kOneDim, kMultiDim };

std::string to_string(VagueClass c);

struct Lexicon {
  std::string language;
  // Case-insensitive surface matches (keys stored lowercased).
  std::unordered_map<std::string, VagueClass> surface;
  // Exact lemma matches, applied when a dependency parse is available.
  std::unordered_map<std::string, VagueClass> lemma;
  // First-person pronoun forms, lowercased; explicit subjectivity markers.
  std::unordered_set<std::string> first_person;

  std::size_t size() const { return surface.size() + lemma.size(); }
};

// TSV columns: term, class, match_mode. Class codes V_G, V_A, V_D, V_C mark
// vague terms; P1 marks first-person pronoun forms. match_mode is surface or
// lemma ('#' lines and blank lines are skipped).
Lexicon load_lexicon(const std::string& path);
Lexicon parse_lexicon(std::string_view content, const std::string& origin);

struct VagoCounts {
  int v_g = 0;
  int v_a = 0;
  int v_d = 0;
  int v_c = 0;
  int explicit_subjective = 0;  // first-person pronouns and '!' tokens
  int entities = 0;
  int words = 0;

  int vague() const { return v_g + v_a + v_d + v_c; }
  int subjective() const { return v_d + v_c + explicit_subjective; }
};

struct VagoScores {
  double vagueness = 0.0;
  double opinion = 0.0;
  double detail = 0.0;
  VagoCounts counts;
};

// Provided spans win; otherwise maximal runs of capitalized word tokens that
// are not sentence-initial, one entity per run.
std::vector<corpus::ByteSpan> detect_named_entities(
    const corpus::TokenizedDoc& doc,
    const std::optional<std::vector<corpus::ByteSpan>>& provided);

// vagueness = V/N, opinion = S/N, detail = E/(E+V) with 0 when E+V = 0,
// where V counts vague-marker tokens, S subjective markers (one-dim and
// multi-dim vague terms plus explicit markers), E entities, N word tokens.
VagoScores vago_scores(const corpus::TokenizedDoc& doc, const Lexicon& lexicon,
                       const std::vector<corpus::ByteSpan>& entities);

// Same counting, one bucket per sentence; entities land in the sentence
// containing their first byte. Sums to the document-level counts.
std::vector<VagoCounts> sentence_counts(
    const corpus::TokenizedDoc& doc, const Lexicon& lexicon,
    const std::vector<corpus::ByteSpan>& entities);

// Lemma-aware scoring over a dependency parse: surface entries match
// case-insensitively, lemma entries exactly; words are tokens tagged neither
// PUNCT nor SYM nor NUM. The entity count comes from the caller.
VagoScores vago_scores_parsed(const corpus::ParsedDoc& parsed,
                              const Lexicon& lexicon, int entity_count);

// Marker/word counting behind vago_scores_parsed; entities stay 0.
VagoCounts parsed_counts(const corpus::ParsedDoc& parsed,
                         const Lexicon& lexicon);

// Vague-marker class of one word surface under the counting rules
// (lowercased, curly apostrophes normalized, elided-form fallback).
std::optional<VagueClass> classify_token(const Lexicon& lexicon,
                                         std::string_view surface);

VagoScores scores_from_counts(const VagoCounts& counts);

}  // namespace stylo::vago
