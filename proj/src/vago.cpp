#include "stylo/vago.hpp"

#include <algorithm>

#include "stylo/utf8.hpp"

namespace stylo::vago {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& msg) {
  throw Error(origin + " line " + std::to_string(line) + ": " + msg);
}

// Lowercase and normalize the curly apostrophe so lexicon keys and token
// surfaces agree.
std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto d = utf8::decode(s, i);
    utf8::append(out, d.cp == U'’' ? U'\'' : utf8::to_lower(d.cp));
    i += d.length;
  }
  return out;
}

const VagueClass* lookup_marker(const Lexicon& lexicon,
                                const std::string& norm) {
  auto it = lexicon.surface.find(norm);
  if (it != lexicon.surface.end()) return &it->second;
  // Elided forms: d'environ, l'ancien. Try the part after the apostrophe.
  auto apos = norm.find('\'');
  if (apos != std::string::npos && apos + 1 < norm.size()) {
    it = lexicon.surface.find(norm.substr(apos + 1));
    if (it != lexicon.surface.end()) return &it->second;
  }
  return nullptr;
}

bool is_first_person(const Lexicon& lexicon, const std::string& norm) {
  if (lexicon.first_person.count(norm)) return true;
  auto apos = norm.find('\'');
  if (apos != std::string::npos &&
      lexicon.first_person.count(norm.substr(0, apos + 1)))
    return true;
  return false;
}

void bump(VagoCounts& counts, VagueClass c) {
  switch (c) {
    case VagueClass::kGenerality: ++counts.v_g; break;
    case VagueClass::kApproximation: ++counts.v_a; break;
    case VagueClass::kOneDim: ++counts.v_d; break;
    case VagueClass::kMultiDim: ++counts.v_c; break;
  }
}

// Counts over one token range; entities are handled by the callers.
VagoCounts count_range(const corpus::TokenizedDoc& doc, const Lexicon& lexicon,
                       std::size_t begin, std::size_t end) {
  VagoCounts counts;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& tok = doc.tokens[i];
    if (tok.kind == corpus::TokenKind::kPunct) {
      if (doc.surface(i) == "!") ++counts.explicit_subjective;
      continue;
    }
    if (tok.kind != corpus::TokenKind::kWord) continue;
    ++counts.words;
    std::string norm = normalize(doc.surface(i));
    if (const VagueClass* c = lookup_marker(lexicon, norm))
      bump(counts, *c);
    else if (is_first_person(lexicon, norm))
      ++counts.explicit_subjective;
  }
  return counts;
}

}  // namespace

std::string to_string(VagueClass c) {
  switch (c) {
    case VagueClass::kGenerality: return "V_G";
    case VagueClass::kApproximation: return "V_A";
    case VagueClass::kOneDim: return "V_D";
    case VagueClass::kMultiDim: return "V_C";
  }
  throw Error("bad VagueClass value");
}

std::optional<VagueClass> classify_token(const Lexicon& lexicon,
                                         std::string_view surface) {
  if (const VagueClass* c = lookup_marker(lexicon, normalize(surface)))
    return *c;
  return std::nullopt;
}

Lexicon load_lexicon(const std::string& path) {
  return parse_lexicon(io::read_file(path), path);
}

Lexicon parse_lexicon(std::string_view content, const std::string& origin) {
  Lexicon lex;
  std::size_t line_no = 0;
  bool saw_header = false;
  for (const std::string& line : io::split_lines(content)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t from = 0;
    while (true) {
      std::size_t tab = line.find('\t', from);
      cols.push_back(line.substr(from, tab - from));
      if (tab == std::string::npos) break;
      from = tab + 1;
    }
    if (!saw_header) {
      if (cols != std::vector<std::string>{"term", "class", "match_mode"})
        throw Error(origin + ": lexicon header must be term, class, match_mode");
      saw_header = true;
      continue;
    }
    if (cols.size() != 3)
      fail(origin, line_no, "expected 3 tab-separated fields, got " +
                                std::to_string(cols.size()));
    const std::string& raw_term = cols[0];
    const std::string& code = cols[1];
    const std::string& mode = cols[2];
    if (raw_term.empty()) fail(origin, line_no, "empty term");
    if (mode != "surface" && mode != "lemma")
      fail(origin, line_no, "match_mode must be surface or lemma, got '" +
                                mode + "'");
    if (code == "P1") {
      if (mode != "surface")
        fail(origin, line_no, "P1 entries use surface match_mode");
      lex.first_person.insert(normalize(raw_term));
      continue;
    }
    VagueClass cls;
    if (code == "V_G") cls = VagueClass::kGenerality;
    else if (code == "V_A") cls = VagueClass::kApproximation;
    else if (code == "V_D") cls = VagueClass::kOneDim;
    else if (code == "V_C") cls = VagueClass::kMultiDim;
    else fail(origin, line_no, "unknown class code '" + code + "'");

    auto& table = mode == "surface" ? lex.surface : lex.lemma;
    std::string key = mode == "surface" ? normalize(raw_term) : raw_term;
    auto [it, inserted] = table.emplace(key, cls);
    if (!inserted && it->second != cls)
      fail(origin, line_no, "conflicting classes for term '" + raw_term +
                                "' (" + to_string(it->second) + " vs " + code +
                                ")");
  }
  if (!saw_header) throw Error(origin + ": lexicon header must be term, class, match_mode");
  if (lex.surface.empty() && lex.lemma.empty() && lex.first_person.empty())
    throw Error(origin + ": empty lexicon");
  return lex;
}

std::vector<corpus::ByteSpan> detect_named_entities(
    const corpus::TokenizedDoc& doc,
    const std::optional<std::vector<corpus::ByteSpan>>& provided) {
  if (provided) return *provided;
  const std::size_t n = doc.tokens.size();
  std::vector<bool> initial(n, false);
  for (const auto& s : doc.sentences) initial[s.begin] = true;
  auto eligible = [&](std::size_t i) {
    if (doc.tokens[i].kind != corpus::TokenKind::kWord || initial[i])
      return false;
    std::string_view surf = doc.surface(i);
    // The English pronoun is always capitalized; it is a subjectivity
    // marker, not a name.
    if (surf == "I" || surf.substr(0, 2) == "I'") return false;
    return utf8::starts_upper(surf);
  };
  std::vector<corpus::ByteSpan> out;
  std::size_t i = 0;
  while (i < n) {
    if (!eligible(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && eligible(j + 1)) ++j;
    out.push_back({doc.tokens[i].span.begin, doc.tokens[j].span.end});
    i = j + 1;
  }
  return out;
}

VagoScores scores_from_counts(const VagoCounts& counts) {
  if (counts.words == 0) throw Error("vago scores need at least one word token");
  VagoScores s;
  s.counts = counts;
  double n = counts.words;
  s.vagueness = counts.vague() / n;
  // Exclamation marks feed S without being words, so the raw ratio can pass
  // 1 on degenerate texts; the score stays capped.
  s.opinion = std::min(1.0, counts.subjective() / n);
  int ev = counts.entities + counts.vague();
  s.detail = ev == 0 ? 0.0 : static_cast<double>(counts.entities) / ev;
  return s;
}

VagoScores vago_scores(const corpus::TokenizedDoc& doc, const Lexicon& lexicon,
                       const std::vector<corpus::ByteSpan>& entities) {
  VagoCounts counts = count_range(doc, lexicon, 0, doc.tokens.size());
  counts.entities = static_cast<int>(entities.size());
  return scores_from_counts(counts);
}

std::vector<VagoCounts> sentence_counts(
    const corpus::TokenizedDoc& doc, const Lexicon& lexicon,
    const std::vector<corpus::ByteSpan>& entities) {
  std::vector<VagoCounts> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences)
    out.push_back(count_range(doc, lexicon, s.begin, s.end));
  // Each entity lands in the sentence holding its first byte.
  for (const auto& span : entities) {
    std::size_t where = 0;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      std::size_t first_tok = doc.sentences[si].begin;
      if (doc.tokens[first_tok].span.begin <= span.begin) where = si;
    }
    if (!out.empty()) ++out[where].entities;
  }
  return out;
}

VagoScores vago_scores_parsed(const corpus::ParsedDoc& parsed,
                              const Lexicon& lexicon, int entity_count) {
  VagoCounts counts = parsed_counts(parsed, lexicon);
  counts.entities = entity_count;
  return scores_from_counts(counts);
}

VagoCounts parsed_counts(const corpus::ParsedDoc& parsed,
                         const Lexicon& lexicon) {
  VagoCounts counts;
  for (const auto& sentence : parsed.sentences) {
    for (const auto& tok : sentence) {
      if (tok.upos == "PUNCT" || tok.upos == "SYM") {
        if (tok.surface == "!") ++counts.explicit_subjective;
        continue;
      }
      if (tok.upos == "NUM") continue;
      ++counts.words;
      auto lem = lexicon.lemma.find(tok.lemma);
      if (lem != lexicon.lemma.end()) {
        bump(counts, lem->second);
        continue;
      }
      std::string norm = normalize(tok.surface);
      if (const VagueClass* c = lookup_marker(lexicon, norm))
        bump(counts, *c);
      else if (is_first_person(lexicon, norm) ||
               lexicon.first_person.count(normalize(tok.lemma)))
        ++counts.explicit_subjective;
    }
  }
  return counts;
}

}  // namespace stylo::vago
