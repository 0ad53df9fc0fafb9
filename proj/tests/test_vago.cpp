#include "stylo/vago.hpp"

#include <string>
#include <vector>

#include "doctest.h"
#include "stylo/rng.hpp"

using namespace stylo;
using namespace stylo::vago;
using corpus::ByteSpan;
using corpus::tokenize;

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

Lexicon tiny_lexicon() {
  return parse_lexicon(
      "term\tclass\tmatch_mode\n"
      "some\tV_G\tsurface\n"
      "or\tV_G\tsurface\n"
      "about\tV_A\tsurface\n"
      "almost\tV_A\tsurface\n"
      "old\tV_D\tsurface\n"
      "many\tV_D\tsurface\n"
      "good\tV_C\tsurface\n"
      "effective\tV_C\tsurface\n"
      "vague\tV_C\tlemma\n"
      "i\tP1\tsurface\n"
      "we\tP1\tsurface\n",
      "mem");
}

std::vector<std::string> entity_surfaces(const corpus::TokenizedDoc& doc,
                                         const std::vector<ByteSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans)
    out.push_back(doc.text.substr(s.begin, s.end - s.begin));
  return out;
}

}  // namespace

TEST_CASE("lexicon loader parses classes and pronouns") {
  auto lex = tiny_lexicon();
  CHECK(lex.surface.size() == 8);
  CHECK(lex.lemma.size() == 1);
  CHECK(lex.surface.at("some") == VagueClass::kGenerality);
  CHECK(lex.surface.at("about") == VagueClass::kApproximation);
  CHECK(lex.surface.at("old") == VagueClass::kOneDim);
  CHECK(lex.surface.at("good") == VagueClass::kMultiDim);
  CHECK(lex.lemma.at("vague") == VagueClass::kMultiDim);
  CHECK(lex.first_person.count("i") == 1);
  CHECK(lex.first_person.count("we") == 1);
}

TEST_CASE("lexicon loader dedups, rejects conflicts and bad codes") {
  auto dup = parse_lexicon(
      "term\tclass\tmatch_mode\nsome\tV_G\tsurface\nsome\tV_G\tsurface\n",
      "mem");
  CHECK(dup.surface.size() == 1);
  // Surface matching is case-insensitive, keys normalized at load.
  auto cased = parse_lexicon(
      "term\tclass\tmatch_mode\nSome\tV_G\tsurface\n", "mem");
  CHECK(cased.surface.count("some") == 1);

  expect_error(
      [] {
        parse_lexicon("term\tclass\tmatch_mode\nsome\tV_G\tsurface\n"
                      "some\tV_A\tsurface\n",
                      "mem");
      },
      "conflict");
  expect_error(
      [] { parse_lexicon("term\tclass\tmatch_mode\nfoo\tV_X\tsurface\n", "mem"); },
      "line 2");
  expect_error(
      [] { parse_lexicon("term\tclass\tmatch_mode\nfoo\tV_G\tfuzzy\n", "mem"); },
      "match_mode");
  expect_error([] { parse_lexicon("bogus\theader\n", "mem"); }, "header");
  expect_error([] { parse_lexicon("term\tclass\tmatch_mode\n", "mem"); },
               "empty");
}

TEST_CASE("entity detection: provided spans pass through") {
  auto doc = tokenize("anything at all");
  std::vector<ByteSpan> provided{{0, 8}};
  auto out = detect_named_entities(doc, provided);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == ByteSpan{0, 8});
  // An authoritative empty list stays empty.
  CHECK(detect_named_entities(doc, std::vector<ByteSpan>{}).empty());
}

TEST_CASE("entity heuristic: capitalized runs excluding sentence starts") {
  auto doc = tokenize("He met Vladimir Putin today.");
  auto spans = detect_named_entities(doc, std::nullopt);
  CHECK(entity_surfaces(doc, spans) ==
        std::vector<std::string>{"Vladimir Putin"});

  auto initial = tokenize("Moscow is far.");
  CHECK(detect_named_entities(initial, std::nullopt).empty());

  auto two = tokenize("Vladimir Putin said it. Boris too.");
  // "Vladimir" and "Boris" are sentence-initial; only "Putin" survives.
  CHECK(entity_surfaces(two, detect_named_entities(two, std::nullopt)) ==
        std::vector<std::string>{"Putin"});

  auto comma = tokenize("in Kyiv, Moscow spoke");
  CHECK(entity_surfaces(comma, detect_named_entities(comma, std::nullopt)) ==
        std::vector<std::string>{"Kyiv", "Moscow"});

  // The pronoun "I" never joins an entity run.
  auto pron = tokenize("today I saw I'm alone");
  CHECK(detect_named_entities(pron, std::nullopt).empty());

  // Numbers and lowercase words break runs; non-Latin capitals count.
  auto cyr = tokenize("встреча с Владимиром Путиным");
  CHECK(entity_surfaces(cyr, detect_named_entities(cyr, std::nullopt)) ==
        std::vector<std::string>{"Владимиром Путиным"});
}

TEST_CASE("vago scores match the hand-counted fixture") {
  // 10 word tokens; matches: some (V_G), good (V_C); one !; one I; Kremlin
  // is the only entity.
  auto doc = tokenize("he says some words are good but I like Kremlin !");
  auto lex = tiny_lexicon();
  auto entities = detect_named_entities(doc, std::nullopt);
  REQUIRE(entities.size() == 1);
  auto s = vago_scores(doc, lex, entities);
  CHECK(s.counts.words == 10);
  CHECK(s.counts.v_g == 1);
  CHECK(s.counts.v_c == 1);
  CHECK(s.counts.v_a == 0);
  CHECK(s.counts.v_d == 0);
  CHECK(s.counts.explicit_subjective == 2);  // "I" and "!"
  CHECK(s.counts.entities == 1);
  CHECK(s.vagueness == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.opinion == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.detail == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("vago degenerate cases: all-entity and empty-overlap texts") {
  auto lex = tiny_lexicon();
  auto rich = tokenize("he met Vladimir Putin near Red Square");
  auto s = vago_scores(rich, lex, detect_named_entities(rich, std::nullopt));
  CHECK(s.counts.entities == 2);
  CHECK(s.vagueness == doctest::Approx(0.0));
  CHECK(s.opinion == doctest::Approx(0.0));
  CHECK(s.detail == doctest::Approx(1.0));

  auto plain = tokenize("he went home");
  auto p = vago_scores(plain, lex, detect_named_entities(plain, std::nullopt));
  CHECK(p.detail == doctest::Approx(0.0));  // E+V = 0 convention

  auto punct_only = tokenize("! ! ?");
  expect_error([&] { vago_scores(punct_only, lex, {}); }, "word");
}

TEST_CASE("vago scores are invariant under text duplication") {
  auto lex = tiny_lexicon();
  const std::vector<std::string> pool = {
      "he",   "said", "some", "about", "good",  "many", "words", "!",
      "Putin", "Kremlin", "Moscow", "i",  "we",  ".",   "old",   "effective"};
  rng::Rng gen(20240814);
  for (int trial = 0; trial < 200; ++trial) {
    // Lowercase first token so duplication cannot change entity status,
    // and no trailing sentence-boundary shifts: see entity heuristic.
    std::string text = "it";
    std::size_t parts = 3 + gen.below(20);
    for (std::size_t p = 0; p < parts; ++p) {
      text += ' ';
      text += pool[gen.below(pool.size())];
    }
    text += " .";
    auto once = tokenize(text);
    auto twice = tokenize(text + " " + text);
    auto s1 = vago_scores(once, lex, detect_named_entities(once, std::nullopt));
    auto s2 =
        vago_scores(twice, lex, detect_named_entities(twice, std::nullopt));
    CHECK(s2.counts.words == 2 * s1.counts.words);
    CHECK(s2.counts.vague() == 2 * s1.counts.vague());
    CHECK(s2.counts.entities == 2 * s1.counts.entities);
    CHECK(s1.vagueness == doctest::Approx(s2.vagueness).epsilon(1e-12));
    CHECK(s1.opinion == doctest::Approx(s2.opinion).epsilon(1e-12));
    CHECK(s1.detail == doctest::Approx(s2.detail).epsilon(1e-12));
  }
}

TEST_CASE("vago monotonicity under appended markers and entities") {
  auto lex = tiny_lexicon();
  rng::Rng gen(99);
  const std::vector<std::string> pool = {"he",  "said", "some", "good",
                                         "words", "Putin", "city", "nice"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string text = "it";
    std::size_t parts = 2 + gen.below(10);
    for (std::size_t p = 0; p < parts; ++p) {
      text += ' ';
      text += pool[gen.below(pool.size())];
    }
    auto base_doc = tokenize(text);
    auto base =
        vago_scores(base_doc, lex, detect_named_entities(base_doc, std::nullopt));

    // One more generality marker: V up by one, vagueness not decreased,
    // detail not increased.
    auto more_vague = tokenize(text + " some");
    auto mv = vago_scores(more_vague, lex,
                          detect_named_entities(more_vague, std::nullopt));
    CHECK(mv.counts.vague() == base.counts.vague() + 1);
    CHECK(mv.vagueness >= base.vagueness - 1e-12);
    CHECK(mv.detail <= base.detail + 1e-12);

    // One more entity after a lowercase tail: E up by one when the tail was
    // lowercase, detail not decreased either way.
    auto more_entity = tokenize(text + " and Kremlin");
    auto me = vago_scores(more_entity, lex,
                          detect_named_entities(more_entity, std::nullopt));
    CHECK(me.counts.entities == base.counts.entities + 1);
    CHECK(me.detail >= base.detail - 1e-12);

    // opinion never drops below the implicit-subjectivity share.
    CHECK(base.opinion * base.counts.words + 1e-9 >=
          base.counts.v_d + base.counts.v_c);
  }
}

TEST_CASE("sentence counts sum to document counts") {
  auto lex = tiny_lexicon();
  auto doc = tokenize("he likes Anna Karenina. Some say good things !");
  auto entities = detect_named_entities(doc, std::nullopt);
  auto per = sentence_counts(doc, lex, entities);
  REQUIRE(per.size() == 2);
  CHECK(per[0].words == 4);
  CHECK(per[0].entities == 1);
  CHECK(per[0].vague() == 0);
  CHECK(per[1].words == 4);
  CHECK(per[1].v_g == 1);  // "Some", case-insensitive
  CHECK(per[1].v_c == 1);  // "good"
  CHECK(per[1].explicit_subjective == 1);  // "!"

  auto total = vago_scores(doc, lex, entities);
  int words = 0, vague = 0, subj = 0, ents = 0;
  for (const auto& c : per) {
    words += c.words;
    vague += c.vague();
    subj += c.subjective();
    ents += c.entities;
  }
  CHECK(words == total.counts.words);
  CHECK(vague == total.counts.vague());
  CHECK(subj == total.counts.subjective());
  CHECK(ents == total.counts.entities);
}

TEST_CASE("elided forms match around the apostrophe") {
  auto lex = parse_lexicon(
      "term\tclass\tmatch_mode\n"
      "environ\tV_A\tsurface\n"
      "j'\tP1\tsurface\n"
      "je\tP1\tsurface\n",
      "mem");
  // The tokenizer keeps apostrophes word-internal; matching falls back to
  // the part after the apostrophe for markers and the prefix for pronouns.
  auto doc = tokenize("j'estime d'environ une hausse");
  auto s = vago_scores(doc, lex, {});
  CHECK(s.counts.words == 4);
  CHECK(s.counts.v_a == 1);                 // d'environ
  CHECK(s.counts.explicit_subjective == 1); // j'estime
}

TEST_CASE("parsed scoring matches lemma entries exactly") {
  auto lex = tiny_lexicon();
  corpus::ParsedDoc parsed;
  parsed.sentences.push_back({
      {"Les", "le", "DET", "det"},
      {"réponses", "réponse", "NOUN", "nsubj"},
      {"vagues", "vague", "ADJ", "amod"},  // lemma entry "vague" (V_C)
      {"arrivent", "arriver", "VERB", "root"},
      {"!", "!", "PUNCT", "punct"},
  });
  auto s = vago_scores_parsed(parsed, lex, 0);
  CHECK(s.counts.words == 4);
  CHECK(s.counts.v_c == 1);
  CHECK(s.counts.explicit_subjective == 1);  // "!"
  CHECK(s.vagueness == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.opinion == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.detail == doctest::Approx(0.0));

  // Surface entries still match in parsed mode, case-insensitively.
  corpus::ParsedDoc en;
  en.sentences.push_back({
      {"Some", "some", "DET", "det"},
      {"answers", "answer", "NOUN", "root"},
  });
  auto e = vago_scores_parsed(en, lex, 0);
  CHECK(e.counts.v_g == 1);
}
