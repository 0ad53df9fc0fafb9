#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylo/io.hpp"

// Article collections: loading and validation, the length/date/topic filter,
// deterministic train/val/test splitting, whitespace tokenization with
// heuristic sentence segmentation, and a CoNLL-U reader for dependency
// parses.

namespace stylo::corpus {

enum class ArticleClass { kUnlabeled, kRegular, kPropaganda };

std::string to_string(ArticleClass c);
ArticleClass article_class_from_string(std::string_view s);

// Half-open byte range into an article's UTF-8 text.
struct ByteSpan {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Article {
  std::string id;
  std::string source;
  std::string language;   // ISO 639-1
  std::string title;
  std::string text;
  std::optional<std::string> published_at;  // ISO-8601 date (YYYY-MM-DD)
  ArticleClass cls = ArticleClass::kUnlabeled;
  // Named-entity spans, converted to byte offsets at load time. nullopt means
  // "not provided" (heuristics apply); an empty list is authoritative.
  std::optional<std::vector<ByteSpan>> ne_spans;
  std::optional<std::vector<double>> sentiment;  // per-sentence, in [-1,1]
};

class ArticleSet {
 public:
  ArticleSet() = default;
  explicit ArticleSet(std::vector<Article> articles);  // validates unique ids

  std::size_t size() const { return articles_.size(); }
  bool empty() const { return articles_.empty(); }
  const Article& operator[](std::size_t i) const { return articles_[i]; }
  const std::vector<Article>& articles() const { return articles_; }
  const Article* find(std::string_view id) const;

  auto begin() const { return articles_.begin(); }
  auto end() const { return articles_.end(); }

 private:
  std::vector<Article> articles_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Format { kJsonl, kCsv };

ArticleSet load_articles(const std::string& path, Format format);
// Same, over an in-memory buffer; origin only feeds error messages.
ArticleSet parse_articles(std::string_view content, Format format,
                          const std::string& origin);
void write_articles_jsonl(const ArticleSet& set, const std::string& path);

struct FilterSpec {
  int min_chars = 1000;
  int max_chars = 10000;
  std::optional<std::string> after_date;   // keep iff published_at >= after_date
  std::vector<std::string> required_terms;  // match any, case-insensitive
};

// Keeps articles whose text length (Unicode scalar values, bounds inclusive)
// lies within the spec, whose date passes when requested (missing dates are
// excluded conservatively), and which mention any required term in title or
// text, case-insensitively.
ArticleSet filter_articles(const ArticleSet& set, const FilterSpec& spec);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  ArticleSet train;
  ArticleSet val;
  ArticleSet test;
};

// Deterministic shuffle split. Sizes are floor(n*ratio) per part with the
// remainder assigned to train.
DatasetSplit split_dataset(const ArticleSet& set, const SplitRatios& ratios,
                           std::uint64_t seed);

enum class TokenKind { kWord, kPunct, kNumber };

struct Token {
  ByteSpan span;
  TokenKind kind = TokenKind::kWord;
};

// Token-index range of one sentence, half-open.
struct SentenceRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

struct TokenizedDoc {
  std::string text;
  std::vector<Token> tokens;
  std::vector<SentenceRange> sentences;

  std::string_view surface(std::size_t i) const {
    const auto& s = tokens[i].span;
    return std::string_view(text).substr(s.begin, s.end - s.begin);
  }
};

// Whitespace tokenizer: punctuation characters become their own tokens
// except word-internal apostrophes/hyphens and periods between digits;
// maximal digit(.digit) runs are number tokens. Sentences end after . ! ? or
// an ellipsis when followed by whitespace and an upper-case letter, or at end
// of text.
TokenizedDoc tokenize(std::string_view text);

struct ParsedToken {
  std::string surface;
  std::string lemma;
  std::string upos;
  std::string deprel;
};

using ParsedSentence = std::vector<ParsedToken>;

struct ParsedDoc {
  std::vector<ParsedSentence> sentences;
  std::size_t token_count() const;
};

ParsedDoc read_conllu(const std::string& path);
ParsedDoc parse_conllu(std::string_view content, const std::string& origin);

}  // namespace stylo::corpus
