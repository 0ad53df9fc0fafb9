#include "stylo/corpus.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "stylo/rng.hpp"
#include "stylo/utf8.hpp"

namespace stylo::corpus {

using io::CsvReader;
using io::read_file;
using io::split_lines;
using io::write_file;

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& msg) {
  throw Error(origin + " line " + std::to_string(line) + ": " + msg);
}

bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Byte offset of each codepoint boundary, with the total length appended.
std::vector<std::uint32_t> codepoint_offsets(std::string_view text) {
  std::vector<std::uint32_t> offsets;
  std::size_t i = 0;
  while (i < text.size()) {
    offsets.push_back(static_cast<std::uint32_t>(i));
    i += utf8::decode(text, i).length;
  }
  offsets.push_back(static_cast<std::uint32_t>(text.size()));
  return offsets;
}

std::vector<ByteSpan> spans_to_bytes(const json& arr, std::string_view text,
                                     const std::string& origin,
                                     std::size_t line) {
  auto offsets = codepoint_offsets(text);
  std::size_t n_cp = offsets.size() - 1;
  std::vector<ByteSpan> spans;
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number_integer())
      fail(origin, line, "ne_spans entries must be [start, end] integer pairs");
    long long a = item[0].get<long long>();
    long long b = item[1].get<long long>();
    if (a < 0 || b <= a || static_cast<std::size_t>(b) > n_cp)
      fail(origin, line, "ne_spans out of bounds");
    spans.push_back({offsets[static_cast<std::size_t>(a)],
                     offsets[static_cast<std::size_t>(b)]});
  }
  std::sort(spans.begin(), spans.end(),
            [](const ByteSpan& x, const ByteSpan& y) { return x.begin < y.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].begin < spans[i - 1].end)
      fail(origin, line, "ne_spans overlap");
  return spans;
}

Article article_from_json(const json& obj, const std::string& origin,
                          std::size_t line) {
  static const std::vector<std::string> known = {
      "id",    "source",       "language", "title",   "text",
      "published_at", "class", "ne_spans", "sentiment"};
  for (const auto& [key, _] : obj.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(origin, line, "unknown field '" + key + "'");
  auto require_string = [&](const char* key) -> std::string {
    if (!obj.contains(key) || !obj[key].is_string())
      fail(origin, line, std::string("missing or non-string field '") + key + "'");
    return obj[key].get<std::string>();
  };
  Article a;
  a.id = require_string("id");
  a.source = require_string("source");
  a.language = require_string("language");
  a.title = require_string("title");
  a.text = require_string("text");
  if (a.id.empty()) fail(origin, line, "empty id");
  if (a.text.empty()) fail(origin, line, "empty text");
  if (a.language.size() != 2 || !std::islower(static_cast<unsigned char>(a.language[0])) ||
      !std::islower(static_cast<unsigned char>(a.language[1])))
    fail(origin, line, "language must be a two-letter ISO 639-1 code");

  if (obj.contains("published_at") && !obj["published_at"].is_null()) {
    if (!obj["published_at"].is_string() ||
        !valid_iso_date(obj["published_at"].get<std::string>()))
      fail(origin, line, "published_at must be an ISO date (YYYY-MM-DD)");
    a.published_at = obj["published_at"].get<std::string>();
  }
  if (obj.contains("class") && !obj["class"].is_null()) {
    if (!obj["class"].is_string())
      fail(origin, line, "class must be a string or null");
    try {
      a.cls = article_class_from_string(obj["class"].get<std::string>());
    } catch (const Error& e) {
      fail(origin, line, e.what());
    }
  }
  if (obj.contains("ne_spans") && !obj["ne_spans"].is_null()) {
    if (!obj["ne_spans"].is_array())
      fail(origin, line, "ne_spans must be an array or null");
    a.ne_spans = spans_to_bytes(obj["ne_spans"], a.text, origin, line);
  }
  if (obj.contains("sentiment") && !obj["sentiment"].is_null()) {
    if (!obj["sentiment"].is_array())
      fail(origin, line, "sentiment must be an array or null");
    std::vector<double> vals;
    for (const auto& item : obj["sentiment"]) {
      if (!item.is_number())
        fail(origin, line, "sentiment entries must be numbers");
      double x = item.get<double>();
      if (!(x >= -1.0 && x <= 1.0))
        fail(origin, line, "sentiment values must lie in [-1, 1]");
      vals.push_back(x);
    }
    a.sentiment = std::move(vals);
  }
  return a;
}

ArticleSet parse_jsonl(std::string_view content, const std::string& origin) {
  std::vector<Article> articles;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(content)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(origin, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(origin, line_no, "expected a JSON object");
    articles.push_back(article_from_json(obj, origin, line_no));
  }
  return ArticleSet(std::move(articles));
}

ArticleSet parse_csv(std::string_view content, const std::string& origin) {
  static const std::vector<std::string> header = {
      "id",    "source",       "language", "title",   "text",
      "published_at", "class", "ne_spans", "sentiment"};
  CsvReader reader{std::string(content)};
  std::vector<std::string> row;
  if (!reader.next(row) || row != header)
    throw Error(origin + ": bad header; expected id,source,language,title,"
                         "text,published_at,class,ne_spans,sentiment");
  std::vector<Article> articles;
  while (reader.next(row)) {
    std::size_t line = reader.record_line();
    if (row.size() != header.size())
      fail(origin, line, "expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(row.size()));
    json obj = json::object();
    for (std::size_t i = 0; i < 5; ++i) obj[header[i]] = row[i];
    if (!row[5].empty()) obj["published_at"] = row[5];
    if (!row[6].empty()) obj["class"] = row[6];
    for (std::size_t i : {7u, 8u}) {
      if (row[i].empty()) continue;
      try {
        obj[header[i]] = json::parse(row[i]);
      } catch (const nlohmann::json::exception& e) {
        fail(origin, line, header[i] + ": invalid JSON: " + e.what());
      }
    }
    articles.push_back(article_from_json(obj, origin, line));
  }
  return ArticleSet(std::move(articles));
}

}  // namespace

std::string to_string(ArticleClass c) {
  switch (c) {
    case ArticleClass::kRegular: return "regular";
    case ArticleClass::kPropaganda: return "propaganda";
    case ArticleClass::kUnlabeled: return "unlabeled";
  }
  throw Error("bad ArticleClass value");
}

ArticleClass article_class_from_string(std::string_view s) {
  if (s == "regular") return ArticleClass::kRegular;
  if (s == "propaganda") return ArticleClass::kPropaganda;
  if (s == "unlabeled") return ArticleClass::kUnlabeled;
  throw Error("unknown class '" + std::string(s) +
              "' (expected regular, propaganda, or unlabeled)");
}

ArticleSet::ArticleSet(std::vector<Article> articles)
    : articles_(std::move(articles)) {
  index_.reserve(articles_.size());
  for (std::size_t i = 0; i < articles_.size(); ++i) {
    if (articles_[i].id.empty()) throw Error("article with empty id");
    if (!index_.emplace(articles_[i].id, i).second)
      throw Error("duplicate article id '" + articles_[i].id + "'");
  }
}

const Article* ArticleSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &articles_[it->second];
}

ArticleSet load_articles(const std::string& path, Format format) {
  return parse_articles(read_file(path), format, path);
}

ArticleSet parse_articles(std::string_view content, Format format,
                          const std::string& origin) {
  return format == Format::kJsonl ? parse_jsonl(content, origin)
                                  : parse_csv(content, origin);
}

void write_articles_jsonl(const ArticleSet& set, const std::string& path) {
  std::string out;
  for (const Article& a : set) {
    json obj;
    obj["id"] = a.id;
    obj["source"] = a.source;
    obj["language"] = a.language;
    obj["title"] = a.title;
    obj["text"] = a.text;
    obj["published_at"] = a.published_at ? json(*a.published_at) : json();
    obj["class"] =
        a.cls == ArticleClass::kUnlabeled ? json() : json(to_string(a.cls));
    if (a.ne_spans) {
      // Stored as byte offsets; the interchange format uses codepoints.
      auto offsets = codepoint_offsets(a.text);
      json arr = json::array();
      for (const ByteSpan& s : *a.ne_spans) {
        auto cp_of = [&](std::uint32_t byte) {
          auto it = std::lower_bound(offsets.begin(), offsets.end(), byte);
          return static_cast<std::size_t>(it - offsets.begin());
        };
        arr.push_back({cp_of(s.begin), cp_of(s.end)});
      }
      obj["ne_spans"] = std::move(arr);
    } else {
      obj["ne_spans"] = json();
    }
    obj["sentiment"] = a.sentiment ? json(*a.sentiment) : json();
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

ArticleSet filter_articles(const ArticleSet& set, const FilterSpec& spec) {
  if (spec.min_chars <= 0 || spec.min_chars > spec.max_chars)
    throw Error("filter spec requires 0 < min_chars <= max_chars");
  if (spec.after_date && !valid_iso_date(*spec.after_date))
    throw Error("filter after_date must be an ISO date (YYYY-MM-DD)");
  std::vector<std::string> terms;
  for (const auto& t : spec.required_terms) {
    if (t.empty()) throw Error("empty required term");
    terms.push_back(utf8::to_lower_copy(t));
  }

  std::vector<Article> kept;
  for (const Article& a : set) {
    auto n = utf8::count_codepoints(a.text);
    if (n < static_cast<std::size_t>(spec.min_chars) ||
        n > static_cast<std::size_t>(spec.max_chars))
      continue;
    if (spec.after_date) {
      if (!a.published_at || *a.published_at < *spec.after_date) continue;
    }
    if (!terms.empty()) {
      std::string haystack = utf8::to_lower_copy(a.title);
      haystack += '\n';
      haystack += utf8::to_lower_copy(a.text);
      bool hit = false;
      for (const auto& t : terms)
        if (haystack.find(t) != std::string::npos) {
          hit = true;
          break;
        }
      if (!hit) continue;
    }
    kept.push_back(a);
  }
  return ArticleSet(std::move(kept));
}

DatasetSplit split_dataset(const ArticleSet& set, const SplitRatios& ratios,
                           std::uint64_t seed) {
  if (set.size() < 3) throw Error("split needs at least 3 articles");
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0))
    throw Error("split ratios must be positive");
  double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("split ratios must sum to 1");

  std::size_t n = set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Rng gen(seed);
  gen.shuffle(order);

  std::size_t n_val = static_cast<std::size_t>(n * ratios.val);
  std::size_t n_test = static_cast<std::size_t>(n * ratios.test);
  std::size_t n_train = n - n_val - n_test;  // floor(train) plus remainder

  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + from,
                                 order.begin() + from + count);
    std::sort(idx.begin(), idx.end());
    std::vector<Article> part;
    part.reserve(count);
    for (std::size_t i : idx) part.push_back(set[i]);
    return ArticleSet(std::move(part));
  };
  DatasetSplit out;
  out.train = take(0, n_train);
  out.val = take(n_train, n_val);
  out.test = take(n_train + n_val, n_test);
  return out;
}

TokenizedDoc tokenize(std::string_view text) {
  if (text.empty()) throw Error("tokenize: empty text");
  TokenizedDoc doc;
  doc.text.assign(text);

  struct Ch {
    std::uint32_t pos;
    char32_t cp;
    std::uint32_t len;
  };
  std::vector<Ch> run;

  auto flush_run = [&]() {
    std::size_t n = run.size();
    std::size_t start = npos;
    auto close = [&](std::size_t end_idx) {
      if (start == npos) return;
      ByteSpan span{run[start].pos, run[end_idx - 1].pos + run[end_idx - 1].len};
      bool number = true;
      for (std::size_t j = start; j < end_idx && number; ++j) {
        char32_t c = run[j].cp;
        if (utf8::is_digit(c)) continue;
        if (c == U'.' && j > start && j + 1 < end_idx) continue;
        number = false;
      }
      doc.tokens.push_back({span, number ? TokenKind::kNumber : TokenKind::kWord});
      start = npos;
    };
    for (std::size_t k = 0; k < n; ++k) {
      char32_t c = run[k].cp;
      if (!utf8::is_punct(c)) {
        if (start == npos) start = k;
        continue;
      }
      bool internal = false;
      if (start != npos && k + 1 < n && !utf8::is_punct(run[k + 1].cp)) {
        if (c == U'\'' || c == U'’' || c == U'-' || c == U'‑')
          internal = true;
        else if (c == U'.')
          internal = utf8::is_digit(run[k - 1].cp) && utf8::is_digit(run[k + 1].cp);
      }
      if (internal) continue;
      close(k);
      doc.tokens.push_back(
          {{run[k].pos, run[k].pos + run[k].len}, TokenKind::kPunct});
    }
    close(n);
    run.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    auto d = utf8::decode(text, i);
    if (utf8::is_space(d.cp)) {
      flush_run();
    } else {
      run.push_back({static_cast<std::uint32_t>(i), d.cp,
                     static_cast<std::uint32_t>(d.length)});
    }
    i += d.length;
  }
  flush_run();

  // Sentence boundaries: terminal punctuation, then whitespace + uppercase,
  // or end of input.
  std::uint32_t sent_begin = 0;
  for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
    bool boundary = false;
    if (doc.tokens[t].kind == TokenKind::kPunct) {
      std::size_t pos = doc.tokens[t].span.begin;
      char32_t c = utf8::decode(doc.text, pos).cp;
      if (c == U'.' || c == U'!' || c == U'?' || c == U'…') {
        if (t + 1 == doc.tokens.size()) {
          boundary = true;
        } else if (doc.tokens[t + 1].span.begin > doc.tokens[t].span.end) {
          std::size_t next = doc.tokens[t + 1].span.begin;
          boundary = utf8::is_upper(utf8::decode(doc.text, next).cp);
        }
      }
    }
    if (t + 1 == doc.tokens.size()) boundary = true;
    if (boundary) {
      doc.sentences.push_back({sent_begin, static_cast<std::uint32_t>(t + 1)});
      sent_begin = static_cast<std::uint32_t>(t + 1);
    }
  }
  return doc;
}

std::size_t ParsedDoc::token_count() const {
  std::size_t total = 0;
  for (const auto& s : sentences) total += s.size();
  return total;
}

ParsedDoc read_conllu(const std::string& path) {
  return parse_conllu(read_file(path), path);
}

ParsedDoc parse_conllu(std::string_view content, const std::string& origin) {
  ParsedDoc doc;
  ParsedSentence current;
  std::size_t line_no = 0;
  auto end_sentence = [&]() {
    if (!current.empty()) doc.sentences.push_back(std::move(current));
    current.clear();
  };
  for (std::string_view line : split_lines(content)) {
    ++line_no;
    if (line.empty()) {
      end_sentence();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string_view> cols;
    std::size_t from = 0;
    while (true) {
      std::size_t tab = line.find('\t', from);
      cols.push_back(line.substr(from, tab - from));
      if (tab == std::string_view::npos) break;
      from = tab + 1;
    }
    if (cols.size() != 10)
      fail(origin, line_no, "expected 10 columns, got " +
                                std::to_string(cols.size()));
    std::string_view id = cols[0];
    if (id.empty()) fail(origin, line_no, "empty token id");
    // Multiword-token ranges ("3-4") and empty nodes ("3.1") carry no
    // basic-dependency information.
    if (id.find('-') != std::string_view::npos ||
        id.find('.') != std::string_view::npos)
      continue;
    for (char c : id)
      if (c < '0' || c > '9') fail(origin, line_no, "bad token id");
    if (cols[1].empty() || cols[1] == "_")
      fail(origin, line_no, "missing surface form");
    if (cols[3].empty() || cols[3] == "_")
      fail(origin, line_no, "missing upos");
    if (cols[7].empty() || cols[7] == "_")
      fail(origin, line_no, "missing deprel");
    std::string lemma(cols[2] == "_" ? cols[1] : cols[2]);
    current.push_back({std::string(cols[1]), std::move(lemma),
                       std::string(cols[3]), std::string(cols[7])});
  }
  end_sentence();
  return doc;
}

}  // namespace stylo::corpus
