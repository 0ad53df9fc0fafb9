#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stylo {

// Data/format errors surfaced to the CLI as exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path);
}

// Shortest round-trip formatting; deterministic across runs.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("invalid number '" + std::string(s) + "' in " + context);
  }
  return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("invalid integer '" + std::string(s) + "' in " + context);
  }
  return v;
}

// RFC-4180 style CSV over an in-memory buffer. Quoted fields may contain
// commas, doubled quotes and newlines. next() yields one record; the line
// number of the record start is kept for error messages.
class CsvReader {
 public:
  explicit CsvReader(std::string content) : buf_(std::move(content)) {}

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    if (pos_ >= buf_.size()) return false;
    record_line_ = line_;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (pos_ <= buf_.size()) {
      if (pos_ == buf_.size()) {
        if (quoted) throw Error("unterminated quote in CSV at line " + std::to_string(record_line_));
        fields.push_back(std::move(field));
        ++pos_;
        return true;
      }
      const char c = buf_[pos_];
      if (quoted) {
        if (c == '"') {
          if (pos_ + 1 < buf_.size() && buf_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
          } else {
            quoted = false;
            ++pos_;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
          ++pos_;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (field.empty() && !any) {
            quoted = true;
          } else {
            field.push_back(c);
          }
          any = true;
          ++pos_;
          break;
        case ',':
          fields.push_back(std::move(field));
          field.clear();
          any = false;
          ++pos_;
          break;
        case '\r':
          ++pos_;
          break;
        case '\n':
          ++line_;
          ++pos_;
          fields.push_back(std::move(field));
          return true;
        default:
          field.push_back(c);
          any = true;
          ++pos_;
          break;
      }
    }
    return false;
  }

  std::size_t record_line() const { return record_line_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 1;
};

inline std::string csv_escape(std::string_view field) {
  const bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string_view line = text.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.emplace_back(line);
      start = i + 1;
    }
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

// FNV-1a, used to stamp a RunConfig hash into every output.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace io
}  // namespace stylo
