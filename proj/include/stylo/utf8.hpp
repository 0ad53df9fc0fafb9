#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

// Minimal UTF-8 handling: code point iteration plus the character classes the
// tokenizer needs (whitespace, punctuation, digits, upper/lower case) for
// Latin scripts and Cyrillic. Malformed bytes decode to U+FFFD and advance by
// one byte, so iteration always terminates.

namespace stylo::utf8 {

struct Decoded {
  char32_t cp;
  int length;  // bytes consumed, >= 1
};

inline Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) {
    return k < s.size() && (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
  };
  auto cb = [&](std::size_t k) {
    return static_cast<char32_t>(static_cast<unsigned char>(s[k]) & 0x3F);
  };
  if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
    char32_t cp = ((b0 & 0x1Fu) << 6) | cb(i + 1);
    if (cp >= 0x80) return Decoded{cp, 2};
  } else if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
    char32_t cp = ((b0 & 0x0Fu) << 12) | (cb(i + 1) << 6) | cb(i + 2);
    if (cp >= 0x800) return Decoded{cp, 3};
  } else if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
    char32_t cp = ((b0 & 0x07u) << 18) | (cb(i + 1) << 12) | (cb(i + 2) << 6) | cb(i + 3);
    if (cp >= 0x10000 && cp <= 0x10FFFF) return Decoded{cp, 4};
  }
  return {0xFFFD, 1};
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::size_t count_codepoints(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    i += static_cast<std::size_t>(decode(s, i).length);
    ++n;
  }
  return n;
}

inline bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Punctuation for tokenization purposes: ASCII punctuation, the common
// Latin-1 marks, and the General Punctuation block (dashes, curly quotes,
// ellipsis, daggers, permille, guillemets).
inline bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1:   // inverted exclamation
    case 0xA7:   // section sign
    case 0xAB:   // left guillemet
    case 0xB6:   // pilcrow
    case 0xB7:   // middle dot
    case 0xBB:   // right guillemet
    case 0xBF:   // inverted question
      return true;
    default:
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E);
  }
}

// Lower-casing for ASCII, Latin-1 Supplement, Latin Extended-A and the basic
// Cyrillic block; everything else maps to itself.
inline char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;  // Y with diaeresis
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

inline bool is_upper(char32_t c) { return to_lower(c) != c; }

inline std::string to_lower_copy(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const Decoded d = decode(s, i);
    append(out, to_lower(d.cp));
    i += static_cast<std::size_t>(d.length);
  }
  return out;
}

// True when the first code point of s is an upper-case letter.
inline bool starts_upper(std::string_view s) {
  if (s.empty()) return false;
  return is_upper(decode(s, 0).cp);
}

}  // namespace stylo::utf8
