#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lexsel/error.hpp"

namespace lexsel::text {

// ---------------------------------------------------------------------------
// UTF-8

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD so that
/// downstream length arithmetic stays total.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
    }
    if (len > 1) {
      if (i + len > s.size()) {
        len = 1;
      } else {
        cp = b0 & (0x7F >> len);
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
          auto b = static_cast<unsigned char>(s[i + k]);
          if ((b >> 6) != 0x2) {
            ok = false;
            break;
          }
          cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok) {
          cp = 0xFFFD;
          len = 1;
        }
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

inline std::size_t length_utf8(std::string_view s) { return decode_utf8(s).size(); }

// ---------------------------------------------------------------------------
// Case folding. Covers Latin (ASCII, Latin-1, Latin Extended-A), Greek,
// Cyrillic and Armenian; scripts without case pass through unchanged.

inline char32_t fold(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137 && (c % 2 == 0)) return c + 1;
  if (c >= 0x139 && c <= 0x148 && (c % 2 == 1)) return c + 1;
  if (c >= 0x14A && c <= 0x177 && (c % 2 == 0)) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && (c % 2 == 1)) return c + 1;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x531 && c <= 0x556) return c + 48;
  return c;
}

inline std::u32string case_fold(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = fold(c);
  return out;
}

inline std::string case_fold(std::string_view s) {
  return encode_utf8(case_fold(decode_utf8(s)));
}

// ---------------------------------------------------------------------------
// Character classes

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
         c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x37E: case 0x387:
    case 0x55A: case 0x55B: case 0x55C: case 0x55D: case 0x55E: case 0x55F:
    case 0x589: case 0x58A:
    case 0x60C: case 0x60D: case 0x61B: case 0x61F: case 0x66A: case 0x66B:
    case 0x66C: case 0x66D: case 0x6D4:
    case 0x964: case 0x965: case 0x970:
    case 0xDF4:
      return true;
    default:
      break;
  }
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x3001 && c <= 0x3003) return true;
  if (c >= 0x3008 && c <= 0x3011) return true;
  if (c >= 0x3014 && c <= 0x301F) return true;
  if (c == 0x30FB) return true;
  if (c >= 0xFF01 && c <= 0xFF0F) return true;
  if (c >= 0xFF1A && c <= 0xFF20) return true;
  if (c >= 0xFF3B && c <= 0xFF40) return true;
  if (c >= 0xFF5B && c <= 0xFF65) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Tokenization

enum class Tokenizer {
  whitespace,  ///< split on whitespace only
  punct,       ///< whitespace split, then leading/trailing punctuation peeled off
};

inline Tokenizer parse_tokenizer(std::string_view name) {
  if (name == "whitespace") return Tokenizer::whitespace;
  if (name == "punct") return Tokenizer::punct;
  fail(ErrorKind::usage, "unknown tokenizer '" + std::string(name) + "'");
}

inline const char* to_string(Tokenizer t) {
  return t == Tokenizer::whitespace ? "whitespace" : "punct";
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  const auto cps = decode_utf8(s);
  std::u32string cur;
  for (char32_t c : cps) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(encode_utf8(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(encode_utf8(cur));
  return out;
}

/// Whitespace tokens with leading and trailing punctuation split into
/// one-character tokens ("(world)." -> "(", "world", ")", ".").
/// Word-internal punctuation ("don't", "e-mail") is kept.
inline std::vector<std::string> tokenize(std::string_view s, Tokenizer mode = Tokenizer::punct) {
  auto words = split_whitespace(s);
  if (mode == Tokenizer::whitespace) return words;
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    const auto cps = decode_utf8(w);
    std::size_t lo = 0;
    std::size_t hi = cps.size();
    while (lo < hi && is_punct(cps[lo])) ++lo;
    if (lo == hi) {
      for (char32_t c : cps) out.push_back(encode_utf8(std::u32string(1, c)));
      continue;
    }
    while (hi > lo && is_punct(cps[hi - 1])) --hi;
    for (std::size_t k = 0; k < lo; ++k) out.push_back(encode_utf8(std::u32string(1, cps[k])));
    out.push_back(encode_utf8(std::u32string_view(cps).substr(lo, hi - lo)));
    for (std::size_t k = hi; k < cps.size(); ++k)
      out.push_back(encode_utf8(std::u32string(1, cps[k])));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small string helpers

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Range>
std::string join(const Range& parts, std::string_view sep) {
  std::string out;
  bool first = true;
  for (const auto& p : parts) {
    if (!first) out += sep;
    out += p;
    first = false;
  }
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace lexsel::text
