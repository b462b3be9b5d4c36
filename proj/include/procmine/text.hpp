#pragma once

// Tokenization and rule-based sentence segmentation.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace procmine {

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const CharSpan&) const = default;
};

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;  // lowercase word tokens
  CharSpan char_span;               // offsets in the parent text

  bool operator==(const Sentence&) const = default;
};

// A word or punctuation mark with its byte offsets in the source string.
struct Lexeme {
  std::string text;  // lowercased for words, the raw character for punctuation
  CharSpan span;
  bool is_word = false;
};

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c >= 0x80;
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_connector(unsigned char c) { return c == '-' || c == '.' || c == '/' || c == '\''; }

// U+2019 (right single quotation mark) is treated like an apostrophe inside words.
inline std::size_t curly_apostrophe_at(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 && static_cast<unsigned char>(s[i + 2]) == 0x99) {
    return 3;
  }
  return 0;
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline bool is_upper_byte(unsigned char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_digit_byte(unsigned char c) { return c >= '0' && c <= '9'; }

}  // namespace detail

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = detail::ascii_lower(c);
  return out;
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (detail::is_space_byte(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// Like collapse_whitespace, but a leading or trailing whitespace run survives as one space.
inline std::string collapse_whitespace_keep_edges(std::string_view s) {
  if (s.empty()) return {};
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (detail::is_space_byte(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
      continue;
    }
    in_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && detail::is_space_byte(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && detail::is_space_byte(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Words keep intra-token hyphens, dots, slashes and apostrophes when both neighbours are word
// characters ("I/O" -> "i/o", "7.1.0.4" stays whole). Whitespace is dropped; every other byte
// becomes a single punctuation lexeme.
inline std::vector<Lexeme> lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_space_byte(c)) {
      ++i;
      continue;
    }
    if (detail::curly_apostrophe_at(text, i) == 0 && detail::is_word_byte(c)) {
      const std::size_t start = i;
      while (i < n) {
        if (const auto w = detail::curly_apostrophe_at(text, i); w != 0) {
          if (i > start && i + w < n && detail::is_word_byte(static_cast<unsigned char>(text[i + w])) &&
              detail::curly_apostrophe_at(text, i + w) == 0) {
            i += w;
            continue;
          }
          break;
        }
        const auto d = static_cast<unsigned char>(text[i]);
        if (detail::is_word_byte(d)) {
          ++i;
        } else if (detail::is_connector(d) && i + 1 < n &&
                   detail::is_word_byte(static_cast<unsigned char>(text[i + 1])) &&
                   detail::curly_apostrophe_at(text, i + 1) == 0) {
          ++i;
        } else {
          break;
        }
      }
      out.push_back({to_lower(text.substr(start, i - start)), {start, i}, true});
      continue;
    }
    std::size_t width = 1;
    if (c >= 0x80) {
      // Multi-byte punctuation such as curly quotes or dashes.
      width = (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : (c >= 0xC0) ? 2 : 1;
      width = std::min(width, n - i);
    }
    out.push_back({std::string(text.substr(i, width)), {i, i + width}, false});
    i += width;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (auto& lx : lex(text)) {
    if (lx.is_word) tokens.push_back(std::move(lx.text));
  }
  return tokens;
}

namespace detail {

inline constexpr std::array<std::string_view, 30> kAbbreviations = {
    "e.g", "i.e", "etc", "no", "fig", "figs", "vs", "approx", "ver", "v", "mr", "mrs", "ms", "dr", "st",
    "cf", "al", "inc", "ltd", "vol", "sec", "ch", "p", "pp", "ref", "refs", "incl", "max", "min", "nr"};

inline bool is_abbreviation(std::string_view word) {
  const auto lw = to_lower(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lw) != kAbbreviations.end();
}

inline bool is_closing_mark(unsigned char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
inline bool is_opening_mark(unsigned char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// Index one past a sentence terminator at `i`, or npos when `i` does not end a sentence.
inline std::size_t sentence_end_after(std::string_view text, std::size_t i) {
  const char c = text[i];
  if (c != '.' && c != '!' && c != '?') return std::string_view::npos;
  std::size_t j = i + 1;
  while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
  while (j < text.size() && is_closing_mark(static_cast<unsigned char>(text[j]))) ++j;
  if (j >= text.size()) return j;
  if (!is_space_byte(static_cast<unsigned char>(text[j]))) return std::string_view::npos;
  std::size_t k = j;
  while (k < text.size() && is_space_byte(static_cast<unsigned char>(text[k]))) ++k;
  if (k >= text.size()) return j;
  auto next = static_cast<unsigned char>(text[k]);
  if (is_opening_mark(next) && k + 1 < text.size()) next = static_cast<unsigned char>(text[k + 1]);
  if (!is_upper_byte(next) && !is_digit_byte(next)) return std::string_view::npos;
  if (c == '.') {
    std::size_t w = i;
    while (w > 0 && !is_space_byte(static_cast<unsigned char>(text[w - 1])) &&
           !is_opening_mark(static_cast<unsigned char>(text[w - 1]))) {
      --w;
    }
    if (is_abbreviation(text.substr(w, i - w))) return std::string_view::npos;
  }
  return j;
}

}  // namespace detail

// Splits on . ! ? followed by whitespace and an uppercase letter or digit, and on newlines.
// Fragments without any word token are merged into a neighbouring sentence, so the result
// never contains empty sentences.
inline std::vector<Sentence> segment_sentences(std::string_view text) {
  std::vector<CharSpan> raw;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      raw.push_back({start, i});
      start = i + 1;
      continue;
    }
    const auto end = detail::sentence_end_after(text, i);
    if (end != std::string_view::npos) {
      raw.push_back({start, end});
      start = end;
      i = end - 1;
    }
  }
  raw.push_back({start, text.size()});

  // Trim and drop whitespace-only pieces; merge word-less pieces.
  std::vector<CharSpan> spans;
  bool carry = false;
  CharSpan carried;
  for (auto span : raw) {
    auto b = span.begin;
    auto e = span.end;
    while (b < e && detail::is_space_byte(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && detail::is_space_byte(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b == e) continue;
    CharSpan piece{b, e};
    const bool has_word = !tokenize(text.substr(b, e - b)).empty();
    if (!has_word) {
      if (!spans.empty() && !carry) {
        spans.back().end = e;
      } else {
        if (!carry) carried = piece;
        carried.end = e;
        carry = true;
      }
      continue;
    }
    if (carry) {
      piece.begin = carried.begin;
      carry = false;
    }
    spans.push_back(piece);
  }
  std::vector<Sentence> out;
  out.reserve(spans.size());
  for (const auto& span : spans) {
    Sentence s;
    s.text = std::string(text.substr(span.begin, span.size()));
    s.tokens = tokenize(s.text);
    s.char_span = span;
    out.push_back(std::move(s));
  }
  return out;
}

inline Sentence make_sentence(std::string_view text) {
  Sentence s;
  s.text = std::string(trim(text));
  s.tokens = tokenize(s.text);
  s.char_span = {0, s.text.size()};
  return s;
}

}  // namespace procmine
