#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kpe/io.hpp"

namespace kpe {

enum class PosTag { Adj, Noun, Propn, Verb, Adv, Pron, Det, Adp, Num, Punct, Other };

struct Token {
  std::string surface;
  std::string lower;
  PosTag pos = PosTag::Other;
  std::size_t begin = 0;  // byte offsets [begin, end) into the source text
  std::size_t end = 0;
  std::size_t sentence = 0;
};

namespace tok_detail {

inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

inline bool is_sentence_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace tok_detail

/// Splits text into word and punctuation tokens with byte spans and sentence
/// indices. Surfaces plus the skipped whitespace reconstruct the input.
/// Apostrophes stay inside words ("can't"); a '.' between digits stays inside
/// the number ("4.87"). Sentences break on . ! ? and on newlines.
inline std::vector<Token> tokenize(std::string_view text) {
  using namespace tok_detail;
  std::vector<Token> tokens;
  std::size_t i = 0;
  std::size_t sentence = 0;
  bool pending_break = false;
  std::size_t prev_end = 0;

  auto begin_token = [&](std::size_t at, bool terminal_punct) {
    bool newline_gap = text.substr(prev_end, at - prev_end).find('\n') != std::string_view::npos;
    if (!tokens.empty() && (newline_gap || (pending_break && !terminal_punct))) {
      ++sentence;
      pending_break = false;
    }
  };

  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_word_byte(c)) {
      while (i < text.size()) {
        unsigned char b = static_cast<unsigned char>(text[i]);
        if (is_word_byte(b)) {
          ++i;
        } else if ((b == '\'' || b == '.') && i > start && i + 1 < text.size() &&
                   is_word_byte(static_cast<unsigned char>(text[i + 1])) &&
                   (b == '\'' || (std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                                  std::isdigit(static_cast<unsigned char>(text[i + 1]))))) {
          ++i;  // internal apostrophe or decimal point
        } else {
          break;
        }
      }
      begin_token(start, false);
    } else {
      ++i;  // one punctuation character per token
      begin_token(start, is_sentence_terminal(static_cast<char>(c)));
      if (is_sentence_terminal(static_cast<char>(c))) pending_break = true;
    }
    Token t;
    t.surface = std::string(text.substr(start, i - start));
    t.lower = to_lower(t.surface);
    t.begin = start;
    t.end = i;
    t.sentence = sentence;
    tokens.push_back(std::move(t));
    prev_end = i;
  }
  return tokens;
}

inline std::size_t sentence_count(const std::vector<Token>& tokens) {
  return tokens.empty() ? 0 : tokens.back().sentence + 1;
}

}  // namespace kpe
