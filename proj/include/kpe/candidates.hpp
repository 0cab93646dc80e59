#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "kpe/stem.hpp"
#include "kpe/tokenize.hpp"

namespace kpe {

/// A grammar-matched noun phrase, deduplicated by stem form across the
/// document. Every member token is ADJ/NOUN/PROPN and the last one is a noun.
struct CandidatePhrase {
  std::size_t begin_token = 0;  // first occurrence, [begin_token, end_token)
  std::size_t end_token = 0;
  std::string surface;    // first-occurrence tokens joined by single spaces
  std::string stem_form;  // space-joined stems of the lowercased tokens
  std::size_t first_offset = 0;
  int doc_freq = 0;
  std::vector<std::size_t> offsets;    // char offset of every occurrence
  std::vector<std::size_t> sentences;  // sentence index of every occurrence
};

struct CandidateSpan {
  std::size_t begin_token = 0;
  std::size_t end_token = 0;
};

inline bool is_noun_tag(PosTag t) { return t == PosTag::Noun || t == PosTag::Propn; }
inline bool is_grammar_tag(PosTag t) { return t == PosTag::Adj || is_noun_tag(t); }

/// Maximal non-overlapping matches of ADJ*(NOUN|PROPN)+ within each sentence:
/// every maximal noun run extended left over the adjectives touching it.
inline std::vector<CandidateSpan> candidate_spans(const std::vector<Token>& tokens) {
  std::vector<CandidateSpan> spans;
  std::size_t i = 0;
  const std::size_t n = tokens.size();
  while (i < n) {
    if (!is_noun_tag(tokens[i].pos)) {
      ++i;
      continue;
    }
    std::size_t run_begin = i;
    while (i < n && is_noun_tag(tokens[i].pos) && tokens[i].sentence == tokens[run_begin].sentence)
      ++i;
    std::size_t begin = run_begin;
    while (begin > 0 && tokens[begin - 1].pos == PosTag::Adj &&
           tokens[begin - 1].sentence == tokens[run_begin].sentence)
      --begin;
    spans.push_back({begin, i});
  }
  return spans;
}

inline std::string candidate_surface(const std::vector<Token>& tokens, const CandidateSpan& s) {
  std::string out;
  for (std::size_t t = s.begin_token; t < s.end_token; ++t) {
    if (t != s.begin_token) out += ' ';
    out += tokens[t].surface;
  }
  return out;
}

inline std::string candidate_stem_form(const std::vector<Token>& tokens, const CandidateSpan& s) {
  std::string out;
  for (std::size_t t = s.begin_token; t < s.end_token; ++t) {
    if (t != s.begin_token) out += ' ';
    out += stem(tokens[t].lower);
  }
  return out;
}

/// Grammar matches merged by stem form, ordered by first occurrence.
inline std::vector<CandidatePhrase> extract_candidates(const std::vector<Token>& tokens) {
  std::vector<CandidatePhrase> result;
  std::map<std::string, std::size_t> by_stem;
  for (const CandidateSpan& span : candidate_spans(tokens)) {
    std::string stem_form = candidate_stem_form(tokens, span);
    std::size_t offset = tokens[span.begin_token].begin;
    auto it = by_stem.find(stem_form);
    if (it == by_stem.end()) {
      CandidatePhrase c;
      c.begin_token = span.begin_token;
      c.end_token = span.end_token;
      c.surface = candidate_surface(tokens, span);
      c.stem_form = std::move(stem_form);
      c.first_offset = offset;
      c.doc_freq = 1;
      c.offsets.push_back(offset);
      c.sentences.push_back(tokens[span.begin_token].sentence);
      by_stem.emplace(c.stem_form, result.size());
      result.push_back(std::move(c));
    } else {
      CandidatePhrase& c = result[it->second];
      ++c.doc_freq;
      c.offsets.push_back(offset);
      c.sentences.push_back(tokens[span.begin_token].sentence);
    }
  }
  return result;
}

}  // namespace kpe
