#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpe/candidates.hpp"
#include "kpe/ranking.hpp"
#include "kpe/tokenize.hpp"

namespace kpe {

struct YakeConfig {
  std::size_t window = 1;  // co-occurrence window, in terms
};

namespace yake_detail {

struct TermStats {
  int tf = 0;
  int tf_upper = 0;    // capitalized occurrences away from sentence starts
  int tf_acronym = 0;  // all-caps occurrences
  std::vector<std::size_t> sentences;
  std::set<std::string> left_distinct, right_distinct;
  int left_total = 0, right_total = 0;
};

inline bool is_acronym(const std::string& s) {
  if (s.size() < 2) return false;
  for (char c : s)
    if (!std::isupper(static_cast<unsigned char>(c))) return false;
  return true;
}

inline double median_of(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return static_cast<double>(v[n / 2]);
  return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

}  // namespace yake_detail

/// Per-term YAKE score: casing, position, frequency normalization,
/// relatedness to context and sentence dispersion. Lower means better.
inline std::unordered_map<std::string, double> yake_term_scores(const std::vector<Token>& tokens,
                                                                const YakeConfig& config = {}) {
  using namespace yake_detail;
  std::unordered_map<std::string, TermStats> stats;

  // occurrence pass over the non-punctuation term sequence
  struct Occ {
    const Token* token;
    bool sentence_initial;
  };
  std::vector<Occ> seq;
  std::size_t last_sentence = static_cast<std::size_t>(-1);
  for (const Token& t : tokens) {
    if (t.pos == PosTag::Punct) continue;
    bool initial = t.sentence != last_sentence;
    last_sentence = t.sentence;
    seq.push_back({&t, initial});
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Token& t = *seq[i].token;
    TermStats& s = stats[t.lower];
    ++s.tf;
    s.sentences.push_back(t.sentence);
    if (is_acronym(t.surface)) ++s.tf_acronym;
    else if (!seq[i].sentence_initial && t.surface.size() > 1 &&
             std::isupper(static_cast<unsigned char>(t.surface[0])))
      ++s.tf_upper;
    for (std::size_t w = 1; w <= config.window && w <= i; ++w) {
      s.left_distinct.insert(seq[i - w].token->lower);
      ++s.left_total;
    }
    for (std::size_t w = 1; w <= config.window && i + w < seq.size(); ++w) {
      s.right_distinct.insert(seq[i + w].token->lower);
      ++s.right_total;
    }
  }
  if (stats.empty()) return {};

  double mean_tf = 0.0, max_tf = 0.0;
  for (const auto& [term, s] : stats) {
    (void)term;
    mean_tf += s.tf;
    max_tf = std::max(max_tf, static_cast<double>(s.tf));
  }
  mean_tf /= static_cast<double>(stats.size());
  double var = 0.0;
  for (const auto& [term, s] : stats) {
    (void)term;
    double d = s.tf - mean_tf;
    var += d * d;
  }
  double std_tf = std::sqrt(var / static_cast<double>(stats.size()));
  double n_sentences = static_cast<double>(sentence_count(tokens));

  std::unordered_map<std::string, double> scores;
  for (const auto& [term, s] : stats) {
    double w_case = std::max(s.tf_upper, s.tf_acronym) / (1.0 + std::log(s.tf));
    double w_pos = std::log(std::log(3.0 + median_of(s.sentences)));
    double w_freq = s.tf / (mean_tf + std_tf);
    double dl = s.left_total == 0
                    ? 0.0
                    : static_cast<double>(s.left_distinct.size()) / s.left_total;
    double dr = s.right_total == 0
                    ? 0.0
                    : static_cast<double>(s.right_distinct.size()) / s.right_total;
    double w_rel = 1.0 + (dl + dr) * (s.tf / max_tf);
    std::set<std::size_t> distinct_sentences(s.sentences.begin(), s.sentences.end());
    double w_spread = static_cast<double>(distinct_sentences.size()) / n_sentences;
    scores[term] = (w_rel * w_pos) / (w_case + w_freq / w_rel + w_spread / w_rel);
  }
  return scores;
}

/// Candidate score: product of member-term scores over
/// TF(candidate) * (1 + sum of member-term scores); lower internal score is
/// better. The returned list is best-first like every other ranker, with the
/// internal score negated so that scores decrease with rank.
inline std::vector<RankedKeyphrase> yake_rank(const std::vector<Token>& tokens,
                                              const std::vector<CandidatePhrase>& candidates,
                                              std::size_t k, const YakeConfig& config = {}) {
  if (k < 1) throw std::invalid_argument("yake_rank: k must be >= 1");
  std::unordered_map<std::string, double> term_scores = yake_term_scores(tokens, config);
  std::vector<RankedKeyphrase> scored;
  scored.reserve(candidates.size());
  for (const CandidatePhrase& c : candidates) {
    double product = 1.0, sum = 0.0;
    for (std::size_t t = c.begin_token; t < c.end_token; ++t) {
      auto it = term_scores.find(tokens[t].lower);
      double s = it == term_scores.end() ? 1.0 : it->second;
      product *= s;
      sum += s;
    }
    double candidate_score = product / (c.doc_freq * (1.0 + sum));
    scored.push_back(make_ranked(c, -candidate_score));
  }
  return take_top_k(std::move(scored), k);
}

}  // namespace kpe
