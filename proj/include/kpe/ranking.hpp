#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpe/candidates.hpp"

namespace kpe {

/// A scored phrase in a best-first list. `phrase` is the display surface;
/// `stem_form` is the lowercased matching key.
struct RankedKeyphrase {
  std::string phrase;
  std::string stem_form;
  double score = 0.0;
  int rank = 0;
  std::size_t first_offset = 0;
};

/// Shared tie-break for every ranker: higher score first, then earlier first
/// occurrence, then lexicographically smaller phrase.
inline bool ranked_before(const RankedKeyphrase& a, const RankedKeyphrase& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.first_offset != b.first_offset) return a.first_offset < b.first_offset;
  return a.phrase < b.phrase;
}

/// Sorts best-first, truncates to k, assigns 1-based ranks. k < 1 is an error.
inline std::vector<RankedKeyphrase> take_top_k(std::vector<RankedKeyphrase> scored,
                                               std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::sort(scored.begin(), scored.end(), ranked_before);
  if (scored.size() > k) scored.resize(k);
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i) + 1;
  return scored;
}

inline RankedKeyphrase make_ranked(const CandidatePhrase& c, double score) {
  RankedKeyphrase r;
  r.phrase = c.surface;
  r.stem_form = c.stem_form;
  r.score = score;
  r.first_offset = c.first_offset;
  return r;
}

}  // namespace kpe
