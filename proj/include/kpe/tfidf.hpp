#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpe/candidates.hpp"
#include "kpe/corpus.hpp"
#include "kpe/ranking.hpp"
#include "kpe/tagger.hpp"

namespace kpe {

/// Document-level presence counts of candidate stem forms across a corpus.
struct DocumentFrequencyIndex {
  std::unordered_map<std::string, int> df;
  int n_docs = 0;

  int df_of(const std::string& stem_form) const {
    auto it = df.find(stem_form);
    return it == df.end() ? 1 : it->second;  // unseen candidates behave as df = 1
  }
};

/// One pass over the corpus; each document contributes at most 1 per stem
/// form no matter how often the phrase repeats inside it.
inline DocumentFrequencyIndex build_df_index(
    const Corpus& corpus,
    const std::function<std::vector<CandidatePhrase>(const Post&)>& extract) {
  if (corpus.posts.empty()) throw std::invalid_argument("build_df_index: empty corpus");
  DocumentFrequencyIndex index;
  index.n_docs = static_cast<int>(corpus.posts.size());
  for (const Post& post : corpus.posts)
    for (const CandidatePhrase& c : extract(post)) ++index.df[c.stem_form];
  return index;
}

inline std::vector<CandidatePhrase> default_candidates(const Post& post,
                                                       const PosTagger& tagger) {
  std::vector<Token> tokens = tokenize(document_text(post));
  tagger.tag(tokens);
  return extract_candidates(tokens);
}

/// score = tf * ln(n_docs / df), tf = in-document candidate frequency.
inline std::vector<RankedKeyphrase> tfidf_rank(const std::vector<CandidatePhrase>& candidates,
                                               const DocumentFrequencyIndex& index,
                                               std::size_t k) {
  if (k < 1) throw std::invalid_argument("tfidf_rank: k must be >= 1");
  std::vector<RankedKeyphrase> scored;
  scored.reserve(candidates.size());
  for (const CandidatePhrase& c : candidates) {
    double idf = std::log(static_cast<double>(index.n_docs) / index.df_of(c.stem_form));
    scored.push_back(make_ranked(c, c.doc_freq * idf));
  }
  return take_top_k(std::move(scored), k);
}

}  // namespace kpe
