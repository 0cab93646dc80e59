#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpe/candidates.hpp"
#include "kpe/pagerank.hpp"
#include "kpe/ranking.hpp"
#include "kpe/tokenize.hpp"

namespace kpe {

struct WordGraphConfig {
  std::size_t window = 2;  // token-index distance strictly below this links two words
  PageRankConfig pagerank;
};

/// Undirected graph over ADJ/NOUN/PROPN words; edge weight counts
/// co-occurrences within the sliding window over token positions.
inline WordGraph build_word_graph(const std::vector<Token>& tokens, std::size_t window) {
  WordGraph graph(false);
  std::vector<std::pair<int, std::size_t>> eligible;  // (node id, token index)
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_grammar_tag(tokens[i].pos)) continue;
    eligible.emplace_back(graph.add_node(tokens[i].lower), i);
  }
  for (std::size_t a = 0; a < eligible.size(); ++a) {
    for (std::size_t b = a + 1; b < eligible.size(); ++b) {
      if (eligible[b].second - eligible[a].second >= window) break;
      if (eligible[a].first == eligible[b].first) continue;
      graph.add_edge(eligible[a].first, eligible[b].first, 1.0);
    }
  }
  return graph;
}

namespace textrank_detail {

inline std::vector<RankedKeyphrase> rank_candidates_by_word_scores(
    const std::vector<Token>& tokens, const std::vector<CandidatePhrase>& candidates,
    const WordGraph& graph, const std::vector<double>& word_scores, std::size_t k) {
  std::vector<RankedKeyphrase> scored;
  scored.reserve(candidates.size());
  for (const CandidatePhrase& c : candidates) {
    double sum = 0.0;
    for (std::size_t t = c.begin_token; t < c.end_token; ++t) {
      int id = graph.node_id(tokens[t].lower);
      if (id >= 0) sum += word_scores[static_cast<std::size_t>(id)];
    }
    scored.push_back(make_ranked(c, sum));
  }
  return take_top_k(std::move(scored), k);
}

}  // namespace textrank_detail

/// Word co-occurrence PageRank; a candidate scores the sum of its member
/// words. Returns empty when the document has no eligible words.
inline std::vector<RankedKeyphrase> textrank(const std::vector<Token>& tokens,
                                             const std::vector<CandidatePhrase>& candidates,
                                             std::size_t k, const WordGraphConfig& config = {}) {
  if (k < 1) throw std::invalid_argument("textrank: k must be >= 1");
  WordGraph graph = build_word_graph(tokens, config.window);
  if (graph.size() == 0) return {};
  PageRankResult pr = pagerank(graph, config.pagerank);
  return textrank_detail::rank_candidates_by_word_scores(tokens, candidates, graph, pr.scores, k);
}

/// TextRank graph with a position bias: each word's restart probability is
/// proportional to the sum of 1/p over its 1-based positions among
/// non-punctuation tokens.
inline std::vector<RankedKeyphrase> positionrank(const std::vector<Token>& tokens,
                                                 const std::vector<CandidatePhrase>& candidates,
                                                 std::size_t k,
                                                 const WordGraphConfig& config = {}) {
  if (k < 1) throw std::invalid_argument("positionrank: k must be >= 1");
  WordGraph graph = build_word_graph(tokens, config.window);
  if (graph.size() == 0) return {};

  std::vector<double> bias(graph.size(), 0.0);
  std::size_t position = 0;
  for (const Token& t : tokens) {
    if (t.pos == PosTag::Punct) continue;
    ++position;
    int id = graph.node_id(t.lower);
    if (id >= 0) bias[static_cast<std::size_t>(id)] += 1.0 / static_cast<double>(position);
  }
  double total = 0.0;
  for (double b : bias) total += b;
  for (double& b : bias) b /= total;

  PageRankConfig pr_config = config.pagerank;
  pr_config.bias = std::move(bias);
  PageRankResult pr = pagerank(graph, pr_config);
  return textrank_detail::rank_candidates_by_word_scores(tokens, candidates, graph, pr.scores, k);
}

}  // namespace kpe
