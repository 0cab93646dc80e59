#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "kpe/candidates.hpp"
#include "kpe/pagerank.hpp"
#include "kpe/ranking.hpp"
#include "kpe/topicrank.hpp"

namespace kpe {

struct MultipartiteConfig {
  double alpha = 1.1;                  // strength of the first-position boost
  double similarity_threshold = 0.25;  // same topic clustering as TopicRank
  PageRankConfig pagerank;
};

/// Directed graph over candidates with edges only between different topics,
/// weighted by reciprocal offset distances. Within each multi-candidate
/// topic, the incoming edges of the first-occurring candidate are boosted by
/// alpha * e^(1 / position) times the weight its topic mates contribute.
inline WordGraph build_multipartite_graph(const std::vector<CandidatePhrase>& candidates,
                                          const std::vector<Topic>& topics, double alpha) {
  using topic_detail::reciprocal_distance;
  WordGraph graph(true);
  std::vector<int> topic_of(candidates.size(), -1);
  for (std::size_t t = 0; t < topics.size(); ++t)
    for (std::size_t m : topics[t].members) topic_of[m] = static_cast<int>(t);
  for (const CandidatePhrase& c : candidates) graph.add_node(c.stem_form);

  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (i == j || topic_of[i] == topic_of[j]) continue;
      double w = reciprocal_distance(candidates[i], candidates[j]);
      if (w > 0.0) graph.add_edge(static_cast<int>(i), static_cast<int>(j), w);
    }

  // boost the first-occurring candidate of every multi-candidate topic
  for (const Topic& topic : topics) {
    if (topic.members.size() < 2) continue;
    std::size_t first = topic.representative;
    std::map<std::size_t, double> boosts;  // source candidate -> added weight
    for (std::size_t source = 0; source < candidates.size(); ++source) {
      if (topic_of[source] == topic_of[first]) continue;
      double sum = 0.0;
      for (std::size_t mate : topic.members) {
        if (mate == first) continue;
        sum += graph.edge_weight(static_cast<int>(source), static_cast<int>(mate));
      }
      if (sum > 0.0) boosts[source] = sum;
    }
    for (const auto& [source, sum] : boosts) {
      double position = 1.0 / (1.0 + static_cast<double>(candidates[source].first_offset));
      graph.add_edge(static_cast<int>(source), static_cast<int>(first),
                     alpha * std::exp(position) * sum);
    }
  }
  return graph;
}

inline std::vector<RankedKeyphrase> multipartiterank(
    const std::vector<CandidatePhrase>& candidates, std::size_t k,
    const MultipartiteConfig& config = {}) {
  if (k < 1) throw std::invalid_argument("multipartiterank: k must be >= 1");
  if (candidates.empty()) return {};
  std::vector<Topic> topics = cluster_topics(candidates, config.similarity_threshold);
  WordGraph graph = build_multipartite_graph(candidates, topics, config.alpha);
  PageRankResult pr = pagerank(graph, config.pagerank);
  std::vector<RankedKeyphrase> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scored.push_back(make_ranked(candidates[i], pr.scores[i]));
  return take_top_k(std::move(scored), k);
}

}  // namespace kpe
