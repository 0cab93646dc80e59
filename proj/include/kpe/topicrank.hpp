#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "kpe/candidates.hpp"
#include "kpe/pagerank.hpp"
#include "kpe/ranking.hpp"

namespace kpe {

struct TopicRankConfig {
  double similarity_threshold = 0.25;  // average-linkage Jaccard cut
  PageRankConfig pagerank;
};

/// Candidate indices grouped into one topic; the representative is the
/// earliest-occurring member.
struct Topic {
  std::vector<std::size_t> members;
  std::size_t representative = 0;
};

namespace topic_detail {

inline std::set<std::string> stem_word_set(const CandidatePhrase& c) {
  std::set<std::string> words;
  for (const std::string& w : split(c.stem_form, ' '))
    if (!w.empty()) words.insert(w);
  return words;
}

inline double jaccard_sim(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const std::string& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Sum of reciprocal offset distances over all occurrence pairs of two
/// candidates.
inline double reciprocal_distance(const CandidatePhrase& a, const CandidatePhrase& b) {
  double sum = 0.0;
  for (std::size_t pa : a.offsets)
    for (std::size_t pb : b.offsets) {
      double d = pa > pb ? static_cast<double>(pa - pb) : static_cast<double>(pb - pa);
      if (d > 0.0) sum += 1.0 / d;
    }
  return sum;
}

}  // namespace topic_detail

/// Average-linkage agglomerative clustering over stem-set Jaccard similarity:
/// keep merging the most similar pair of clusters while the linkage stays at
/// or above the threshold. Ties merge the smallest indices first, so the
/// clustering is deterministic.
inline std::vector<Topic> cluster_topics(const std::vector<CandidatePhrase>& candidates,
                                         double similarity_threshold = 0.25) {
  using namespace topic_detail;
  const std::size_t n = candidates.size();
  std::vector<std::set<std::string>> words(n);
  for (std::size_t i = 0; i < n; ++i) words[i] = stem_word_set(candidates[i]);

  std::vector<std::vector<std::size_t>> clusters;
  clusters.reserve(n);
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});

  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double sum = 0.0;
    for (std::size_t i : a)
      for (std::size_t j : b) sum += jaccard_sim(words[i], words[j]);
    return sum / static_cast<double>(a.size() * b.size());
  };

  while (clusters.size() > 1) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double sim = linkage(clusters[i], clusters[j]);
        if (sim > best) {
          best = sim;
          bi = i;
          bj = j;
        }
      }
    if (best < similarity_threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  std::vector<Topic> topics;
  topics.reserve(clusters.size());
  for (std::vector<std::size_t>& members : clusters) {
    Topic t;
    t.representative = members.front();
    for (std::size_t m : members)
      if (candidates[m].first_offset < candidates[t.representative].first_offset)
        t.representative = m;
    t.members = std::move(members);
    topics.push_back(std::move(t));
  }
  // stable order: by representative first offset, then representative stem
  std::sort(topics.begin(), topics.end(), [&](const Topic& a, const Topic& b) {
    const CandidatePhrase& ca = candidates[a.representative];
    const CandidatePhrase& cb = candidates[b.representative];
    if (ca.first_offset != cb.first_offset) return ca.first_offset < cb.first_offset;
    return ca.stem_form < cb.stem_form;
  });
  return topics;
}

/// Complete graph over topics, edges weighted by the reciprocal offset
/// distances between member occurrences; one keyphrase per topic.
inline std::vector<RankedKeyphrase> topicrank(const std::vector<CandidatePhrase>& candidates,
                                              std::size_t k,
                                              const TopicRankConfig& config = {}) {
  using namespace topic_detail;
  if (k < 1) throw std::invalid_argument("topicrank: k must be >= 1");
  if (candidates.empty()) return {};
  std::vector<Topic> topics = cluster_topics(candidates, config.similarity_threshold);

  WordGraph graph(false);
  for (std::size_t t = 0; t < topics.size(); ++t) graph.add_node("topic#" + std::to_string(t));
  for (std::size_t i = 0; i < topics.size(); ++i)
    for (std::size_t j = i + 1; j < topics.size(); ++j) {
      double weight = 0.0;
      for (std::size_t a : topics[i].members)
        for (std::size_t b : topics[j].members)
          weight += reciprocal_distance(candidates[a], candidates[b]);
      if (weight > 0.0)
        graph.add_edge(static_cast<int>(i), static_cast<int>(j), weight);
    }

  PageRankResult pr = pagerank(graph, config.pagerank);
  std::vector<RankedKeyphrase> scored;
  scored.reserve(topics.size());
  for (std::size_t t = 0; t < topics.size(); ++t)
    scored.push_back(make_ranked(candidates[topics[t].representative], pr.scores[t]));
  return take_top_k(std::move(scored), k);
}

}  // namespace kpe
