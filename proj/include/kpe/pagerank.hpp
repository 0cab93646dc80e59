#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kpe {

/// Weighted graph over indexed, labelled nodes. Undirected unless stated;
/// undirected edges are stored in both directions. Self-loops are rejected
/// and weights must be positive.
class WordGraph {
 public:
  explicit WordGraph(bool directed = false) : directed_(directed) {}

  bool directed() const { return directed_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  int add_node(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(labels_.size());
    index_.emplace(label, id);
    labels_.push_back(label);
    out_.emplace_back();
    return id;
  }

  int node_id(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
  }

  void add_edge(int from, int to, double weight) {
    if (from == to) throw std::invalid_argument("WordGraph: self-loops are not allowed");
    if (!(weight > 0.0)) throw std::invalid_argument("WordGraph: edge weight must be positive");
    bump(from, to, weight);
    if (!directed_) bump(to, from, weight);
  }

  double edge_weight(int from, int to) const {
    for (const auto& [target, weight] : out_[from])
      if (target == to) return weight;
    return 0.0;
  }

  const std::vector<std::pair<int, double>>& out_edges(int node) const { return out_[node]; }

  double out_weight(int node) const {
    double sum = 0.0;
    for (const auto& [target, weight] : out_[node]) {
      (void)target;
      sum += weight;
    }
    return sum;
  }

 private:
  void bump(int from, int to, double weight) {
    for (auto& [target, w] : out_[from]) {
      if (target == to) {
        w += weight;
        return;
      }
    }
    out_[from].emplace_back(to, weight);
  }

  bool directed_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<std::pair<int, double>>> out_;
};

struct PageRankConfig {
  double damping = 0.85;
  double tolerance = 1e-8;
  int max_iter = 1000;
  std::vector<double> bias;  // optional restart distribution, must sum to 1
};

struct PageRankResult {
  std::vector<double> scores;
  int iterations = 0;
  bool converged = false;
};

/// Fixed point of s = (1 - d) * bias + d * W_norm * s, where W_norm is the
/// out-weight-normalized transition matrix and the mass of dangling nodes is
/// redistributed along the bias. Scores sum to 1. Hitting max_iter is
/// reported via `converged`, not fatal; the partial scores are returned.
inline PageRankResult pagerank(const WordGraph& graph, const PageRankConfig& config = {}) {
  const std::size_t n = graph.size();
  if (n == 0) throw std::invalid_argument("pagerank: empty graph");
  if (!(config.damping > 0.0 && config.damping < 1.0))
    throw std::invalid_argument("pagerank: damping must lie in (0, 1)");

  std::vector<double> bias = config.bias;
  if (bias.empty()) {
    bias.assign(n, 1.0 / static_cast<double>(n));
  } else {
    if (bias.size() != n) throw std::invalid_argument("pagerank: bias size mismatch");
    double sum = 0.0;
    for (double b : bias) {
      if (b < 0.0) throw std::invalid_argument("pagerank: bias entries must be non-negative");
      sum += b;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("pagerank: bias must sum to 1");
  }

  std::vector<double> out_weight(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) out_weight[v] = graph.out_weight(static_cast<int>(v));

  std::vector<double> scores(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  PageRankResult result;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v)
      if (out_weight[v] == 0.0) dangling += scores[v];
    for (std::size_t v = 0; v < n; ++v)
      next[v] = (1.0 - config.damping) * bias[v] + config.damping * dangling * bias[v];
    for (std::size_t v = 0; v < n; ++v) {
      if (out_weight[v] == 0.0) continue;
      double share = config.damping * scores[v] / out_weight[v];
      for (const auto& [target, weight] : graph.out_edges(static_cast<int>(v)))
        next[target] += share * weight;
    }
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) delta = std::max(delta, std::abs(next[v] - scores[v]));
    scores.swap(next);
    result.iterations = iter;
    if (delta < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(scores);
  return result;
}

}  // namespace kpe
