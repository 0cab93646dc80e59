#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpe/corpus.hpp"
#include "kpe/normalize.hpp"

namespace kpe {

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct AgreementReport {
  std::vector<double> per_post_ji;
  double average = 0.0;
};

struct ThemeErrorRow {
  Theme theme = Theme::Others;
  std::size_t gold_occurrences = 0;
  std::size_t missed = 0;
  std::optional<double> relative_error_percent;  // absent when gold == 0
};

struct ThemeErrorReport {
  std::vector<ThemeErrorRow> rows;  // one row per theme, fixed theme order
};

struct CountStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

using PhraseSet = std::set<std::string>;

/// |A ∩ B| / |A ∪ B| under exact string match; two empty sets agree perfectly.
inline double jaccard(const PhraseSet& a, const PhraseSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const std::string& x : a) inter += b.count(x);
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Exact-match precision/recall/F1. An empty prediction set scores 1.0
/// against an empty gold set and 0.0 otherwise; recall uses the dual rule.
inline MetricReport prf(const PhraseSet& pred, const PhraseSet& gold) {
  std::size_t inter = 0;
  for (const std::string& x : pred) inter += gold.count(x);
  MetricReport r;
  r.support = gold.size();
  r.precision = pred.empty() ? (gold.empty() ? 1.0 : 0.0)
                             : static_cast<double>(inter) / static_cast<double>(pred.size());
  r.recall = gold.empty() ? (pred.empty() ? 1.0 : 0.0)
                          : static_cast<double>(inter) / static_cast<double>(gold.size());
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

/// prf over the set formed by the first min(k, size) ranked phrases.
template <typename Ranked>
MetricReport f1_at_k(const std::vector<Ranked>& ranked, const PhraseSet& gold, std::size_t k) {
  if (k < 1) throw std::invalid_argument("f1_at_k: k must be >= 1");
  PhraseSet top;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) top.insert(ranked[i].phrase);
  return prf(top, gold);
}

inline MetricReport f1_at_k(const std::vector<std::string>& ranked, const PhraseSet& gold,
                            std::size_t k) {
  if (k < 1) throw std::invalid_argument("f1_at_k: k must be >= 1");
  PhraseSet top;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) top.insert(ranked[i]);
  return prf(top, gold);
}

inline PhraseSet to_phrase_set(const std::vector<std::string>& phrases) {
  return PhraseSet(phrases.begin(), phrases.end());
}

inline PhraseSet normalized_phrase_set(const std::vector<std::string>& phrases,
                                       const NormalizationTable* table, bool drop_other = true) {
  if (!table) {
    PhraseSet out;
    for (const std::string& p : phrases) {
      std::string t = to_lower(trim(p));
      if (!t.empty()) out.insert(std::move(t));
    }
    return out;
  }
  std::vector<std::string> n = normalize_set(phrases, *table, drop_other);
  return PhraseSet(n.begin(), n.end());
}

/// Per-post Jaccard agreement over the first two annotator sets, plus the
/// arithmetic mean. Posts with fewer than two annotator sets are skipped and
/// reported; at least one usable post is required.
inline AgreementReport avg_jaccard(const std::vector<AnnotatedPost>& posts,
                                   const NormalizationTable* table = nullptr,
                                   bool drop_other = true,
                                   std::vector<Diagnostic>* diagnostics = nullptr) {
  AgreementReport report;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const AnnotatedPost& p = posts[i];
    if (p.annotators.size() < 2) {
      if (diagnostics)
        diagnostics->push_back({i + 1, "post '" + p.post_id + "': fewer than two annotator sets"});
      continue;
    }
    PhraseSet a = normalized_phrase_set(p.annotators[0], table, drop_other);
    PhraseSet b = normalized_phrase_set(p.annotators[1], table, drop_other);
    report.per_post_ji.push_back(jaccard(a, b));
  }
  if (report.per_post_ji.empty())
    throw std::runtime_error("avg_jaccard: no post has two annotator sets");
  double sum = 0.0;
  for (double v : report.per_post_ji) sum += v;
  report.average = sum / static_cast<double>(report.per_post_ji.size());
  return report;
}

/// Per-theme count of gold keyphrase occurrences (post-level) and of the
/// occurrences absent from that post's predictions.
inline ThemeErrorReport theme_miss_analysis(
    const std::map<std::string, PhraseSet>& predictions_by_post,
    const std::vector<AnnotatedPost>& gold_posts, const NormalizationTable* table = nullptr) {
  std::map<Theme, std::pair<std::size_t, std::size_t>> tally;  // theme -> (gold, missed)
  for (Theme t : kAllThemes) tally[t] = {0, 0};
  for (const AnnotatedPost& post : gold_posts) {
    PhraseSet pred;
    if (auto it = predictions_by_post.find(post.post_id); it != predictions_by_post.end())
      pred = it->second;
    for (const std::string& canonical : post.gold) {
      std::string c = to_lower(trim(canonical));
      Theme theme = Theme::Others;
      if (auto it = post.themes.find(c); it != post.themes.end()) {
        if (auto parsed = try_parse_theme(it->second)) theme = *parsed;
      } else if (table) {
        theme = assign_theme(c, *table);
      }
      ++tally[theme].first;
      if (!pred.count(c)) ++tally[theme].second;
    }
  }
  ThemeErrorReport report;
  for (Theme t : kAllThemes) {
    ThemeErrorRow row;
    row.theme = t;
    row.gold_occurrences = tally[t].first;
    row.missed = tally[t].second;
    if (row.gold_occurrences > 0)
      row.relative_error_percent =
          100.0 * static_cast<double>(row.missed) / static_cast<double>(row.gold_occurrences);
    report.rows.push_back(row);
  }
  return report;
}

/// Mean and population standard deviation of per-post prediction counts.
inline CountStats prediction_count_stats(std::span<const std::size_t> counts) {
  if (counts.empty()) throw std::invalid_argument("prediction_count_stats: no counts");
  double mean = 0.0;
  for (std::size_t c : counts) mean += static_cast<double>(c);
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (std::size_t c : counts) {
    double d = static_cast<double>(c) - mean;
    var += d * d;
  }
  var /= static_cast<double>(counts.size());
  return {mean, std::sqrt(var)};
}

}  // namespace kpe
