#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kpe/corpus.hpp"
#include "kpe/normalize.hpp"

namespace kpe {

namespace analysis_detail {

inline Theme theme_of(const AnnotatedPost& post, const std::string& canonical,
                      const NormalizationTable* table) {
  if (auto it = post.themes.find(canonical); it != post.themes.end())
    if (auto parsed = try_parse_theme(it->second)) return *parsed;
  return table ? assign_theme(canonical, *table) : Theme::Others;
}

inline std::set<std::string> gold_set(const AnnotatedPost& post) {
  std::set<std::string> out;
  for (const std::string& g : post.gold) {
    std::string c = to_lower(trim(g));
    if (!c.empty()) out.insert(std::move(c));
  }
  return out;
}

}  // namespace analysis_detail

struct FrequencyRow {
  std::string phrase;
  std::size_t count = 0;  // posts containing the phrase, repeats count once
  Theme theme = Theme::Others;
};

struct FrequencyTable {
  std::vector<FrequencyRow> rows;  // count descending, phrase ascending on ties
};

/// Post-level frequency of normalized gold keyphrases, optionally restricted
/// to one theme.
inline FrequencyTable frequency(const std::vector<AnnotatedPost>& posts,
                                const NormalizationTable* table = nullptr,
                                std::optional<Theme> theme_filter = std::nullopt) {
  using namespace analysis_detail;
  std::map<std::string, FrequencyRow> tally;
  for (const AnnotatedPost& post : posts) {
    for (const std::string& canonical : gold_set(post)) {
      Theme theme = theme_of(post, canonical, table);
      if (theme_filter && theme != *theme_filter) continue;
      FrequencyRow& row = tally[canonical];
      row.phrase = canonical;
      row.theme = theme;
      ++row.count;
    }
  }
  FrequencyTable result;
  for (auto& [phrase, row] : tally) {
    (void)phrase;
    result.rows.push_back(std::move(row));
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.phrase < b.phrase;
  });
  return result;
}

/// Symmetric post-level co-presence counts over canonical phrase pairs.
class CooccurrenceMatrix {
 public:
  void add_post(const std::set<std::string>& canonicals) {
    for (const std::string& c : canonicals) vocabulary_.insert(c);
    for (auto a = canonicals.begin(); a != canonicals.end(); ++a) {
      auto b = a;
      for (++b; b != canonicals.end(); ++b) ++counts_[{*a, *b}];
    }
  }

  std::size_t count(const std::string& a, const std::string& b) const {
    if (a == b) return 0;
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

  const std::set<std::string>& vocabulary() const { return vocabulary_; }

  std::size_t total_pairs() const {
    std::size_t sum = 0;
    for (const auto& [pair, c] : counts_) {
      (void)pair;
      sum += c;
    }
    return sum;
  }

 private:
  std::set<std::string> vocabulary_;
  std::map<std::pair<std::string, std::string>, std::size_t> counts_;
};

inline CooccurrenceMatrix cooccurrence(const std::vector<AnnotatedPost>& posts) {
  CooccurrenceMatrix m;
  for (const AnnotatedPost& post : posts) m.add_post(analysis_detail::gold_set(post));
  return m;
}

struct EngagementRow {
  std::string phrase;
  std::size_t occurrences = 0;  // posts containing the phrase
  double avg_comments = 0.0;
  double avg_upvotes = 0.0;
};

struct EngagementScores {
  std::vector<EngagementRow> rows;  // phrase ascending
};

/// Mean comment and upvote counts over the posts containing each canonical
/// phrase. Phrases whose posts are missing from the corpus are omitted.
inline EngagementScores engagement(const Corpus& corpus,
                                   const std::vector<AnnotatedPost>& posts) {
  std::map<std::string, const Post*> by_id;
  for (const Post& p : corpus.posts) by_id[p.id] = &p;

  struct Totals {
    long long comments = 0;
    long long upvotes = 0;
    std::size_t occurrences = 0;
  };
  std::map<std::string, Totals> tally;
  for (const AnnotatedPost& a : posts) {
    auto post = by_id.find(a.post_id);
    if (post == by_id.end()) continue;
    for (const std::string& canonical : analysis_detail::gold_set(a)) {
      Totals& t = tally[canonical];
      t.comments += post->second->num_comments;
      t.upvotes += post->second->score;
      ++t.occurrences;
    }
  }
  EngagementScores result;
  for (const auto& [phrase, t] : tally) {
    EngagementRow row;
    row.phrase = phrase;
    row.occurrences = t.occurrences;
    row.avg_comments = static_cast<double>(t.comments) / static_cast<double>(t.occurrences);
    row.avg_upvotes = static_cast<double>(t.upvotes) / static_cast<double>(t.occurrences);
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace kpe
