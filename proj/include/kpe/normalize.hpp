#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kpe/io.hpp"
#include "kpe/stem.hpp"

namespace kpe {

enum class Theme {
  TreatmentOptions,
  SubstanceDependencyRecovery,
  MedicalHistory,
  PsychophysicalEffects,
  Others,
};

inline constexpr Theme kAllThemes[] = {Theme::TreatmentOptions, Theme::SubstanceDependencyRecovery,
                                       Theme::MedicalHistory, Theme::PsychophysicalEffects,
                                       Theme::Others};

inline std::string_view theme_name(Theme t) {
  switch (t) {
    case Theme::TreatmentOptions: return "Treatment Options";
    case Theme::SubstanceDependencyRecovery: return "Substance Dependency & Recovery";
    case Theme::MedicalHistory: return "Medical History";
    case Theme::PsychophysicalEffects: return "Psychophysical Effects";
    case Theme::Others: return "Others";
  }
  return "Others";
}

inline std::optional<Theme> try_parse_theme(std::string_view s) {
  std::string key;
  for (char c : s)
    if (c != ' ' && c != '&' && c != '_' && c != '-') key += static_cast<char>(std::tolower(c));
  if (key == "treatmentoptions") return Theme::TreatmentOptions;
  if (key == "substancedependencyrecovery") return Theme::SubstanceDependencyRecovery;
  if (key == "medicalhistory") return Theme::MedicalHistory;
  if (key == "psychophysicaleffects") return Theme::PsychophysicalEffects;
  if (key == "others" || key == "other") return Theme::Others;
  return std::nullopt;
}

inline Theme parse_theme(std::string_view s) {
  if (auto t = try_parse_theme(s)) return *t;
  throw std::runtime_error("unknown theme: " + std::string(s));
}

struct Normalized {
  std::string canonical;
  bool is_other = false;
};

/// Variant-to-canonical phrase table plus theme assignments. Canonicals are
/// fixed points: chains (a->b, b->c) and conflicting duplicates are load
/// errors. Unigram canonicals additionally induce a stem group, so inflected
/// variants collapse onto the canonical without an explicit row.
class NormalizationTable {
 public:
  NormalizationTable() = default;

  /// Rows are (kind, arg1, arg2): map variant canonical | other phrase |
  /// theme canonical theme-name. Line numbers are kept for error reporting.
  void add_map(std::string variant, std::string canonical, std::size_t line_no = 0) {
    variant = to_lower(trim(variant));
    canonical = to_lower(trim(canonical));
    auto [it, inserted] = semantic_map_.emplace(variant, canonical);
    if (!inserted && it->second != canonical)
      throw std::runtime_error("line " + std::to_string(line_no) + ": variant '" + variant +
                               "' already maps to '" + it->second + "'");
    row_of_[variant] = line_no;
  }
  void add_other(std::string phrase, std::size_t line_no = 0) {
    other_set_.insert(to_lower(trim(phrase)));
    (void)line_no;
  }
  void add_theme(std::string canonical, Theme theme, std::size_t line_no = 0) {
    canonical = to_lower(trim(canonical));
    auto [it, inserted] = theme_map_.emplace(canonical, theme);
    if (!inserted && it->second != theme)
      throw std::runtime_error("line " + std::to_string(line_no) + ": canonical '" + canonical +
                               "' already assigned theme '" + std::string(theme_name(it->second)) +
                               "'");
  }

  /// Checks the table invariants and builds the stem groups. Must be called
  /// once after all rows are added; throws listing every violation.
  void finalize() {
    std::vector<std::string> violations;
    for (const auto& [variant, canonical] : semantic_map_) {
      auto chained = semantic_map_.find(canonical);
      if (chained != semantic_map_.end() && chained->second != canonical)
        violations.push_back("canonical '" + canonical + "' (row " + row_text(variant) +
                             ") is itself mapped by row " + row_text(canonical) +
                             "; canonicals must be fixed points");
    }
    for (const auto& [canonical, theme] : theme_map_) {
      (void)theme;
      if (other_set_.count(canonical))
        violations.push_back("'" + canonical + "' is both a theme canonical and in the Other set");
      auto mapped = semantic_map_.find(canonical);
      if (mapped != semantic_map_.end() && mapped->second != canonical)
        violations.push_back("theme canonical '" + canonical + "' is remapped by row " +
                             row_text(canonical) + "; canonicals must be fixed points");
    }
    for (const auto& [variant, canonical] : semantic_map_) {
      (void)variant;
      if (!other_set_.count(canonical) && !theme_map_.count(canonical))
        violations.push_back("canonical '" + canonical + "' has no theme row (and is not Other)");
    }
    stem_map_.clear();
    auto add_stem_group = [&](const std::string& canonical) {
      if (canonical.find(' ') != std::string::npos) return;  // unigrams only
      std::string s = stem(canonical);
      auto [it, inserted] = stem_map_.emplace(s, canonical);
      if (!inserted && it->second != canonical)
        violations.push_back("canonicals '" + it->second + "' and '" + canonical +
                             "' share the stem '" + s + "'");
    };
    for (const auto& [c, t] : theme_map_) {
      (void)t;
      add_stem_group(c);
    }
    for (const auto& [v, c] : semantic_map_) {
      (void)v;
      add_stem_group(c);
    }
    if (!violations.empty()) {
      std::string msg = "normalization table invalid:";
      for (const std::string& v : violations) msg += "\n  " + v;
      throw std::runtime_error(msg);
    }
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }
  const std::unordered_map<std::string, std::string>& semantic_map() const { return semantic_map_; }
  const std::unordered_set<std::string>& other_set() const { return other_set_; }
  const std::unordered_map<std::string, Theme>& theme_map() const { return theme_map_; }
  const std::unordered_map<std::string, std::string>& stem_map() const { return stem_map_; }

 private:
  std::string row_text(const std::string& variant) const {
    auto it = row_of_.find(variant);
    return it == row_of_.end() ? "?" : std::to_string(it->second);
  }

  std::unordered_map<std::string, std::string> semantic_map_;
  std::unordered_set<std::string> other_set_;
  std::unordered_map<std::string, Theme> theme_map_;
  std::unordered_map<std::string, std::string> stem_map_;  // stem -> canonical unigram
  std::unordered_map<std::string, std::size_t> row_of_;
  bool finalized_ = false;
};

/// Lowercase/trim, exact semantic lookup, then per-word stem-group lookup,
/// then one more exact lookup, identity otherwise. Exact mapping wins over
/// stemming so multi-word phrases are never torn apart word-by-word.
inline Normalized normalize_phrase(std::string_view phrase, const NormalizationTable& table) {
  std::string p = to_lower(trim(phrase));
  auto finish = [&](std::string canonical) {
    bool other = table.other_set().count(canonical) > 0;
    return Normalized{std::move(canonical), other};
  };
  if (auto it = table.semantic_map().find(p); it != table.semantic_map().end())
    return finish(it->second);
  std::string rebuilt;
  for (const std::string& word : split(p, ' ')) {
    if (word.empty()) continue;
    if (!rebuilt.empty()) rebuilt += ' ';
    auto hit = table.stem_map().find(stem(word));
    rebuilt += hit != table.stem_map().end() ? hit->second : word;
  }
  if (auto it = table.semantic_map().find(rebuilt); it != table.semantic_map().end())
    return finish(it->second);
  return finish(std::move(rebuilt));
}

/// Maps every phrase, optionally drops Other-category results, deduplicates
/// preserving first-occurrence order.
inline std::vector<std::string> normalize_set(const std::vector<std::string>& phrases,
                                              const NormalizationTable& table,
                                              bool drop_other = true) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const std::string& phrase : phrases) {
    Normalized n = normalize_phrase(phrase, table);
    if (n.canonical.empty()) continue;
    if (drop_other && n.is_other) continue;
    if (seen.insert(n.canonical).second) out.push_back(std::move(n.canonical));
  }
  return out;
}

/// Theme of a canonical phrase; anything the table does not know is Others.
inline Theme assign_theme(std::string_view canonical, const NormalizationTable& table) {
  auto it = table.theme_map().find(to_lower(trim(canonical)));
  return it == table.theme_map().end() ? Theme::Others : it->second;
}

/// Loads a table from TSV rows: kind<TAB>arg1[<TAB>arg2], kind in
/// {map, other, theme}; '#' starts a comment. Validation failures throw with
/// the offending line numbers.
inline NormalizationTable load_table(const std::filesystem::path& path) {
  NormalizationTable table;
  for_each_line(path, [&](std::size_t line_no, const std::string& raw) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    std::vector<std::string> cols = split(std::string(line), '\t');
    auto need = [&](std::size_t n) {
      if (cols.size() < n)
        throw std::runtime_error("table line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(n) + " columns");
    };
    if (cols[0] == "map") {
      need(3);
      table.add_map(cols[1], cols[2], line_no);
    } else if (cols[0] == "other") {
      need(2);
      table.add_other(cols[1], line_no);
    } else if (cols[0] == "theme") {
      need(3);
      if (!try_parse_theme(cols[2]))
        throw std::runtime_error("table line " + std::to_string(line_no) + ": unknown theme '" +
                                 cols[2] + "'");
      table.add_theme(cols[1], parse_theme(cols[2]), line_no);
    } else {
      throw std::runtime_error("table line " + std::to_string(line_no) + ": unknown kind '" +
                               cols[0] + "'");
    }
  });
  table.finalize();
  return table;
}

}  // namespace kpe
