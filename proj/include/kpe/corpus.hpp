#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "kpe/io.hpp"

namespace kpe {

struct Post {
  std::string id;
  std::string title;
  std::string body;
  std::int64_t created_utc = 0;
  int num_comments = 0;
  int score = 0;  // upvotes
  bool removed = false;
  bool poll = false;

  bool operator==(const Post&) const = default;
};

struct Corpus {
  std::vector<Post> posts;
  std::string source_label;

  bool operator==(const Corpus&) const = default;
};

/// One annotated sample: per-annotator surface keyphrase sets, the normalized
/// gold set, and the theme of each gold canonical.
struct AnnotatedPost {
  std::string post_id;
  std::vector<std::vector<std::string>> annotators;
  std::vector<std::string> gold;
  std::map<std::string, std::string> themes;  // canonical -> theme name
};

/// Title and body joined as one document, title first.
inline std::string document_text(const Post& p) { return p.title + "\n" + p.body; }

namespace corpus_detail {

inline bool looks_like_url(std::string_view tok) {
  return tok.substr(0, 7) == "http://" || tok.substr(0, 8) == "https://" ||
         tok.substr(0, 4) == "www.";
}

}  // namespace corpus_detail

/// True for bodies that are platform deletion markers: "[deleted]" or
/// "[removed]", case-insensitive, surrounding whitespace ignored.
inline bool is_deletion_marker(std::string_view body) {
  std::string t = to_lower(trim(body));
  return t == "[deleted]" || t == "[removed]";
}

/// True when the body contains nothing but URLs (or nothing at all).
inline bool is_url_only(std::string_view body) {
  bool any = false;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
    std::size_t start = i;
    while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
    if (i == start) break;
    any = true;
    if (!corpus_detail::looks_like_url(body.substr(start, i - start))) return false;
  }
  return any;
}

/// Reads a JSONL corpus. Records that fail to parse or violate the schema are
/// skipped and reported through diagnostics; unreadable files throw.
inline Corpus load_corpus(const std::filesystem::path& path,
                          std::vector<Diagnostic>* diagnostics = nullptr) {
  Corpus corpus;
  corpus.source_label = path.filename().string();
  std::unordered_set<std::string> seen_ids;
  auto report = [&](std::size_t line_no, std::string msg) {
    if (diagnostics) diagnostics->push_back({line_no, std::move(msg)});
  };
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      report(line_no, "malformed JSON record");
      return;
    }
    Post p;
    try {
      p.id = j.at("id").get<std::string>();
      p.title = j.at("title").get<std::string>();
      p.body = j.at("body").get<std::string>();
      p.created_utc = j.at("created_utc").get<std::int64_t>();
      p.num_comments = j.at("num_comments").get<int>();
      p.score = j.at("score").get<int>();
      p.removed = j.value("removed", false);
      p.poll = j.value("poll", false);
    } catch (const nlohmann::json::exception& e) {
      report(line_no, std::string("bad record: ") + e.what());
      return;
    }
    if (p.id.empty()) {
      report(line_no, "empty id");
      return;
    }
    if (p.num_comments < 0) {
      report(line_no, "negative num_comments");
      return;
    }
    if (!seen_ids.insert(p.id).second) {
      report(line_no, "duplicate id '" + p.id + "'");
      return;
    }
    corpus.posts.push_back(std::move(p));
  });
  return corpus;
}

/// Writes one compact JSON object per line with a fixed key order, so that
/// load_corpus(save_corpus(c)) == c and repeated saves are byte-identical.
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const Post& p : corpus.posts) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["body"] = p.body;
    j["created_utc"] = p.created_utc;
    j["num_comments"] = p.num_comments;
    j["score"] = p.score;
    j["removed"] = p.removed;
    if (p.poll) j["poll"] = true;
    out << j.dump() << '\n';
  }
}

/// Drops deleted, removed-flagged, poll and link-only posts, preserving order.
/// Idempotent.
inline Corpus filter_irrelevant(const Corpus& corpus) {
  Corpus out;
  out.source_label = corpus.source_label;
  for (const Post& p : corpus.posts) {
    if (p.removed || p.poll) continue;
    if (is_deletion_marker(p.body)) continue;
    if (is_url_only(p.body)) continue;           // links with no text
    if (trim(p.body).empty() && trim(p.title).empty()) continue;
    out.posts.push_back(p);
  }
  return out;
}

/// Reads annotation JSONL: post_id, annotators (array of arrays of strings),
/// gold (array of strings), themes (object canonical -> theme name).
inline std::vector<AnnotatedPost> load_annotations(const std::filesystem::path& path,
                                                   std::vector<Diagnostic>* diagnostics = nullptr) {
  std::vector<AnnotatedPost> result;
  auto report = [&](std::size_t line_no, std::string msg) {
    if (diagnostics) diagnostics->push_back({line_no, std::move(msg)});
  };
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      report(line_no, "malformed JSON record");
      return;
    }
    AnnotatedPost a;
    try {
      a.post_id = j.at("post_id").get<std::string>();
      const nlohmann::json annotators = j.value("annotators", nlohmann::json::array());
      for (const auto& set : annotators)
        a.annotators.push_back(set.get<std::vector<std::string>>());
      a.gold = j.value("gold", nlohmann::json::array()).get<std::vector<std::string>>();
      const nlohmann::json themes = j.value("themes", nlohmann::json::object());
      for (const auto& [canonical, theme] : themes.items())
        a.themes[canonical] = theme.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      report(line_no, std::string("bad record: ") + e.what());
      return;
    }
    if (a.post_id.empty()) {
      report(line_no, "empty post_id");
      return;
    }
    result.push_back(std::move(a));
  });
  return result;
}

inline void save_annotations(const std::vector<AnnotatedPost>& annotations,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const AnnotatedPost& a : annotations) {
    nlohmann::ordered_json j;
    j["post_id"] = a.post_id;
    j["annotators"] = a.annotators;
    j["gold"] = a.gold;
    j["themes"] = a.themes;
    out << j.dump() << '\n';
  }
}

}  // namespace kpe
