#include "kpe/corpus.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

using kpe::Corpus;
using kpe::Diagnostic;
using kpe::Post;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_corpus reads valid JSONL") {
  auto path = write_temp("kpe_corpus_ok.jsonl",
                         R"({"id":"p1","title":"t1","body":"b1","created_utc":1,"num_comments":2,"score":3})"
                         "\n"
                         R"({"id":"p2","title":"t2","body":"b2","created_utc":4,"num_comments":5,"score":6,"removed":true})"
                         "\n");
  std::vector<Diagnostic> diags;
  Corpus c = kpe::load_corpus(path, &diags);
  CHECK(diags.empty());
  REQUIRE(c.posts.size() == 2);
  CHECK(c.posts[0].id == "p1");
  CHECK(c.posts[1].removed);
  std::filesystem::remove(path);
}

TEST_CASE("load_corpus skips malformed lines with diagnostics") {
  auto path = write_temp("kpe_corpus_bad.jsonl",
                         R"({"id":"p1","title":"t","body":"b","created_utc":1,"num_comments":0,"score":0})"
                         "\nnot json at all\n"
                         R"({"id":"p3","title":"t","body":"b","created_utc":1,"num_comments":0,"score":0})"
                         "\n");
  std::vector<Diagnostic> diags;
  Corpus c = kpe::load_corpus(path, &diags);
  CHECK(c.posts.size() == 2);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].line_no == 2);
  std::filesystem::remove(path);
}

TEST_CASE("load_corpus on an empty file yields an empty corpus") {
  auto path = write_temp("kpe_corpus_empty.jsonl", "");
  std::vector<Diagnostic> diags;
  Corpus c = kpe::load_corpus(path, &diags);
  CHECK(c.posts.empty());
  CHECK(diags.empty());
  std::filesystem::remove(path);
}

TEST_CASE("load_corpus rejects duplicates and negative comment counts") {
  auto path = write_temp("kpe_corpus_dup.jsonl",
                         R"({"id":"p1","title":"t","body":"b","created_utc":1,"num_comments":0,"score":0})"
                         "\n"
                         R"({"id":"p1","title":"t2","body":"b2","created_utc":1,"num_comments":0,"score":0})"
                         "\n"
                         R"({"id":"p2","title":"t","body":"b","created_utc":1,"num_comments":-4,"score":0})"
                         "\n");
  std::vector<Diagnostic> diags;
  Corpus c = kpe::load_corpus(path, &diags);
  CHECK(c.posts.size() == 1);
  CHECK(diags.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("unreadable corpus file is fatal") {
  CHECK_THROWS(kpe::load_corpus("/nonexistent/nowhere.jsonl"));
}

TEST_CASE("save/load round-trip is the identity") {
  Corpus c;
  c.posts.push_back({"p1", "Tapering from 24mg", "Will I go through withdrawals?", 1600000000, 4,
                     10, false, false});
  c.posts.push_back({"p2", "", "body only", 1600000001, 0, -2, false, false});
  auto path = std::filesystem::temp_directory_path() / "kpe_corpus_rt.jsonl";
  kpe::save_corpus(c, path);
  Corpus back = kpe::load_corpus(path);
  back.source_label = c.source_label;  // label comes from the filename
  CHECK(back == c);
  // byte stability
  auto again = std::filesystem::temp_directory_path() / "kpe_corpus_rt2.jsonl";
  kpe::save_corpus(back, again);
  CHECK(kpe::read_file(path) == kpe::read_file(again));
  std::filesystem::remove(path);
  std::filesystem::remove(again);
}

TEST_CASE("filter_irrelevant drops deleted, removed, poll and link-only posts") {
  Corpus c;
  auto post = [](std::string id, std::string title, std::string body) {
    Post p;
    p.id = std::move(id);
    p.title = std::move(title);
    p.body = std::move(body);
    return p;
  };
  c.posts.push_back(post("keep", "getting on suboxone", "clean from dope for 9 months"));
  c.posts.push_back(post("deleted", "t", "[deleted]"));
  c.posts.push_back(post("deleted2", "t", "  [Removed] "));
  c.posts.push_back(post("url", "t", "https://example.com/x"));
  c.posts.push_back(post("urls", "t", "https://a.example www.b.example"));
  c.posts.push_back(post("empty", "", "   "));
  Post removed_flag = post("flag", "t", "b");
  removed_flag.removed = true;
  c.posts.push_back(removed_flag);
  Post poll = post("poll", "t", "b");
  poll.poll = true;
  c.posts.push_back(poll);
  c.posts.push_back(post("title-only", "just a title", ""));

  Corpus filtered = kpe::filter_irrelevant(c);
  REQUIRE(filtered.posts.size() == 2);
  CHECK(filtered.posts[0].id == "keep");
  CHECK(filtered.posts[1].id == "title-only");

  // idempotent and never grows
  Corpus twice = kpe::filter_irrelevant(filtered);
  CHECK(twice == filtered);
  CHECK(filtered.posts.size() <= c.posts.size());
}

TEST_CASE("document_text joins title and body") {
  Post p;
  p.title = "a";
  p.body = "b";
  CHECK(kpe::document_text(p) == "a\nb");
  p.title = "";
  CHECK(kpe::document_text(p) == "\nb");
  CHECK(kpe::document_text(p) == kpe::document_text(p));
}

TEST_CASE("annotations load with annotator sets, gold and themes") {
  auto path = write_temp(
      "kpe_ann.jsonl",
      R"({"post_id":"p1","annotators":[["craving","heroin","clean","suboxone"],["suboxone","craving","heroin"]],"gold":["craving","heroin","suboxone"],"themes":{"craving":"Psychophysical Effects"}})"
      "\n");
  std::vector<Diagnostic> diags;
  auto annotations = kpe::load_annotations(path, &diags);
  CHECK(diags.empty());
  REQUIRE(annotations.size() == 1);
  CHECK(annotations[0].annotators.size() == 2);
  CHECK(annotations[0].annotators[0].size() == 4);
  CHECK(annotations[0].gold.size() == 3);
  CHECK(annotations[0].themes.at("craving") == "Psychophysical Effects");
  std::filesystem::remove(path);
}
