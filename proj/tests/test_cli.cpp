#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "kpe/io.hpp"
#include "kpe/metrics.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = KPE_CLI_PATH;
const fs::path kData = KPE_DATA_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("kpe_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

int run(const std::string& args) {
  std::string command = kCli + " " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

const fs::path kMiniCorpus = kData / "fixtures" / "mini_corpus.jsonl";
const fs::path kMiniGold = kData / "fixtures" / "mini_gold.jsonl";
const fs::path kTranscripts = kData / "fixtures" / "mini_transcripts.jsonl";
const fs::path kSeedTable = kData / "normalization" / "seed.tsv";
const fs::path kBasicTemplate = kData / "prompts" / "basic.json";

}  // namespace

TEST_CASE("ingest filters the mini corpus deterministically") {
  TempDir tmp;
  auto out1 = tmp / "f1.jsonl";
  auto out2 = tmp / "f2.jsonl";
  REQUIRE(run("ingest --input " + kMiniCorpus.string() + " --output " + out1.string()) == 0);
  REQUIRE(run("ingest --input " + kMiniCorpus.string() + " --output " + out2.string()) == 0);
  std::string a = kpe::read_file(out1);
  CHECK(a == kpe::read_file(out2));
  // 3 of the 20 bundled posts are deleted/link-only/removed
  CHECK(std::count(a.begin(), a.end(), '\n') == 17);
}

TEST_CASE("ingest --dry-run writes nothing") {
  TempDir tmp;
  auto out = tmp / "x.jsonl";
  REQUIRE(run("ingest --input " + kMiniCorpus.string() + " --output " + out.string() +
              " --dry-run") == 0);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("ingest exits 2 on unreadable or unusable files") {
  CHECK(run("ingest --input /nonexistent.jsonl --output /tmp/x.jsonl") == 2);
  TempDir tmp;
  auto garbage = tmp / "garbage.jsonl";
  std::ofstream(garbage) << "not json\nstill not json\n";
  CHECK(run("ingest --input " + garbage.string() + " --output " + (tmp / "y.jsonl").string()) ==
        2);
}

TEST_CASE("rank produces at most k phrases per post and is deterministic") {
  TempDir tmp;
  auto filtered = tmp / "filtered.jsonl";
  REQUIRE(run("ingest --input " + kMiniCorpus.string() + " --output " + filtered.string()) == 0);
  auto preds1 = tmp / "p1.jsonl";
  auto preds2 = tmp / "p2.jsonl";
  REQUIRE(run("rank --input " + filtered.string() + " --method tfidf --k 5 --output " +
              preds1.string()) == 0);
  REQUIRE(run("rank --input " + filtered.string() + " --method tfidf --k 5 --output " +
              preds2.string()) == 0);
  CHECK(kpe::read_file(preds1) == kpe::read_file(preds2));
  std::size_t posts = 0;
  kpe::for_each_line(preds1, [&](std::size_t, const std::string& line) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["keyphrases"].size() <= 5);
    CHECK(j["method"] == "tfidf");
    ++posts;
  });
  CHECK(posts == 17);
}

TEST_CASE("rank --jobs does not change the output") {
  TempDir tmp;
  auto serial = tmp / "serial.jsonl";
  auto parallel = tmp / "parallel.jsonl";
  REQUIRE(run("rank --input " + kMiniCorpus.string() + " --method yake --k 8 --output " +
              serial.string()) == 0);
  REQUIRE(run("--jobs 4 rank --input " + kMiniCorpus.string() + " --method yake --k 8 --output " +
              parallel.string()) == 0);
  CHECK(kpe::read_file(serial) == kpe::read_file(parallel));
}

TEST_CASE("every ranking method runs on the mini corpus") {
  TempDir tmp;
  for (const std::string method :
       {"tfidf", "yake", "textrank", "topicrank", "positionrank", "multipartite"}) {
    auto out = tmp / (method + ".jsonl");
    INFO(method);
    CHECK(run("rank --input " + kMiniCorpus.string() + " --method " + method + " --k 10 --output " +
              out.string()) == 0);
    CHECK(fs::exists(out));
  }
}

TEST_CASE("rank rejects unknown methods and missing provider config") {
  CHECK(run("rank --input " + kMiniCorpus.string() +
            " --method bogus --k 5 --output /tmp/x.jsonl") == 2);
  CHECK(run("rank --input " + kMiniCorpus.string() +
            " --method embed --k 5 --output /tmp/x.jsonl") == 2);
}

TEST_CASE("rank embed works with a word-vector file") {
  TempDir tmp;
  auto vectors = tmp / "vectors.txt";
  {
    std::ofstream out(vectors);
    out << "6 3\n"
        << "suboxone 1 0 0\n"
        << "kratom 0 1 0\n"
        << "withdrawal 0 0 1\n"
        << "taper 1 1 0\n"
        << "anxiety 0 1 1\n"
        << "sleep 1 0 1\n";
  }
  auto preds = tmp / "embed.jsonl";
  REQUIRE(run("rank --input " + kMiniCorpus.string() + " --method embed --vectors " +
              vectors.string() + " --k 5 --output " + preds.string()) == 0);
  CHECK(fs::exists(preds));
}

TEST_CASE("llm replay over shipped transcripts is offline and deterministic") {
  TempDir tmp;
  auto filtered = tmp / "filtered.jsonl";
  REQUIRE(run("ingest --input " + kMiniCorpus.string() + " --output " + filtered.string()) == 0);
  auto out1 = tmp / "llm1.jsonl";
  auto out2 = tmp / "llm2.jsonl";
  std::string base = "llm --input " + filtered.string() + " --template " +
                     kBasicTemplate.string() + " --runs 5 --replay " + kTranscripts.string() +
                     " --output ";
  REQUIRE(run(base + out1.string()) == 0);
  REQUIRE(run(base + out2.string()) == 0);
  CHECK(kpe::read_file(out1) == kpe::read_file(out2));
  // 5 runs x 17 posts
  std::size_t lines = 0;
  std::set<int> runs;
  kpe::for_each_line(out1, [&](std::size_t, const std::string& line) {
    auto j = nlohmann::json::parse(line);
    runs.insert(j["run"].get<int>());
    ++lines;
  });
  CHECK(lines == 85);
  CHECK(runs.size() == 5);
}

TEST_CASE("llm without API key and without replay exits 2") {
  unsetenv("LLM_API_KEY");
  CHECK(run("llm --input " + kMiniCorpus.string() + " --template " + kBasicTemplate.string() +
            " --output /tmp/x.jsonl") == 2);
}

TEST_CASE("llm --combine unions prediction files per post") {
  TempDir tmp;
  auto a = tmp / "a.jsonl";
  auto b = tmp / "b.jsonl";
  {
    std::ofstream out(a);
    out << R"({"post_id":"p1","method":"llm:t1","run":0,"keyphrases":[{"phrase":"suboxone","score":0.0,"rank":1}]})"
        << "\n";
  }
  {
    std::ofstream out(b);
    out << R"({"post_id":"p1","method":"llm:t2","run":0,"keyphrases":[{"phrase":"anxiety","score":0.0,"rank":1},{"phrase":"suboxone","score":0.0,"rank":2}]})"
        << "\n";
  }
  auto merged = tmp / "merged.jsonl";
  REQUIRE(run("llm --combine " + a.string() + " " + b.string() + " --output " +
              merged.string()) == 0);
  std::string content = kpe::read_file(merged);
  auto j = nlohmann::json::parse(content.substr(0, content.find('\n')));
  CHECK(j["keyphrases"].size() == 2);
  CHECK(j["method"] == "llm:combined");
}

TEST_CASE("normalize rewrites predictions through the table") {
  TempDir tmp;
  auto preds = tmp / "preds.jsonl";
  {
    std::ofstream out(preds);
    out << R"({"post_id":"p1","method":"m","keyphrases":[{"phrase":"dope","score":2.0,"rank":1},{"phrase":"cravings","score":1.0,"rank":2},{"phrase":"expensive","score":0.5,"rank":3}]})"
        << "\n";
  }
  auto normalized = tmp / "normalized.jsonl";
  REQUIRE(run("normalize --input " + preds.string() + " --table " + kSeedTable.string() +
              " --output " + normalized.string()) == 0);
  std::string content = kpe::read_file(normalized);
  auto j = nlohmann::json::parse(content.substr(0, content.find('\n')));
  REQUIRE(j["keyphrases"].size() == 2);  // "expensive" dropped as Other
  CHECK(j["keyphrases"][0]["phrase"] == "heroin");
  CHECK(j["keyphrases"][1]["phrase"] == "craving");
}

TEST_CASE("eval scores predictions and honours gold mode") {
  TempDir tmp;
  auto preds = tmp / "preds.jsonl";
  {
    std::ofstream out(preds);
    out << R"({"post_id":"m01","method":"m","keyphrases":[{"phrase":"suboxone","score":3.0,"rank":1},{"phrase":"heroin","score":2.0,"rank":2},{"phrase":"florida","score":1.0,"rank":3}]})"
        << "\n";
  }
  auto report_union = tmp / "report_union.json";
  REQUIRE(run("eval --predictions " + preds.string() + " --gold " + kMiniGold.string() +
              " --k 3 --table " + kSeedTable.string() + " --output " + report_union.string()) ==
          0);
  auto j = nlohmann::json::parse(kpe::read_file(report_union));
  CHECK(j["gold_mode"] == "union");
  CHECK(j["metrics"].contains("@3"));
  double union_recall = j["metrics"]["@3"]["recall"].get<double>();

  auto report_inter = tmp / "report_inter.json";
  REQUIRE(run("eval --predictions " + preds.string() + " --gold " + kMiniGold.string() +
              " --k 3 --gold-mode intersection --table " + kSeedTable.string() + " --output " +
              report_inter.string()) == 0);
  auto ji = nlohmann::json::parse(kpe::read_file(report_inter));
  double inter_recall = ji["metrics"]["@3"]["recall"].get<double>();
  // m01 union gold is larger than the intersection gold, recall cannot drop
  CHECK(inter_recall >= union_recall);

  CHECK(run("eval --predictions " + preds.string() + " --gold /nonexistent.jsonl --k 3") == 2);
  CHECK(run("eval --predictions " + preds.string() + " --gold " + kMiniGold.string() +
            " --k 0") == 2);
}

TEST_CASE("eval report matches a direct metric computation") {
  TempDir tmp;
  auto preds = tmp / "preds.jsonl";
  {
    std::ofstream out(preds);
    out << R"({"post_id":"g1","method":"m","keyphrases":[{"phrase":"alpha","score":3.0,"rank":1},{"phrase":"beta","score":2.0,"rank":2},{"phrase":"noise","score":1.0,"rank":3}]})"
        << "\n"
        << R"({"post_id":"g2","method":"m","keyphrases":[{"phrase":"gamma","score":1.0,"rank":1}]})"
        << "\n";
  }
  auto gold = tmp / "gold.jsonl";
  {
    std::ofstream out(gold);
    out << R"({"post_id":"g1","annotators":[["alpha","beta","delta"]],"gold":[],"themes":{}})"
        << "\n"
        << R"({"post_id":"g2","annotators":[["gamma"]],"gold":[],"themes":{}})"
        << "\n";
  }
  auto report = tmp / "report.json";
  REQUIRE(run("eval --predictions " + preds.string() + " --gold " + gold.string() +
              " --k 2 --output " + report.string()) == 0);
  auto j = nlohmann::json::parse(kpe::read_file(report));

  // independent computation with the metric primitives
  kpe::MetricReport p1 = kpe::prf({"alpha", "beta"}, {"alpha", "beta", "delta"});
  kpe::MetricReport p2 = kpe::prf({"gamma"}, {"gamma"});
  CHECK(j["metrics"]["@2"]["precision"].get<double>() == (p1.precision + p2.precision) / 2.0);
  CHECK(j["metrics"]["@2"]["recall"].get<double>() == (p1.recall + p2.recall) / 2.0);
  CHECK(j["metrics"]["@2"]["f1"].get<double>() == (p1.f1 + p2.f1) / 2.0);
}

TEST_CASE("analyze agreement reproduces the documented average") {
  TempDir tmp;
  auto annotations = tmp / "two_posts.jsonl";
  {
    std::ofstream out(annotations);
    out << R"({"post_id":"p1","annotators":[["craving","heroin","clean","suboxone"],["suboxone","craving","heroin"]],"gold":[],"themes":{}})"
        << "\n"
        << R"({"post_id":"p2","annotators":[["suboxone","taper","withdrawal"],["suboxone","taper","withdrawal"]],"gold":[],"themes":{}})"
        << "\n";
  }
  auto report = tmp / "agreement.json";
  REQUIRE(run("analyze --what agreement --annotations " + annotations.string() + " --output " +
              report.string()) == 0);
  auto j = nlohmann::json::parse(kpe::read_file(report));
  CHECK(j["average"].get<double>() == 0.875);
  REQUIRE(j["per_post"].size() == 2);
  CHECK(j["per_post"][0]["ji"].get<double>() == 0.75);
  CHECK(j["per_post"][1]["ji"].get<double>() == 1.0);
}

TEST_CASE("analyze cooccur emits a symmetric square CSV") {
  TempDir tmp;
  auto csv = tmp / "cooccur.csv";
  REQUIRE(run("analyze --what cooccur --annotations " + kMiniGold.string() + " --output " +
              csv.string()) == 0);
  std::vector<std::vector<std::string>> rows;
  kpe::for_each_line(csv, [&](std::size_t, const std::string& line) {
    rows.push_back(kpe::split(line, ','));
  });
  REQUIRE(rows.size() >= 2);
  std::size_t n = rows[0].size();
  for (const auto& row : rows) REQUIRE(row.size() == n);
  REQUIRE(rows.size() == n);  // header row + one per phrase == header columns
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == rows[0][i]);  // labels match
    for (std::size_t j = 1; j < n; ++j) CHECK(rows[i][j] == rows[j][i]);
  }
}

TEST_CASE("analyze freq respects the theme filter") {
  TempDir tmp;
  auto all = tmp / "freq_all.json";
  auto to = tmp / "freq_to.json";
  REQUIRE(run("analyze --what freq --annotations " + kMiniGold.string() + " --table " +
              kSeedTable.string() + " --output " + all.string()) == 0);
  REQUIRE(run("analyze --what freq --annotations " + kMiniGold.string() + " --table " +
              kSeedTable.string() + " --theme \"Treatment Options\" --output " + to.string()) ==
          0);
  auto all_rows = nlohmann::json::parse(kpe::read_file(all));
  auto to_rows = nlohmann::json::parse(kpe::read_file(to));
  CHECK(to_rows.size() < all_rows.size());
  for (const auto& row : to_rows) CHECK(row["theme"] == "Treatment Options");
  // suboxone dominates the bundled corpus
  CHECK(to_rows[0]["phrase"] == "suboxone");
}

TEST_CASE("analyze engagement needs the corpus and averages counts") {
  TempDir tmp;
  auto out = tmp / "engagement.json";
  CHECK(run("analyze --what engagement --annotations " + kMiniGold.string() + " --output " +
            out.string()) == 2);
  REQUIRE(run("analyze --what engagement --annotations " + kMiniGold.string() + " --corpus " +
              kMiniCorpus.string() + " --output " + out.string()) == 0);
  auto rows = nlohmann::json::parse(kpe::read_file(out));
  bool found = false;
  for (const auto& row : rows) {
    if (row["phrase"] == "precipitated withdrawal") {
      found = true;
      // m05 (35 comments, 140 score) and m07 (27, 96)
      CHECK(row["occurrences"].get<int>() == 2);
      CHECK(row["avg_comments"].get<double>() == 31.0);
      CHECK(row["avg_upvotes"].get<double>() == 118.0);
    }
  }
  CHECK(found);
}

TEST_CASE("analyze theme-miss emits two-decimal relative errors") {
  TempDir tmp;
  auto preds = tmp / "preds.jsonl";
  {
    std::ofstream out(preds);
    out << R"({"post_id":"m01","method":"m","keyphrases":[{"phrase":"suboxone","score":1.0,"rank":1}]})"
        << "\n";
  }
  auto out_json = tmp / "miss.json";
  REQUIRE(run("analyze --what theme-miss --annotations " + kMiniGold.string() +
              " --predictions " + preds.string() + " --table " + kSeedTable.string() +
              " --output " + out_json.string()) == 0);
  auto rows = nlohmann::json::parse(kpe::read_file(out_json));
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    if (row.contains("relative_error_percent")) {
      std::string value = row["relative_error_percent"].get<std::string>();
      auto dot = value.find('.');
      REQUIRE(dot != std::string::npos);
      CHECK(value.size() - dot - 1 == 2);
    }
  }
}

TEST_CASE("unknown subcommands and bad flags exit 2") {
  CHECK(run("frobnicate") == 2);
  CHECK(run("analyze --what nonsense --annotations " + kMiniGold.string() +
            " --output /tmp/x.json") == 2);
}

TEST_CASE("--config supplies global options from a key=value file") {
  TempDir tmp;
  auto config = tmp / "kpe.conf";
  std::ofstream(config) << "jobs=3\nquiet=true\n";
  auto plain = tmp / "plain.jsonl";
  auto via_config = tmp / "config.jsonl";
  REQUIRE(run("rank --input " + kMiniCorpus.string() + " --method textrank --k 5 --output " +
              plain.string()) == 0);
  REQUIRE(run("--config " + config.string() + " rank --input " + kMiniCorpus.string() +
              " --method textrank --k 5 --output " + via_config.string()) == 0);
  CHECK(kpe::read_file(plain) == kpe::read_file(via_config));
}
