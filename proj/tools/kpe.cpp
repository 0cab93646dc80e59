// kpe — keyphrase extraction and analysis toolkit for social-media post
// corpora. Subcommands: ingest, rank, llm, normalize, eval, analyze.
// Exit codes: 0 success, 1 internal error, 2 usage/validation error.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kpe/analysis.hpp"
#include "kpe/corpus.hpp"
#include "kpe/embed.hpp"
#include "kpe/llm.hpp"
#include "kpe/metrics.hpp"
#include "kpe/multipartite.hpp"
#include "kpe/normalize.hpp"
#include "kpe/tagger.hpp"
#include "kpe/textrank.hpp"
#include "kpe/tfidf.hpp"
#include "kpe/topicrank.hpp"
#include "kpe/yake.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  int jobs = 1;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void print_diagnostics(const std::vector<kpe::Diagnostic>& diagnostics, const std::string& what) {
  for (const auto& d : diagnostics)
    std::cerr << what << " line " << d.line_no << ": " << d.message << "\n";
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write output file: " + path.string());
  return out;
}

kpe::Corpus load_corpus_checked(const std::filesystem::path& path, bool quiet) {
  std::vector<kpe::Diagnostic> diagnostics;
  kpe::Corpus corpus;
  try {
    corpus = kpe::load_corpus(path, &diagnostics);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!quiet) print_diagnostics(diagnostics, path.string());
  if (corpus.posts.empty() && !diagnostics.empty())
    throw UsageError(path.string() + ": no parseable records");
  return corpus;
}

std::vector<kpe::AnnotatedPost> load_annotations_checked(const std::filesystem::path& path,
                                                         bool quiet) {
  std::vector<kpe::Diagnostic> diagnostics;
  std::vector<kpe::AnnotatedPost> annotations;
  try {
    annotations = kpe::load_annotations(path, &diagnostics);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!quiet) print_diagnostics(diagnostics, path.string());
  if (annotations.empty()) throw UsageError(path.string() + ": no annotation records");
  return annotations;
}

kpe::NormalizationTable load_table_checked(const std::filesystem::path& path) {
  try {
    return kpe::load_table(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// predictions JSONL: {post_id, method, run?, keyphrases:[{phrase,score,rank}]}

struct PredictionRecord {
  std::string post_id;
  std::string method;
  int run = 0;
  std::vector<kpe::RankedKeyphrase> keyphrases;
};

void write_predictions(std::ostream& out, const PredictionRecord& record, bool with_run) {
  nlohmann::ordered_json j;
  j["post_id"] = record.post_id;
  j["method"] = record.method;
  if (with_run) j["run"] = record.run;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& k : record.keyphrases) {
    nlohmann::ordered_json item;
    item["phrase"] = k.phrase;
    item["score"] = k.score;
    item["rank"] = k.rank;
    list.push_back(std::move(item));
  }
  j["keyphrases"] = std::move(list);
  out << j.dump() << '\n';
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> records;
  kpe::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (kpe::trim(line).empty()) return;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
    PredictionRecord r;
    r.post_id = j.at("post_id").get<std::string>();
    r.method = j.value("method", "unknown");
    r.run = j.value("run", 0);
    for (const auto& k : j.value("keyphrases", nlohmann::json::array())) {
      kpe::RankedKeyphrase rk;
      rk.phrase = k.at("phrase").get<std::string>();
      rk.score = k.value("score", 0.0);
      rk.rank = k.value("rank", static_cast<int>(r.keyphrases.size()) + 1);
      r.keyphrases.push_back(std::move(rk));
    }
    records.push_back(std::move(r));
  });
  if (records.empty()) throw UsageError(path.string() + ": no prediction records");
  return records;
}

// ---------------------------------------------------------------------------
// ingest

int cmd_ingest(const GlobalOptions& global, const std::string& input, const std::string& output,
               bool dry_run) {
  kpe::Corpus raw = load_corpus_checked(input, global.quiet);
  kpe::Corpus filtered = kpe::filter_irrelevant(raw);
  if (dry_run) {
    std::cout << "loaded " << raw.posts.size() << " posts, kept " << filtered.posts.size()
              << ", dropped " << raw.posts.size() - filtered.posts.size() << "\n";
    return 0;
  }
  if (output.empty()) throw UsageError("ingest: --output is required unless --dry-run");
  kpe::save_corpus(filtered, output);
  if (!global.quiet)
    std::cout << "kept " << filtered.posts.size() << " of " << raw.posts.size() << " posts -> "
              << output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rank

struct RankOptions {
  std::string input, output, method;
  std::size_t k = 10;
  std::string df_corpus;        // tfidf: corpus for document frequencies
  std::string vectors;          // embed: word-vector file
  std::string embed_endpoint;   // embed: HTTP provider
  std::size_t window = 0;       // 0 = method default
};

int cmd_rank(const GlobalOptions& global, const RankOptions& options) {
  static const std::set<std::string> methods = {"tfidf",        "yake",         "textrank",
                                                "topicrank",    "positionrank", "multipartite",
                                                "embed"};
  if (!methods.count(options.method)) throw UsageError("unknown method: " + options.method);
  if (options.k < 1) throw UsageError("--k must be >= 1");

  kpe::Corpus corpus = load_corpus_checked(options.input, global.quiet);
  kpe::RuleTagger tagger;

  kpe::DocumentFrequencyIndex df_index;
  if (options.method == "tfidf") {
    kpe::Corpus df_source =
        options.df_corpus.empty() ? corpus : load_corpus_checked(options.df_corpus, global.quiet);
    if (df_source.posts.empty()) throw UsageError("tfidf: document-frequency corpus is empty");
    df_index = kpe::build_df_index(
        df_source, [&](const kpe::Post& p) { return kpe::default_candidates(p, tagger); });
  }

  std::unique_ptr<kpe::EmbeddingProvider> provider;
  if (options.method == "embed") {
    if (!options.vectors.empty()) {
      std::vector<kpe::Diagnostic> diagnostics;
      provider = std::make_unique<kpe::FileVectorProvider>(options.vectors, &diagnostics);
      if (!global.quiet) print_diagnostics(diagnostics, options.vectors);
    } else if (!options.embed_endpoint.empty()) {
      kpe::HttpProviderConfig config;
      config.endpoint = options.embed_endpoint;
      provider = std::make_unique<kpe::HttpVectorProvider>(config);
    } else {
      throw UsageError("embed method needs --vectors or --embed-endpoint");
    }
  }

  auto rank_post = [&](const kpe::Post& post) {
    auto tokens = kpe::tokenize(kpe::document_text(post));
    tagger.tag(tokens);
    auto candidates = kpe::extract_candidates(tokens);
    PredictionRecord record;
    record.post_id = post.id;
    record.method = options.method;
    if (candidates.empty()) return record;
    if (options.method == "tfidf") {
      record.keyphrases = kpe::tfidf_rank(candidates, df_index, options.k);
    } else if (options.method == "yake") {
      kpe::YakeConfig config;
      if (options.window) config.window = options.window;
      record.keyphrases = kpe::yake_rank(tokens, candidates, options.k, config);
    } else if (options.method == "textrank" || options.method == "positionrank") {
      kpe::WordGraphConfig config;
      if (options.window) config.window = options.window;
      record.keyphrases = options.method == "textrank"
                              ? kpe::textrank(tokens, candidates, options.k, config)
                              : kpe::positionrank(tokens, candidates, options.k, config);
    } else if (options.method == "topicrank") {
      record.keyphrases = kpe::topicrank(candidates, options.k);
    } else if (options.method == "multipartite") {
      record.keyphrases = kpe::multipartiterank(candidates, options.k);
    } else {
      // a post the provider cannot embed yields an empty record, not a crash
      try {
        record.keyphrases =
            kpe::embed_rank(kpe::document_text(post), candidates, *provider, options.k);
      } catch (const std::exception& e) {
        if (!global.quiet) std::cerr << "post '" << post.id << "': " << e.what() << "\n";
        record.keyphrases.clear();
      }
    }
    return record;
  };

  std::vector<PredictionRecord> records(corpus.posts.size());
  const int jobs = std::max(1, global.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < corpus.posts.size(); ++i) records[i] = rank_post(corpus.posts[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < corpus.posts.size(); i = next.fetch_add(1)) {
          if (failed.load()) return;
          try {
            records[i] = rank_post(corpus.posts[i]);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(error_mutex);
            error = e.what();
            failed = true;
            return;
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failed) throw std::runtime_error(error);
  }

  std::ofstream out = open_output(options.output);
  for (const auto& record : records) write_predictions(out, record, /*with_run=*/false);
  if (!global.quiet)
    std::cout << "ranked " << records.size() << " posts with " << options.method << " -> "
              << options.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// llm

struct LlmOptions {
  std::string input, output, template_path;
  std::string replay;          // transcript file for offline replay
  std::string endpoint, model; // live mode
  std::string transcripts_out;
  int runs = 5;
  double temperature = 0.0;
  double rate_limit = 0.0;
  int concurrency = 4;
  std::vector<std::string> combine;  // prediction files to union instead of extracting
};

int cmd_llm(const GlobalOptions& global, const LlmOptions& options) {
  if (!options.combine.empty()) {
    // set-union merge of theme-specific prediction files, per post and run
    std::map<int, std::vector<kpe::ExtractionRun>> by_run;
    for (const std::string& path : options.combine) {
      std::map<int, kpe::ExtractionRun> runs_in_file;
      for (const PredictionRecord& r : load_predictions(path)) {
        kpe::ExtractionRun& run = runs_in_file[r.run];
        run.run_index = r.run;
        std::vector<std::string> phrases;
        for (const auto& k : r.keyphrases) phrases.push_back(k.phrase);
        run.predictions.emplace_back(r.post_id, std::move(phrases));
      }
      for (auto& [index, run] : runs_in_file) by_run[index].push_back(std::move(run));
    }
    std::ofstream out = open_output(options.output);
    for (auto& [index, runs] : by_run) {
      kpe::ExtractionRun combined;
      try {
        combined = kpe::combine_predictions(runs);
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
      for (const auto& [post_id, phrases] : combined.predictions) {
        PredictionRecord record;
        record.post_id = post_id;
        record.method = "llm:combined";
        record.run = index;
        for (std::size_t i = 0; i < phrases.size(); ++i) {
          kpe::RankedKeyphrase rk;
          rk.phrase = phrases[i];
          rk.rank = static_cast<int>(i) + 1;
          record.keyphrases.push_back(std::move(rk));
        }
        write_predictions(out, record, /*with_run=*/true);
      }
    }
    return 0;
  }

  if (options.input.empty() || options.template_path.empty())
    throw UsageError("llm: --input and --template are required");
  if (options.runs < 1) throw UsageError("llm: --runs must be >= 1");
  kpe::Corpus corpus = load_corpus_checked(options.input, global.quiet);
  kpe::PromptTemplate tmpl;
  try {
    tmpl = kpe::load_template(options.template_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  std::unique_ptr<kpe::LlmClient> client;
  if (!options.replay.empty()) {
    try {
      client = std::make_unique<kpe::LlmClient>(
          kpe::LlmClient::replay(kpe::TranscriptStore::load(options.replay)));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  } else {
    const char* key = std::getenv("LLM_API_KEY");
    if (!key || !*key)
      throw UsageError("llm: set LLM_API_KEY or use --replay for offline transcripts");
    if (options.endpoint.empty()) throw UsageError("llm: --endpoint is required for live runs");
    if (options.model.empty()) throw UsageError("llm: --model is required for live runs");
    kpe::LlmConfig config;
    config.endpoint = options.endpoint;
    config.model_id = options.model;
    config.temperature = options.temperature;
    config.n_runs = options.runs;
    config.rate_limit_rps = options.rate_limit;
    config.max_concurrency = options.concurrency;
    std::optional<std::filesystem::path> sink;
    if (!options.transcripts_out.empty()) sink = options.transcripts_out;
    client = std::make_unique<kpe::LlmClient>(kpe::LlmClient::live(config, sink));
  }

  auto runs = kpe::run_extraction(corpus.posts, tmpl, *client, options.runs, global.seed);

  std::ofstream out = open_output(options.output);
  for (const auto& run : runs) {
    for (const auto& [post_id, phrases] : run.predictions) {
      PredictionRecord record;
      record.post_id = post_id;
      record.method = "llm:" + tmpl.id;
      record.run = run.run_index;
      for (std::size_t i = 0; i < phrases.size(); ++i) {
        kpe::RankedKeyphrase rk;
        rk.phrase = phrases[i];
        rk.rank = static_cast<int>(i) + 1;
        record.keyphrases.push_back(std::move(rk));
      }
      write_predictions(out, record, /*with_run=*/true);
    }
  }
  if (!global.quiet)
    std::cout << "extracted " << options.runs << " run(s) over " << corpus.posts.size()
              << " posts -> " << options.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// normalize

int cmd_normalize(const GlobalOptions& global, const std::string& input, const std::string& table_path,
                  const std::string& output, bool keep_other) {
  kpe::NormalizationTable table = load_table_checked(table_path);
  std::ifstream probe(input);
  if (!probe) throw UsageError("cannot open input file: " + input);
  std::string first_line;
  std::getline(probe, first_line);
  probe.close();
  nlohmann::json first = nlohmann::json::parse(first_line, nullptr, false);
  if (first.is_discarded()) throw UsageError(input + ": not JSONL");

  std::ofstream out = open_output(output);
  bool drop_other = !keep_other;
  if (first.contains("keyphrases")) {
    for (PredictionRecord record : load_predictions(input)) {
      std::vector<kpe::RankedKeyphrase> kept;
      std::set<std::string> seen;
      for (auto& k : record.keyphrases) {
        kpe::Normalized n = kpe::normalize_phrase(k.phrase, table);
        if (drop_other && n.is_other) continue;
        if (!seen.insert(n.canonical).second) continue;
        k.phrase = n.canonical;
        k.rank = static_cast<int>(kept.size()) + 1;
        kept.push_back(std::move(k));
      }
      record.keyphrases = std::move(kept);
      write_predictions(out, record, /*with_run=*/true);
    }
  } else if (first.contains("annotators") || first.contains("gold")) {
    auto annotations = load_annotations_checked(input, global.quiet);
    for (kpe::AnnotatedPost& a : annotations) {
      for (auto& set : a.annotators) set = kpe::normalize_set(set, table, drop_other);
      a.gold = kpe::normalize_set(a.gold, table, drop_other);
      std::map<std::string, std::string> themes;
      for (const std::string& canonical : a.gold) {
        auto it = a.themes.find(canonical);
        themes[canonical] = it != a.themes.end()
                                ? it->second
                                : std::string(kpe::theme_name(kpe::assign_theme(canonical, table)));
      }
      a.themes = std::move(themes);
      nlohmann::ordered_json j;
      j["post_id"] = a.post_id;
      j["annotators"] = a.annotators;
      j["gold"] = a.gold;
      j["themes"] = a.themes;
      out << j.dump() << '\n';
    }
  } else {
    throw UsageError(input + ": unrecognized record layout (need predictions or annotations)");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string predictions, gold, output, table_path;
  std::vector<std::size_t> k_values = {5, 10, 15};
  std::string gold_mode = "union";
  bool drop_other = true;
};

kpe::PhraseSet derive_gold(const kpe::AnnotatedPost& post, const std::string& mode,
                           const kpe::NormalizationTable* table, bool drop_other) {
  std::vector<std::string> phrases;
  if (post.annotators.empty()) {
    phrases = post.gold;
  } else if (mode == "union") {
    for (const auto& set : post.annotators)
      phrases.insert(phrases.end(), set.begin(), set.end());
  } else {  // intersection over normalized annotator sets
    std::vector<kpe::PhraseSet> sets;
    for (const auto& raw : post.annotators)
      sets.push_back(kpe::normalized_phrase_set(raw, table, drop_other));
    kpe::PhraseSet common = sets.front();
    for (std::size_t i = 1; i < sets.size(); ++i) {
      kpe::PhraseSet keep;
      for (const std::string& p : common)
        if (sets[i].count(p)) keep.insert(p);
      common = std::move(keep);
    }
    return common;
  }
  return kpe::normalized_phrase_set(phrases, table, drop_other);
}

int cmd_eval(const GlobalOptions& global, const EvalOptions& options) {
  for (std::size_t k : options.k_values)
    if (k < 1) throw UsageError("eval: every k must be >= 1");
  if (options.gold_mode != "union" && options.gold_mode != "intersection")
    throw UsageError("eval: --gold-mode must be union or intersection");

  std::vector<PredictionRecord> predictions;
  try {
    predictions = load_predictions(options.predictions);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  auto annotations = load_annotations_checked(options.gold, global.quiet);

  std::optional<kpe::NormalizationTable> table;
  if (!options.table_path.empty()) table = load_table_checked(options.table_path);
  const kpe::NormalizationTable* table_ptr = table ? &*table : nullptr;

  std::map<std::string, kpe::PhraseSet> gold_by_post;
  for (const auto& a : annotations)
    gold_by_post[a.post_id] = derive_gold(a, options.gold_mode, table_ptr, options.drop_other);

  // group predictions by run, keep post order stable
  std::map<int, std::vector<const PredictionRecord*>> by_run;
  std::string method = predictions.front().method;
  for (const auto& r : predictions) by_run[r.run].push_back(&r);

  nlohmann::ordered_json report;
  report["method"] = method;
  report["gold_mode"] = options.gold_mode;
  report["normalized"] = table_ptr != nullptr;
  report["runs"] = by_run.size();
  nlohmann::ordered_json at_k = nlohmann::ordered_json::object();

  std::vector<std::pair<std::size_t, kpe::MetricReport>> table_rows;
  for (std::size_t k : options.k_values) {
    kpe::MetricReport mean;
    std::size_t runs_counted = 0;
    for (const auto& [run_index, records] : by_run) {
      (void)run_index;
      kpe::MetricReport run_report;
      std::size_t posts = 0;
      for (const PredictionRecord* record : records) {
        auto gold_it = gold_by_post.find(record->post_id);
        if (gold_it == gold_by_post.end()) continue;
        std::vector<std::string> phrases;
        for (const auto& kp : record->keyphrases) phrases.push_back(kp.phrase);
        std::vector<std::string> top(phrases.begin(),
                                     phrases.begin() + std::min(k, phrases.size()));
        kpe::PhraseSet pred = kpe::normalized_phrase_set(top, table_ptr, options.drop_other);
        kpe::MetricReport r = kpe::prf(pred, gold_it->second);
        run_report.precision += r.precision;
        run_report.recall += r.recall;
        run_report.f1 += r.f1;
        ++posts;
      }
      if (posts == 0) continue;
      run_report.precision /= static_cast<double>(posts);
      run_report.recall /= static_cast<double>(posts);
      run_report.f1 /= static_cast<double>(posts);
      mean.precision += run_report.precision;
      mean.recall += run_report.recall;
      mean.f1 += run_report.f1;
      ++runs_counted;
    }
    if (runs_counted == 0) throw UsageError("eval: no prediction post matches the gold file");
    mean.precision /= static_cast<double>(runs_counted);
    mean.recall /= static_cast<double>(runs_counted);
    mean.f1 /= static_cast<double>(runs_counted);
    nlohmann::ordered_json entry;
    entry["precision"] = mean.precision;
    entry["recall"] = mean.recall;
    entry["f1"] = mean.f1;
    at_k["@" + std::to_string(k)] = std::move(entry);
    table_rows.emplace_back(k, mean);
  }
  report["metrics"] = std::move(at_k);

  if (!options.output.empty()) {
    std::ofstream out = open_output(options.output);
    out << report.dump(2) << '\n';
  }
  if (!global.quiet) {
    std::printf("%-24s", "Model");
    for (const auto& [k, row] : table_rows) {
      (void)row;
      std::string h = "F1@" + std::to_string(k);
      std::printf(" %10s", h.c_str());
    }
    std::printf("\n");
    std::printf("%-24s", method.c_str());
    for (const auto& [k, row] : table_rows) {
      (void)k;
      std::printf(" %10.4f", row.f1);
    }
    std::printf("\n");
    for (const auto& [k, row] : table_rows)
      std::printf("  @%-3zu P %.4f R %.4f F1 %.4f\n", k, row.precision, row.recall, row.f1);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string what;
  std::string annotations, corpus, predictions, table_path, output;
  std::string theme;
};

void write_csv_or_json(const std::string& output, const nlohmann::ordered_json& json_doc,
                       const std::function<void(std::ostream&)>& csv_writer) {
  std::ofstream out = open_output(output);
  if (output.size() >= 4 && output.substr(output.size() - 4) == ".csv")
    csv_writer(out);
  else
    out << json_doc.dump(2) << '\n';
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

int cmd_analyze(const GlobalOptions& global, const AnalyzeOptions& options) {
  static const std::set<std::string> whats = {"freq", "cooccur", "engagement", "agreement",
                                              "theme-miss"};
  if (!whats.count(options.what)) throw UsageError("unknown --what: " + options.what);
  if (options.annotations.empty()) throw UsageError("analyze: --annotations is required");
  auto annotations = load_annotations_checked(options.annotations, global.quiet);

  std::optional<kpe::NormalizationTable> table;
  if (!options.table_path.empty()) table = load_table_checked(options.table_path);
  const kpe::NormalizationTable* table_ptr = table ? &*table : nullptr;

  if (options.what == "freq") {
    std::optional<kpe::Theme> filter;
    if (!options.theme.empty()) {
      filter = kpe::try_parse_theme(options.theme);
      if (!filter) throw UsageError("unknown theme: " + options.theme);
    }
    auto freq = kpe::frequency(annotations, table_ptr, filter);
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& row : freq.rows)
      j.push_back({{"phrase", row.phrase},
                   {"count", row.count},
                   {"theme", std::string(kpe::theme_name(row.theme))}});
    write_csv_or_json(options.output, j, [&](std::ostream& out) {
      out << "phrase,count,theme\n";
      for (const auto& row : freq.rows)
        out << csv_quote(row.phrase) << ',' << row.count << ','
            << csv_quote(std::string(kpe::theme_name(row.theme))) << '\n';
    });
    if (!global.quiet)
      for (std::size_t i = 0; i < std::min<std::size_t>(10, freq.rows.size()); ++i)
        std::printf("%-30s %6zu  %s\n", freq.rows[i].phrase.c_str(), freq.rows[i].count,
                    std::string(kpe::theme_name(freq.rows[i].theme)).c_str());
    return 0;
  }

  if (options.what == "cooccur") {
    auto matrix = kpe::cooccurrence(annotations);
    const auto& vocabulary = matrix.vocabulary();
    nlohmann::ordered_json j;
    j["phrases"] = vocabulary;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& a : vocabulary) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (const auto& b : vocabulary) row.push_back(matrix.count(a, b));
      cells.push_back(std::move(row));
    }
    j["counts"] = std::move(cells);
    write_csv_or_json(options.output, j, [&](std::ostream& out) {
      out << "phrase";
      for (const auto& b : vocabulary) out << ',' << csv_quote(b);
      out << '\n';
      for (const auto& a : vocabulary) {
        out << csv_quote(a);
        for (const auto& b : vocabulary) out << ',' << matrix.count(a, b);
        out << '\n';
      }
    });
    return 0;
  }

  if (options.what == "engagement") {
    if (options.corpus.empty()) throw UsageError("engagement needs --corpus for post metadata");
    kpe::Corpus corpus = load_corpus_checked(options.corpus, global.quiet);
    auto scores = kpe::engagement(corpus, annotations);
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& row : scores.rows)
      j.push_back({{"phrase", row.phrase},
                   {"occurrences", row.occurrences},
                   {"avg_comments", row.avg_comments},
                   {"avg_upvotes", row.avg_upvotes}});
    write_csv_or_json(options.output, j, [&](std::ostream& out) {
      out << "phrase,occurrences,avg_comments,avg_upvotes\n";
      for (const auto& row : scores.rows) {
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%.4f,%.4f", row.avg_comments, row.avg_upvotes);
        out << csv_quote(row.phrase) << ',' << row.occurrences << ',' << buffer << '\n';
      }
    });
    return 0;
  }

  if (options.what == "agreement") {
    std::vector<kpe::Diagnostic> diagnostics;
    kpe::AgreementReport report;
    try {
      report = kpe::avg_jaccard(annotations, table_ptr, true, &diagnostics);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (!global.quiet) print_diagnostics(diagnostics, options.annotations);
    nlohmann::ordered_json j;
    nlohmann::ordered_json per_post = nlohmann::ordered_json::array();
    std::size_t index = 0;
    for (const auto& a : annotations) {
      if (a.annotators.size() < 2) continue;
      per_post.push_back({{"post_id", a.post_id}, {"ji", report.per_post_ji[index++]}});
    }
    j["per_post"] = std::move(per_post);
    j["average"] = report.average;
    write_csv_or_json(options.output, j, [&](std::ostream& out) {
      out << "post_id,ji\n";
      std::size_t i = 0;
      for (const auto& a : annotations) {
        if (a.annotators.size() < 2) continue;
        char buffer[32];
        std::snprintf(buffer, sizeof(buffer), "%.6f", report.per_post_ji[i++]);
        out << csv_quote(a.post_id) << ',' << buffer << '\n';
      }
    });
    if (!global.quiet) std::printf("average JI over %zu posts: %.4f\n",
                                   report.per_post_ji.size(), report.average);
    return 0;
  }

  // theme-miss
  if (options.predictions.empty()) throw UsageError("theme-miss needs --predictions");
  std::map<std::string, kpe::PhraseSet> predictions_by_post;
  for (const PredictionRecord& record : load_predictions(options.predictions))
    for (const auto& k : record.keyphrases) {
      std::string phrase = table_ptr ? kpe::normalize_phrase(k.phrase, *table_ptr).canonical
                                     : kpe::to_lower(kpe::trim(k.phrase));
      predictions_by_post[record.post_id].insert(std::move(phrase));
    }
  auto report = kpe::theme_miss_analysis(predictions_by_post, annotations, table_ptr);
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json entry;
    entry["theme"] = std::string(kpe::theme_name(row.theme));
    entry["gold_occurrences"] = row.gold_occurrences;
    entry["missed"] = row.missed;
    if (row.relative_error_percent) {
      char buffer[32];
      std::snprintf(buffer, sizeof(buffer), "%.2f", *row.relative_error_percent);
      entry["relative_error_percent"] = buffer;
    }
    j.push_back(std::move(entry));
  }
  write_csv_or_json(options.output, j, [&](std::ostream& out) {
    out << "theme,gold_occurrences,missed,relative_error_percent\n";
    for (const auto& row : report.rows) {
      out << csv_quote(std::string(kpe::theme_name(row.theme))) << ',' << row.gold_occurrences
          << ',' << row.missed << ',';
      if (row.relative_error_percent) {
        char buffer[32];
        std::snprintf(buffer, sizeof(buffer), "%.2f", *row.relative_error_percent);
        out << buffer;
      }
      out << '\n';
    }
  });
  if (!global.quiet)
    for (const auto& row : report.rows)
      if (row.relative_error_percent)
        std::printf("%-34s gold %6zu missed %6zu relative error %.2f%%\n",
                    std::string(kpe::theme_name(row.theme)).c_str(), row.gold_occurrences,
                    row.missed, *row.relative_error_percent);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keyphrase extraction and analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config");

  GlobalOptions global;
  app.add_option("--jobs", global.jobs, "worker threads for per-post work")->capture_default_str();
  app.add_option("--seed", global.seed, "seed for all randomized choices")->capture_default_str();
  app.add_flag("--quiet", global.quiet, "suppress progress and tables");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "filter a raw post dump");
  std::string ingest_input, ingest_output;
  bool ingest_dry_run = false;
  ingest->add_option("--input", ingest_input, "raw corpus JSONL")->required();
  ingest->add_option("--output", ingest_output, "filtered corpus JSONL");
  ingest->add_flag("--dry-run", ingest_dry_run, "print counts, write nothing");

  // rank
  auto* rank = app.add_subcommand("rank", "rank keyphrases with an unsupervised model");
  RankOptions rank_options;
  rank->add_option("--input", rank_options.input, "corpus JSONL")->required();
  rank->add_option("--output", rank_options.output, "predictions JSONL")->required();
  rank->add_option("--method", rank_options.method,
                   "tfidf|yake|textrank|topicrank|positionrank|multipartite|embed")
      ->required();
  rank->add_option("--k", rank_options.k, "keyphrases per post")->capture_default_str();
  rank->add_option("--df-corpus", rank_options.df_corpus, "corpus for document frequencies");
  rank->add_option("--vectors", rank_options.vectors, "word-vector file for embed");
  rank->add_option("--embed-endpoint", rank_options.embed_endpoint, "embedding service URL");
  rank->add_option("--window", rank_options.window, "co-occurrence window override");

  // llm
  auto* llm = app.add_subcommand("llm", "prompt a chat model for keyphrases");
  LlmOptions llm_options;
  llm->add_option("--input", llm_options.input, "corpus JSONL");
  llm->add_option("--output", llm_options.output, "predictions JSONL")->required();
  llm->add_option("--template", llm_options.template_path, "prompt template JSON");
  llm->add_option("--runs", llm_options.runs, "number of runs")->capture_default_str();
  llm->add_option("--replay", llm_options.replay, "transcript JSONL for offline replay");
  llm->add_option("--endpoint", llm_options.endpoint, "chat-completions URL");
  llm->add_option("--model", llm_options.model, "model id for live runs");
  llm->add_option("--temperature", llm_options.temperature, "sampling temperature")
      ->capture_default_str();
  llm->add_option("--rate-limit", llm_options.rate_limit, "max requests per second");
  llm->add_option("--concurrency", llm_options.concurrency, "max in-flight requests")
      ->capture_default_str();
  llm->add_option("--transcripts-out", llm_options.transcripts_out, "append transcripts here");
  llm->add_option("--combine", llm_options.combine,
                  "merge these prediction files by per-post union instead of extracting");

  // normalize
  auto* normalize = app.add_subcommand("normalize", "apply a normalization table to a file");
  std::string norm_input, norm_table, norm_output;
  bool norm_keep_other = false;
  normalize->add_option("--input", norm_input, "predictions or annotations JSONL")->required();
  normalize->add_option("--table", norm_table, "normalization table TSV")->required();
  normalize->add_option("--output", norm_output, "normalized JSONL")->required();
  normalize->add_flag("--keep-other", norm_keep_other, "keep Other-category phrases");

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against gold annotations");
  EvalOptions eval_options;
  std::string eval_k = "5,10,15";
  bool eval_keep_other = false;
  eval->add_option("--predictions", eval_options.predictions, "predictions JSONL")->required();
  eval->add_option("--gold", eval_options.gold, "annotation JSONL")->required();
  eval->add_option("--k", eval_k, "comma-separated k values")->capture_default_str();
  eval->add_option("--gold-mode", eval_options.gold_mode, "union|intersection")
      ->capture_default_str();
  eval->add_option("--table", eval_options.table_path, "normalization table TSV");
  eval->add_flag("--keep-other", eval_keep_other, "keep Other-category phrases");
  eval->add_option("--output", eval_options.output, "JSON report path");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "corpus analytics over annotations");
  AnalyzeOptions analyze_options;
  analyze->add_option("--what", analyze_options.what,
                      "freq|cooccur|engagement|agreement|theme-miss")
      ->required();
  analyze->add_option("--annotations", analyze_options.annotations, "annotation JSONL")
      ->required();
  analyze->add_option("--corpus", analyze_options.corpus, "corpus JSONL (engagement)");
  analyze->add_option("--predictions", analyze_options.predictions,
                      "predictions JSONL (theme-miss)");
  analyze->add_option("--table", analyze_options.table_path, "normalization table TSV");
  analyze->add_option("--theme", analyze_options.theme, "theme filter (freq)");
  analyze->add_option("--output", analyze_options.output, "output file (.json or .csv)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(global, ingest_input, ingest_output, ingest_dry_run);
    if (*rank) return cmd_rank(global, rank_options);
    if (*llm) return cmd_llm(global, llm_options);
    if (*normalize)
      return cmd_normalize(global, norm_input, norm_table, norm_output, norm_keep_other);
    if (*eval) {
      eval_options.drop_other = !eval_keep_other;
      eval_options.k_values.clear();
      for (const std::string& part : kpe::split(eval_k, ',')) {
        if (kpe::trim(part).empty()) continue;
        try {
          eval_options.k_values.push_back(std::stoul(std::string(kpe::trim(part))));
        } catch (const std::exception&) {
          throw UsageError("eval: bad k value '" + part + "'");
        }
      }
      if (eval_options.k_values.empty()) throw UsageError("eval: --k list is empty");
      return cmd_eval(global, eval_options);
    }
    if (*analyze) return cmd_analyze(global, analyze_options);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
