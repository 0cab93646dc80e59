#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "kpe/corpus.hpp"
#include "kpe/io.hpp"
#include "kpe/metrics.hpp"
#include "kpe/normalize.hpp"

namespace kpe {

enum class PromptStyle { Basic, Guided, ThemeSpecific };

struct PromptExample {
  std::string title;
  std::string body;
  std::vector<std::string> keyphrases;
};

/// A prompt template file: instruction body with a {post} placeholder, an
/// optional {examples} placeholder, and an example pool for few-shot runs.
struct PromptTemplate {
  std::string id;
  PromptStyle style = PromptStyle::Basic;
  std::string theme;  // theme-specific templates only
  int shots = 0;
  bool randomize = false;  // draw examples from the pool instead of taking them in order
  std::vector<PromptExample> example_pool;
  std::string body_template;
};

namespace llm_detail {

inline constexpr std::string_view kPostPlaceholder = "{post}";
inline constexpr std::string_view kExamplesPlaceholder = "{examples}";

inline std::string replace_once(std::string text, std::string_view placeholder,
                                const std::string& value) {
  auto at = text.find(placeholder);
  if (at == std::string::npos)
    throw std::runtime_error("prompt template: missing placeholder " + std::string(placeholder));
  return text.replace(at, placeholder.size(), value);
}

/// Deterministic draw of `count` pool indices without replacement
/// (Fisher-Yates over raw mt19937_64 output, stable across platforms).
inline std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t count,
                                               std::uint64_t seed) {
  std::vector<std::size_t> indices(pool);
  for (std::size_t i = 0; i < pool; ++i) indices[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count && i < pool; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (pool - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(count);
  return indices;
}

inline std::string quote_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += "'" + items[i] + "'";
  }
  return out + "]";
}

}  // namespace llm_detail

/// Loads and validates a template JSON file. Guided templates must name all
/// four extraction themes; few-shot templates need an {examples} placeholder
/// and a large enough example pool.
inline PromptTemplate load_template(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  PromptTemplate t;
  t.id = j.at("id").get<std::string>();
  std::string style = j.at("style").get<std::string>();
  if (style == "basic") t.style = PromptStyle::Basic;
  else if (style == "guided") t.style = PromptStyle::Guided;
  else if (style == "theme") t.style = PromptStyle::ThemeSpecific;
  else throw std::runtime_error(path.string() + ": unknown style '" + style + "'");
  t.theme = j.value("theme", "");
  t.shots = j.value("shots", 0);
  t.randomize = j.value("randomize", false);
  t.body_template = j.at("body").get<std::string>();
  for (const auto& e : j.value("examples", nlohmann::json::array())) {
    PromptExample ex;
    ex.title = e.at("title").get<std::string>();
    ex.body = e.at("body").get<std::string>();
    ex.keyphrases = e.at("keyphrases").get<std::vector<std::string>>();
    t.example_pool.push_back(std::move(ex));
  }

  if (t.body_template.find(llm_detail::kPostPlaceholder) == std::string::npos)
    throw std::runtime_error(path.string() + ": template body lacks {post}");
  if (t.shots < 0) throw std::runtime_error(path.string() + ": negative shots");
  if (t.shots > 0) {
    if (t.body_template.find(llm_detail::kExamplesPlaceholder) == std::string::npos)
      throw std::runtime_error(path.string() + ": few-shot template lacks {examples}");
    if (static_cast<std::size_t>(t.shots) > t.example_pool.size())
      throw std::runtime_error(path.string() + ": example pool smaller than shots");
  }
  if (t.style == PromptStyle::Guided) {
    for (std::string_view theme :
         {"Treatment Options", "Substance Dependency & Recovery", "Medical History",
          "Psychophysical Effects"})
      if (t.body_template.find(theme) == std::string::npos)
        throw std::runtime_error(path.string() + ": guided template must mention '" +
                                 std::string(theme) + "'");
  }
  if (t.style == PromptStyle::ThemeSpecific && !try_parse_theme(t.theme))
    throw std::runtime_error(path.string() + ": theme-specific template needs a valid theme");
  return t;
}

/// Fills the template for one post. Few-shot examples are taken from the
/// pool, drawn without replacement under the seed when the template is
/// randomized; the same seed always yields the same prompt.
inline std::string render_prompt(const PromptTemplate& t, const Post& post,
                                 std::uint64_t rng_seed = 0) {
  using namespace llm_detail;
  std::string text = t.body_template;
  if (t.shots > 0) {
    std::vector<std::size_t> picks;
    if (t.randomize) {
      picks = sample_indices(t.example_pool.size(), static_cast<std::size_t>(t.shots), rng_seed);
    } else {
      for (std::size_t i = 0; i < static_cast<std::size_t>(t.shots); ++i) picks.push_back(i);
    }
    std::string blocks;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      const PromptExample& ex = t.example_pool[picks[i]];
      if (i) blocks += "\n\n";
      blocks += "Example " + std::to_string(i + 1) + "\ntitle: {{" + ex.title + "}}\n\nbody: {{\n" +
                ex.body + "\n}}\n\nkeyphrases: " + quote_list(ex.keyphrases);
    }
    text = replace_once(std::move(text), kExamplesPlaceholder, blocks);
  }
  return replace_once(std::move(text), kPostPlaceholder, document_text(post));
}

struct LlmConfig {
  std::string model_id;
  double temperature = 0.0;
  int n_runs = 5;
  int max_retries = 3;
  double rate_limit_rps = 0.0;  // requests per second, 0 = unlimited
  int backoff_ms = 200;
  int timeout_s = 60;
  int max_concurrency = 4;
  std::string endpoint;  // chat-completions URL, live mode only
};

struct TranscriptRecord {
  std::string template_id;
  std::string post_id;
  int run = 0;
  std::string prompt;
  std::string response;
  std::string timestamp;
};

/// JSONL-backed store of request/response transcripts keyed by
/// (template id, post id, run index).
class TranscriptStore {
 public:
  TranscriptStore() = default;

  static TranscriptStore load(const std::filesystem::path& path) {
    TranscriptStore store;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
      if (trim(line).empty()) return;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed transcript line");
      TranscriptRecord r;
      r.template_id = j.at("template_id").get<std::string>();
      r.post_id = j.at("post_id").get<std::string>();
      r.run = j.at("run").get<int>();
      r.prompt = j.value("prompt", "");
      r.response = j.at("response").get<std::string>();
      r.timestamp = j.value("timestamp", "");
      store.add(std::move(r));
    });
    return store;
  }

  void add(TranscriptRecord record) {
    records_[key_of(record.template_id, record.post_id, record.run)] = std::move(record);
  }

  const TranscriptRecord* find(const std::string& template_id, const std::string& post_id,
                               int run) const {
    auto it = records_.find(key_of(template_id, post_id, run));
    return it == records_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return records_.size(); }

  static void append_to(const std::filesystem::path& path, const TranscriptRecord& r) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append transcript: " + path.string());
    nlohmann::ordered_json j;
    j["template_id"] = r.template_id;
    j["post_id"] = r.post_id;
    j["run"] = r.run;
    j["prompt"] = r.prompt;
    j["response"] = r.response;
    j["timestamp"] = r.timestamp;
    out << j.dump() << '\n';
  }

 private:
  static std::string key_of(const std::string& template_id, const std::string& post_id, int run) {
    return template_id + '\x1f' + post_id + '\x1f' + std::to_string(run);
  }

  std::unordered_map<std::string, TranscriptRecord> records_;
};

/// Chat-completion client. Replay mode serves stored responses byte-for-byte
/// and never touches the network; live mode posts
/// {model, temperature, messages:[{role,content}]} with the LLM_API_KEY
/// bearer token, retries transient failures and enforces the rate limit.
class LlmClient {
 public:
  static LlmClient replay(TranscriptStore store) {
    LlmClient client;
    client.replay_store_ = std::move(store);
    client.replay_mode_ = true;
    return client;
  }

  static LlmClient live(LlmConfig config,
                        std::optional<std::filesystem::path> transcript_sink = std::nullopt) {
    LlmClient client;
    client.config_ = std::move(config);
    if (client.config_.endpoint.empty())
      throw std::runtime_error("llm: live mode needs an endpoint");
    const char* key = std::getenv("LLM_API_KEY");
    if (!key || !*key)
      throw std::runtime_error("llm: LLM_API_KEY is not set and replay mode is off");
    client.api_key_ = key;
    client.transcript_sink_ = std::move(transcript_sink);
    auto scheme_end = client.config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw std::runtime_error("llm: endpoint must be a full URL");
    auto path_start = client.config_.endpoint.find('/', scheme_end + 3);
    client.base_ = client.config_.endpoint.substr(0, path_start);
    client.path_ =
        path_start == std::string::npos ? "/" : client.config_.endpoint.substr(path_start);
    return client;
  }

  bool is_replay() const { return replay_mode_; }
  const LlmConfig& config() const { return config_; }

  /// Raw response text for one prompt. The (template, post, run) key
  /// addresses the transcript store in replay mode and names the post in
  /// error messages.
  std::string complete(const std::string& prompt, const std::string& template_id,
                       const std::string& post_id, int run) {
    if (replay_mode_) {
      const TranscriptRecord* r = replay_store_.find(template_id, post_id, run);
      if (!r)
        throw std::runtime_error("replay transcript missing for post '" + post_id + "' (template " +
                                 template_id + ", run " + std::to_string(run) + ")");
      return r->response;
    }
    std::string response = post_with_retries(prompt, post_id);
    if (transcript_sink_) {
      std::lock_guard<std::mutex> lock(*sink_mutex_);
      TranscriptRecord r{template_id, post_id, run, prompt, response, now_iso8601()};
      TranscriptStore::append_to(*transcript_sink_, r);
    }
    return response;
  }

 private:
  LlmClient() = default;

  static std::string now_iso8601() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
    return buf;
  }

  void enforce_rate_limit() {
    if (config_.rate_limit_rps <= 0.0) return;
    std::lock_guard<std::mutex> lock(*rate_mutex_);
    auto min_gap = std::chrono::duration<double>(1.0 / config_.rate_limit_rps);
    auto now = std::chrono::steady_clock::now();
    if (last_request_ && now - *last_request_ < min_gap) {
      std::this_thread::sleep_for(min_gap - (now - *last_request_));
      now = std::chrono::steady_clock::now();
    }
    last_request_ = now;
  }

  std::string post_with_retries(const std::string& prompt, const std::string& post_id) {
    nlohmann::json body = {{"model", config_.model_id},
                           {"temperature", config_.temperature},
                           {"messages", {{{"role", "user"}, {"content", prompt}}}}};
    std::string payload = body.dump();
    int backoff = config_.backoff_ms;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      enforce_rate_limit();
      httplib::Client client(base_);
      client.set_read_timeout(config_.timeout_s, 0);
      httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
      httplib::Result res = client.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_error = "connection error";
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw std::runtime_error("llm request for post '" + post_id + "': HTTP " +
                                 std::to_string(res->status));
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
        throw std::runtime_error("llm request for post '" + post_id + "': malformed response");
      return parsed["choices"][0]["message"]["content"].get<std::string>();
    }
    throw std::runtime_error("llm request for post '" + post_id + "' failed after " +
                             std::to_string(config_.max_retries + 1) + " attempts (" + last_error +
                             ")");
  }

  bool replay_mode_ = false;
  TranscriptStore replay_store_;
  LlmConfig config_;
  std::string api_key_, base_, path_;
  std::optional<std::filesystem::path> transcript_sink_;
  std::unique_ptr<std::mutex> sink_mutex_ = std::make_unique<std::mutex>();
  std::unique_ptr<std::mutex> rate_mutex_ = std::make_unique<std::mutex>();
  std::optional<std::chrono::steady_clock::time_point> last_request_;
};

/// Extracted phrase list from a model response. The primary form is a
/// bracketed quoted list; bullets, lines and bare comma lists are the
/// fallback. Never throws: unparseable text yields an empty list plus a
/// diagnostic.
inline std::vector<std::string> parse_response(std::string_view text,
                                               std::vector<Diagnostic>* diagnostics = nullptr) {
  auto cleanup = [](std::string_view s) {
    s = trim(s);
    while (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                             (s.front() == '"' && s.back() == '"')))
      s = trim(s.substr(1, s.size() - 2));
    return std::string(s);
  };
  auto dedupe = [](std::vector<std::string> items) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (std::string& item : items)
      if (!item.empty() && seen.insert(item).second) out.push_back(std::move(item));
    return out;
  };

  // primary: bracketed, comma-separated, quoted list
  auto open = text.find('[');
  auto close = text.rfind(']');
  if (open != std::string_view::npos && close != std::string_view::npos && open < close) {
    std::string_view inner = text.substr(open + 1, close - open - 1);
    std::vector<std::string> items;
    std::string current;
    char quote = 0;
    bool valid = true;
    for (char c : inner) {
      if (quote) {
        if (c == quote) quote = 0;
        else current += c;
      } else if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == ',') {
        items.push_back(current);
        current.clear();
      } else if (c == '[' || c == ']') {
        valid = false;  // nested lists are not ours
        break;
      } else {
        current += c;
      }
    }
    if (valid && quote == 0) {
      items.push_back(current);
      std::vector<std::string> cleaned;
      for (const std::string& item : items) {
        std::string c = cleanup(item);
        if (!c.empty()) cleaned.push_back(std::move(c));
      }
      return dedupe(std::move(cleaned));
    }
  }

  // fallback: bullets / one item per line / comma-separated prose
  std::vector<std::string> items;
  for (std::string& line : split(std::string(text), '\n')) {
    std::string_view s = trim(line);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == (char)0xE2))
      s = trim(s.substr(s.front() == (char)0xE2 ? 3 : 1));  // '-', '*', or UTF-8 bullet
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')'))
      s = trim(s.substr(digits + 1));
    if (s.empty()) continue;
    if (s.find(',') != std::string_view::npos) {
      for (const std::string& part : split(std::string(s), ',')) {
        std::string c = cleanup(part);
        if (!c.empty()) items.push_back(std::move(c));
      }
    } else {
      std::string c = cleanup(s);
      if (!c.empty()) items.push_back(std::move(c));
    }
  }
  if (items.empty() && diagnostics)
    diagnostics->push_back({0, "no recognizable keyphrase list in response"});
  return dedupe(std::move(items));
}

/// Predictions of one run, one list per input post in input order.
struct ExtractionRun {
  int run_index = 0;
  std::vector<std::pair<std::string, std::vector<std::string>>> predictions;  // (post id, phrases)
};

/// Runs the template over every post for config.n_runs runs. Replay mode is
/// strictly sequential; live mode fans out up to config.max_concurrency
/// in-flight requests per run while keeping outputs in input order.
inline std::vector<ExtractionRun> run_extraction(const std::vector<Post>& posts,
                                                 const PromptTemplate& tmpl, LlmClient& client,
                                                 int n_runs, std::uint64_t seed) {
  if (n_runs < 1) throw std::invalid_argument("run_extraction: n_runs must be >= 1");
  std::vector<ExtractionRun> runs;
  const int concurrency = client.is_replay() ? 1 : std::max(1, client.config().max_concurrency);
  for (int run = 0; run < n_runs; ++run) {
    ExtractionRun out;
    out.run_index = run;
    out.predictions.resize(posts.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::optional<std::string> first_error;
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < posts.size(); i = next.fetch_add(1)) {
        try {
          std::string prompt =
              render_prompt(tmpl, posts[i], seed + static_cast<std::uint64_t>(run));
          std::string response = client.complete(prompt, tmpl.id, posts[i].id, run);
          out.predictions[i] = {posts[i].id, parse_response(response)};
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = e.what();
          return;
        }
      }
    };
    if (concurrency == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < concurrency; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    if (first_error) throw std::runtime_error(*first_error);
    runs.push_back(std::move(out));
  }
  return runs;
}

/// Set-union merge of parallel runs (e.g. one per theme) into a single run,
/// per post, preserving first-seen phrase order.
inline ExtractionRun combine_predictions(const std::vector<ExtractionRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("combine_predictions: no runs");
  ExtractionRun combined;
  combined.run_index = runs.front().run_index;
  for (std::size_t p = 0; p < runs.front().predictions.size(); ++p) {
    const std::string& post_id = runs.front().predictions[p].first;
    std::vector<std::string> merged;
    std::unordered_set<std::string> seen;
    for (const ExtractionRun& run : runs) {
      if (p >= run.predictions.size() || run.predictions[p].first != post_id)
        throw std::invalid_argument("combine_predictions: runs cover different posts");
      for (const std::string& phrase : run.predictions[p].second)
        if (seen.insert(phrase).second) merged.push_back(phrase);
    }
    combined.predictions.emplace_back(post_id, std::move(merged));
  }
  return combined;
}

struct AggregateReport {
  MetricReport averaged;
  std::vector<MetricReport> per_run;
};

/// Per-run macro P/R/F1 over posts, then the arithmetic mean across runs.
/// Predictions and gold pass through the normalization table when given.
inline AggregateReport aggregate_runs(const std::vector<ExtractionRun>& runs,
                                      const std::map<std::string, std::vector<std::string>>& gold,
                                      const NormalizationTable* table = nullptr,
                                      bool drop_other = true) {
  if (runs.empty()) throw std::invalid_argument("aggregate_runs: zero runs");
  AggregateReport report;
  for (const ExtractionRun& run : runs) {
    MetricReport run_report;
    std::size_t posts = 0;
    for (const auto& [post_id, phrases] : run.predictions) {
      auto g = gold.find(post_id);
      if (g == gold.end()) continue;
      PhraseSet pred = normalized_phrase_set(phrases, table, drop_other);
      PhraseSet gold_set = normalized_phrase_set(g->second, table, drop_other);
      MetricReport r = prf(pred, gold_set);
      run_report.precision += r.precision;
      run_report.recall += r.recall;
      run_report.f1 += r.f1;
      run_report.support += r.support;
      ++posts;
    }
    if (posts == 0) throw std::runtime_error("aggregate_runs: no post matches the gold data");
    run_report.precision /= static_cast<double>(posts);
    run_report.recall /= static_cast<double>(posts);
    run_report.f1 /= static_cast<double>(posts);
    report.per_run.push_back(run_report);
  }
  for (const MetricReport& r : report.per_run) {
    report.averaged.precision += r.precision;
    report.averaged.recall += r.recall;
    report.averaged.f1 += r.f1;
    report.averaged.support = r.support;
  }
  report.averaged.precision /= static_cast<double>(report.per_run.size());
  report.averaged.recall /= static_cast<double>(report.per_run.size());
  report.averaged.f1 /= static_cast<double>(report.per_run.size());
  return report;
}

}  // namespace kpe
