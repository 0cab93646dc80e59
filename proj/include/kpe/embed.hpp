#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "kpe/candidates.hpp"
#include "kpe/io.hpp"
#include "kpe/ranking.hpp"
#include "kpe/tokenize.hpp"

namespace kpe {

using EmbeddingVector = std::vector<double>;

/// Standard cosine similarity. Mismatched dimensions and zero vectors are
/// contract violations and throw.
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine: zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Deterministic text-to-vector contract. Implementations must be safe for
/// concurrent embed() calls or wrapped in a serializing adapter.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(const std::string& text) = 0;
};

/// Offline provider over a word-vector text file: first line
/// "<vocab_size> <dimension>", then "<word> <v1> ... <vd>" per line.
/// embed(text) averages the vectors of the known words; a text with no known
/// word is an error. Malformed lines are skipped and reported.
class FileVectorProvider final : public EmbeddingProvider {
 public:
  explicit FileVectorProvider(const std::filesystem::path& path,
                              std::vector<Diagnostic>* diagnostics = nullptr) {
    bool header_seen = false;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
      if (trim(line).empty()) return;
      std::istringstream in(line);
      if (!header_seen) {
        std::size_t vocab = 0;
        if (!(in >> vocab >> dimension_) || dimension_ == 0)
          throw std::runtime_error(path.string() + ": bad header line");
        header_seen = true;
        return;
      }
      std::string word;
      in >> word;
      EmbeddingVector vec;
      vec.reserve(dimension_);
      double value = 0.0;
      while (in >> value) vec.push_back(value);
      if (word.empty() || vec.size() != dimension_) {
        if (diagnostics)
          diagnostics->push_back({line_no, "malformed vector line, skipped"});
        return;
      }
      vectors_.emplace(to_lower(word), std::move(vec));
    });
    if (!header_seen) throw std::runtime_error(path.string() + ": empty vector file");
    name_ = path.filename().string();
  }

  std::string name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }

  EmbeddingVector embed(const std::string& text) override {
    EmbeddingVector sum(dimension_, 0.0);
    std::size_t known = 0;
    for (const Token& t : tokenize(text)) {
      auto it = vectors_.find(t.lower);
      if (it == vectors_.end()) continue;
      for (std::size_t i = 0; i < dimension_; ++i) sum[i] += it->second[i];
      ++known;
    }
    if (known == 0)
      throw std::runtime_error("embed: no known word in text '" + text + "'");
    for (double& v : sum) v /= static_cast<double>(known);
    return sum;
  }

 private:
  std::string name_;
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, EmbeddingVector> vectors_;
};

struct HttpProviderConfig {
  std::string endpoint;  // full URL, e.g. http://host:port/embed
  int max_retries = 2;   // additional attempts after the first
  int backoff_ms = 100;  // doubles per retry
  int timeout_s = 30;
};

/// Remote embedding service: POST {"texts": [..]} -> {"vectors": [[..], ..]},
/// bearer token from EMBED_API_KEY. Responses are cached per text; transient
/// failures (connection errors, 429, 5xx) are retried with backoff, and a
/// dimension change across responses is fatal.
class HttpVectorProvider final : public EmbeddingProvider {
 public:
  explicit HttpVectorProvider(HttpProviderConfig config) : config_(std::move(config)) {
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw std::invalid_argument("endpoint must be a full URL: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    base_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
    if (const char* key = std::getenv("EMBED_API_KEY")) api_key_ = key;
  }

  std::string name() const override { return "http:" + base_; }

  std::size_t dimension() const override {
    std::lock_guard<std::mutex> lock(mutex_);
    return dimension_;
  }

  EmbeddingVector embed(const std::string& text) override {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(text);
      if (it != cache_.end()) return it->second;
    }
    EmbeddingVector vec = fetch(text);
    std::lock_guard<std::mutex> lock(mutex_);
    if (dimension_ == 0) dimension_ = vec.size();
    if (vec.size() != dimension_)
      throw std::runtime_error("embedding dimension drift: expected " +
                               std::to_string(dimension_) + ", got " +
                               std::to_string(vec.size()));
    return cache_.emplace(text, std::move(vec)).first->second;
  }

  std::size_t request_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
  }

 private:
  EmbeddingVector fetch(const std::string& text) {
    nlohmann::json body = {{"texts", {text}}};
    std::string payload = body.dump();
    int backoff = config_.backoff_ms;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Client client(base_);
      client.set_read_timeout(config_.timeout_s, 0);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++requests_;
      }
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
        throw std::runtime_error("embedding service: HTTP " + std::to_string(res->status));
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("vectors") || parsed["vectors"].empty())
        throw std::runtime_error("embedding service: malformed response body");
      return parsed["vectors"][0].get<EmbeddingVector>();
    }
    throw std::runtime_error("embedding service unreachable after " +
                             std::to_string(config_.max_retries + 1) + " attempts (" +
                             last_error + ")");
  }

  HttpProviderConfig config_;
  std::string base_, path_, api_key_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
  std::size_t dimension_ = 0;
  std::size_t requests_ = 0;
};

/// Candidates scored by cosine similarity between their surface embedding
/// and the whole-document embedding.
inline std::vector<RankedKeyphrase> embed_rank(const std::string& document_text,
                                               const std::vector<CandidatePhrase>& candidates,
                                               EmbeddingProvider& provider, std::size_t k) {
  if (k < 1) throw std::invalid_argument("embed_rank: k must be >= 1");
  if (candidates.empty()) return {};
  EmbeddingVector doc;
  try {
    doc = provider.embed(document_text);
  } catch (const std::exception& e) {
    throw std::runtime_error("embedding document: " + std::string(e.what()));
  }
  std::vector<RankedKeyphrase> scored;
  scored.reserve(candidates.size());
  for (const CandidatePhrase& c : candidates) {
    try {
      scored.push_back(make_ranked(c, cosine(provider.embed(c.surface), doc)));
    } catch (const std::exception& e) {
      throw std::runtime_error("embedding candidate '" + c.surface + "': " + e.what());
    }
  }
  return take_top_k(std::move(scored), k);
}

}  // namespace kpe
