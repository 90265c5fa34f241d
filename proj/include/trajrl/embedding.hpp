#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajrl/random.hpp"
#include "trajrl/trajectory.hpp"

/**
 * Step-text embeddings.
 *
 * The built-in embedder is a seeded feature-hashing bag of tokens: it is a
 * pure function of (text, config), so every reward derived from it is
 * reproducible without model weights. Sentence-transformer vectors computed
 * offline can be injected through an ExternalEmbeddings table instead.
 */

namespace trajrl {

using Vec = std::vector<double>;
using EmbeddingSequence = std::vector<Vec>;

class EmbeddingError : public std::runtime_error {
 public:
  explicit EmbeddingError(const std::string& what)
      : std::runtime_error(what) {}
};

struct HashEmbedderConfig {
  int dim = 16;
  std::uint64_t seed = 0;
};

namespace detail {

// Seeded FNV-1a over the token bytes. The hash is spelled out rather than
// delegated to std::hash so that frozen golden vectors stay valid.
inline std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/**
 * Embed one step: lowercase, split on non-alphanumerics, hash each token to
 * a signed bucket, accumulate, L2-normalize. Tokenless input gives the zero
 * vector. Requires dim >= 2.
 */
inline Vec embed_step(std::string_view step, const HashEmbedderConfig& config) {
  if (config.dim < 2) throw EmbeddingError("embedder dim must be >= 2");
  Vec v(static_cast<std::size_t>(config.dim), 0.0);
  bool any_token = false;

  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t h = detail::token_hash(token, config.seed);
    const auto bucket = static_cast<std::size_t>(
        h % static_cast<std::uint64_t>(config.dim));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
    any_token = true;
    token.clear();
  };
  for (char c : step) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      token += static_cast<char>(std::tolower(uc));
    } else {
      flush();
    }
  }
  flush();

  if (!any_token) return v;
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  // Signed buckets can cancel exactly; treat that like tokenless input
  // instead of dividing by zero.
  if (norm_sq == 0.0) return v;
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

/// Lookup table of externally computed vectors, keyed by exact step text.
class ExternalEmbeddings {
 public:
  /// Inserts or verifies; duplicate text must carry an identical vector.
  void insert(const std::string& text, Vec vector) {
    if (vector.empty())
      throw EmbeddingError("empty vector for \"" + text + "\"");
    if (dim_ == 0) {
      dim_ = static_cast<int>(vector.size());
    } else if (static_cast<int>(vector.size()) != dim_) {
      throw EmbeddingError("dimension mismatch: expected " +
                           std::to_string(dim_) + ", got " +
                           std::to_string(vector.size()) + " for \"" + text +
                           "\"");
    }
    auto it = table_.find(text);
    if (it != table_.end()) {
      if (it->second != vector)
        throw EmbeddingError("duplicate text with differing vectors: \"" +
                             text + "\"");
      return;
    }
    table_.emplace(text, std::move(vector));
  }

  const Vec* find(const std::string& text) const {
    auto it = table_.find(text);
    return it == table_.end() ? nullptr : &it->second;
  }

  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, Vec> table_;
  int dim_ = 0;
};

/**
 * Embeds steps either with the built-in hashing scheme or, when a table is
 * attached, by exact-text lookup. Table lookups are strict: a missing step
 * is an error rather than a silent fallback to different numbers.
 */
class Embedder {
 public:
  explicit Embedder(HashEmbedderConfig config) : config_(config) {}
  explicit Embedder(ExternalEmbeddings table) : table_(std::move(table)) {}

  Vec embed(const std::string& step) const {
    if (table_.size() > 0) {
      const Vec* v = table_.find(step);
      if (v == nullptr)
        throw EmbeddingError("no external embedding for \"" + step + "\"");
      return *v;
    }
    return embed_step(step, config_);
  }

  EmbeddingSequence embed_trajectory(const Trajectory& traj) const {
    EmbeddingSequence seq;
    seq.reserve(traj.steps.size());
    for (const auto& step : traj.steps) seq.push_back(embed(step));
    return seq;
  }

  int dim() const { return table_.size() > 0 ? table_.dim() : config_.dim; }

 private:
  HashEmbedderConfig config_;
  ExternalEmbeddings table_;
};

inline EmbeddingSequence embed_trajectory(const Trajectory& traj,
                                          const HashEmbedderConfig& config) {
  EmbeddingSequence seq;
  seq.reserve(traj.steps.size());
  for (const auto& step : traj.steps) seq.push_back(embed_step(step, config));
  return seq;
}

/**
 * Load a JSONL file of {"text": string, "vector": [number, ...]} lines.
 * All vectors must share one dimension; a duplicate text is accepted only
 * with an identical vector. Errors carry the offending line number.
 */
inline ExternalEmbeddings load_external_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open embeddings file: " + path);

  ExternalEmbeddings table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw EmbeddingError(path + ":" + std::to_string(lineno) +
                           ": malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("vector") ||
        !obj["text"].is_string() || !obj["vector"].is_array()) {
      throw EmbeddingError(path + ":" + std::to_string(lineno) +
                           ": expected {\"text\": ..., \"vector\": [...]}");
    }
    Vec v;
    v.reserve(obj["vector"].size());
    for (const auto& x : obj["vector"]) {
      if (!x.is_number())
        throw EmbeddingError(path + ":" + std::to_string(lineno) +
                             ": vector entries must be numbers");
      v.push_back(x.get<double>());
    }
    try {
      table.insert(obj["text"].get<std::string>(), std::move(v));
    } catch (const EmbeddingError& e) {
      throw EmbeddingError(path + ":" + std::to_string(lineno) + ": " +
                           e.what());
    }
  }
  return table;
}

}  // namespace trajrl
