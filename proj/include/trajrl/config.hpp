#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "trajrl/dataset.hpp"
#include "trajrl/embedding.hpp"
#include "trajrl/grpo.hpp"
#include "trajrl/nw.hpp"
#include "trajrl/reward.hpp"
#include "trajrl/trainer.hpp"

/**
 * Flat key=value run configuration with '#' comments. Keys are validated
 * against the full registry at load time, and values against the owning
 * module's invariants, so a typo never silently falls back to a default.
 */

namespace trajrl {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class RunConfig {
 public:
  static RunConfig from_string(const std::string& text,
                               const std::string& origin = "<string>") {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = detail::trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = detail::trim(trimmed.substr(0, eq));
      const std::string value = detail::trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty key");
      if (config.values_.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": duplicate key \"" + key + "\"");
      config.values_[key] = value;
    }
    return config;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return from_string(text.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key \"" + key + "\": not a number: " + it->second);
    }
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key \"" + key +
                        "\": not a non-negative integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key \"" + key + "\": not a boolean: " + v);
  }

  /// Call after reading everything; leftover keys are typos by definition.
  void reject_unconsumed() const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw ConfigError("unknown config key \"" + key + "\"");
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

/// Everything a CLI run needs, assembled and validated from one RunConfig.
struct AppSettings {
  HashEmbedderConfig embedder;
  std::string external_embeddings;  // optional JSONL path
  NwParams nw;
  RewardConfig rewards;
  GrpoConfig grpo;
  TrainerConfig trainer;
  RecordFields record_fields;
  GeneratedFields generated_fields;

  static AppSettings from_config(const RunConfig& config) {
    AppSettings s;
    s.embedder.dim = static_cast<int>(config.get_uint("embedder.dim", 16));
    s.embedder.seed = config.get_uint("embedder.seed", 0);
    s.external_embeddings = config.get_string("embedder.external", "");
    if (s.embedder.dim < 2) throw ConfigError("embedder.dim must be >= 2");

    s.nw.tau = config.get_double("nw.tau", s.nw.tau);
    s.nw.mismatch_penalty =
        config.get_double("nw.mismatch_penalty", s.nw.mismatch_penalty);
    s.nw.gap_open = config.get_double("nw.gap_open", s.nw.gap_open);
    s.nw.gap_extend = config.get_double("nw.gap_extend", s.nw.gap_extend);
    s.nw.validate();

    s.rewards.enable_form = config.get_bool("rewards.form", true);
    s.rewards.enable_exact = config.get_bool("rewards.exact", true);
    s.rewards.enable_dtw = config.get_bool("rewards.dtw", true);
    s.rewards.enable_nw = config.get_bool("rewards.nw", false);
    s.rewards.form_weight = config.get_double("rewards.form_weight", 1.0);
    s.rewards.exact_weight = config.get_double("rewards.exact_weight", 1.0);
    s.rewards.dtw_weight = config.get_double("rewards.dtw_weight", 1.0);
    s.rewards.nw_weight = config.get_double("rewards.nw_weight", 1.0);
    s.rewards.embedder = s.embedder;
    s.rewards.nw = s.nw;
    s.rewards.validate();

    s.grpo.epsilon = config.get_double("grpo.epsilon", 0.2);
    s.grpo.beta = config.get_double("grpo.beta", 0.04);
    s.grpo.sigma_tolerance = config.get_double("grpo.sigma_tolerance", 1e-8);
    s.grpo.validate();

    s.trainer.seed = config.get_uint("trainer.seed", 1);
    s.trainer.iterations =
        static_cast<std::size_t>(config.get_uint("trainer.iterations", 300));
    s.trainer.group_size =
        static_cast<std::size_t>(config.get_uint("grpo.group_size", 8));
    s.trainer.num_tasks =
        static_cast<std::size_t>(config.get_uint("trainer.tasks", 200));
    s.trainer.heldout_tasks =
        static_cast<std::size_t>(config.get_uint("trainer.heldout", 64));
    s.trainer.batch_per_iteration =
        static_cast<std::size_t>(config.get_uint("trainer.batch", 32));
    s.trainer.catalog_size =
        static_cast<std::size_t>(config.get_uint("trainer.catalog", 8));
    s.trainer.answer_candidates =
        static_cast<std::size_t>(config.get_uint("trainer.answers", 4));
    s.trainer.max_steps =
        static_cast<std::size_t>(config.get_uint("trainer.max_steps", 5));
    s.trainer.epochs_per_group =
        static_cast<std::size_t>(config.get_uint("trainer.epochs", 1));
    s.trainer.learning_rate = config.get_double("trainer.lr", 0.1);
    s.trainer.warm_start = config.get_double("trainer.warm_start", 0.0);
    s.trainer.rewards = s.rewards;
    s.trainer.grpo = s.grpo;
    s.trainer.validate();

    s.record_fields.id = config.get_string("data.id_field", "id");
    s.record_fields.question =
        config.get_string("data.question_field", "question");
    s.record_fields.reasoning =
        config.get_string("data.reasoning_field", "reasoning");
    s.record_fields.answer = config.get_string("data.answer_field", "answer");
    s.record_fields.image = config.get_string("data.image_field", "image_ref");
    s.generated_fields.id = config.get_string("gen.id_field", "id");
    s.generated_fields.output =
        config.get_string("gen.output_field", "output");

    config.reject_unconsumed();
    return s;
  }
};

}  // namespace trajrl
