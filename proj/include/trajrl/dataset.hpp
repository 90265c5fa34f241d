#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajrl/reward.hpp"
#include "trajrl/trajectory.hpp"

/**
 * JSONL dataset ingestion and score serialization. Records pair by an
 * explicit id, never by line order, and every error report carries the
 * offending line number.
 */

namespace trajrl {

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

/// Source field names, remappable for datasets with different schemas.
struct RecordFields {
  std::string id = "id";
  std::string question = "question";
  std::string reasoning = "reasoning";
  std::string answer = "answer";
  std::string image = "image_ref";
};

struct GeneratedFields {
  std::string id = "id";
  std::string output = "output";
};

/**
 * One ground-truth sample. `reasoning` may arrive as a raw think-text
 * string (segmented later) or as a pre-split list of steps; records without
 * reasoning are answer-only. `image_ref` is carried through untouched.
 */
struct ReasoningRecord {
  std::string id;
  std::string question;
  std::vector<std::string> reasoning_steps;  // used when pre_split
  std::string reasoning_text;                // used otherwise
  bool pre_split = false;
  std::string answer;
  std::string image_ref;
};

/// Ground-truth trajectory of a record: reasoning steps plus the answer.
inline Trajectory record_trajectory(const ReasoningRecord& record) {
  Trajectory traj;
  if (record.pre_split) {
    for (const auto& step : record.reasoning_steps) {
      std::string trimmed = detail::trim(step);
      if (trimmed.empty())
        throw DatasetError("record " + record.id +
                           ": empty reasoning step in pre-split list");
      traj.steps.push_back(std::move(trimmed));
    }
  } else {
    traj.steps = segment_steps(record.reasoning_text);
  }
  std::string answer = detail::trim(record.answer);
  if (answer.empty())
    throw DatasetError("record " + record.id + ": empty answer");
  traj.steps.push_back(std::move(answer));
  return traj;
}

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& path,
                                       std::size_t lineno,
                                       const std::string& line) {
  try {
    nlohmann::json obj = nlohmann::json::parse(line);
    if (!obj.is_object())
      throw DatasetError(path + ":" + std::to_string(lineno) +
                         ": expected a JSON object");
    return obj;
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(path + ":" + std::to_string(lineno) +
                       ": malformed JSON: " + e.what());
  }
}

}  // namespace detail

/**
 * Read a ground-truth JSONL file. Requires unique non-empty ids and
 * non-empty answers; question, reasoning and image are optional.
 */
inline std::vector<ReasoningRecord> read_dataset(
    const std::string& path, const RecordFields& fields = {}) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset: " + path);

  std::vector<ReasoningRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json obj = detail::parse_jsonl_line(path, lineno, line);

    auto require_string = [&](const std::string& key) {
      if (!obj.contains(key) || !obj[key].is_string() ||
          obj[key].get<std::string>().empty())
        throw DatasetError(path + ":" + std::to_string(lineno) +
                           ": missing required field \"" + key + "\"");
      return obj[key].get<std::string>();
    };

    ReasoningRecord record;
    record.id = require_string(fields.id);
    record.answer = require_string(fields.answer);
    if (!seen_ids.insert(record.id).second)
      throw DatasetError(path + ":" + std::to_string(lineno) +
                         ": duplicate id \"" + record.id + "\"");

    if (obj.contains(fields.question) && obj[fields.question].is_string())
      record.question = obj[fields.question].get<std::string>();
    if (obj.contains(fields.image) && obj[fields.image].is_string())
      record.image_ref = obj[fields.image].get<std::string>();

    if (obj.contains(fields.reasoning)) {
      const auto& r = obj[fields.reasoning];
      if (r.is_string()) {
        record.reasoning_text = r.get<std::string>();
      } else if (r.is_array()) {
        record.pre_split = true;
        for (const auto& step : r) {
          if (!step.is_string())
            throw DatasetError(path + ":" + std::to_string(lineno) +
                               ": reasoning array entries must be strings");
          record.reasoning_steps.push_back(step.get<std::string>());
        }
      } else {
        throw DatasetError(path + ":" + std::to_string(lineno) +
                           ": reasoning must be a string or array of strings");
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

/**
 * Write records back out as JSONL with the given field names. Together with
 * read_dataset this is the identity on records.
 */
inline void write_dataset(const std::string& path,
                          const std::vector<ReasoningRecord>& records,
                          const RecordFields& fields = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot open output file: " + path);
  for (const auto& record : records) {
    nlohmann::json obj;
    obj[fields.id] = record.id;
    if (!record.question.empty()) obj[fields.question] = record.question;
    if (record.pre_split)
      obj[fields.reasoning] = record.reasoning_steps;
    else if (!record.reasoning_text.empty())
      obj[fields.reasoning] = record.reasoning_text;
    obj[fields.answer] = record.answer;
    if (!record.image_ref.empty()) obj[fields.image] = record.image_ref;
    out << obj.dump() << "\n";
  }
  if (!out) throw DatasetError("write failed: " + path);
}

/// One generated output, paired to ground truth by id.
struct GeneratedRecord {
  std::string id;
  std::string output;
};

inline std::vector<GeneratedRecord> read_generated(
    const std::string& path, const GeneratedFields& fields = {}) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open generated file: " + path);

  std::vector<GeneratedRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json obj = detail::parse_jsonl_line(path, lineno, line);
    GeneratedRecord record;
    if (!obj.contains(fields.id) || !obj[fields.id].is_string() ||
        obj[fields.id].get<std::string>().empty())
      throw DatasetError(path + ":" + std::to_string(lineno) +
                         ": missing required field \"" + fields.id + "\"");
    if (!obj.contains(fields.output) || !obj[fields.output].is_string())
      throw DatasetError(path + ":" + std::to_string(lineno) +
                         ": missing required field \"" + fields.output + "\"");
    record.id = obj[fields.id].get<std::string>();
    record.output = obj[fields.output].get<std::string>();
    if (!seen_ids.insert(record.id).second)
      throw DatasetError(path + ":" + std::to_string(lineno) +
                         ": duplicate id \"" + record.id + "\"");
    records.push_back(std::move(record));
  }
  return records;
}

namespace detail {

/// Shortest-of-10-significant-digits rendering; round-trips through a
/// double parse because 10 digits are well inside double precision.
inline std::string format_double10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace detail

struct ScoredRecord {
  std::string id;
  RewardBreakdown breakdown;
};

/**
 * Write score breakdowns as JSONL with a fixed key order and floats at 10
 * significant digits; absent components serialize as null.
 */
inline void write_scores(const std::string& path,
                         const std::vector<ScoredRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot open output file: " + path);
  auto field = [](const std::optional<double>& v) {
    return v ? detail::format_double10(*v) : std::string("null");
  };
  for (const auto& record : records) {
    out << "{\"id\":" << nlohmann::json(record.id).dump()
        << ",\"r_form\":" << field(record.breakdown.r_form)
        << ",\"r_exact\":" << field(record.breakdown.r_exact)
        << ",\"r_dtw\":" << field(record.breakdown.r_dtw)
        << ",\"r_nw\":" << field(record.breakdown.r_nw)
        << ",\"total\":" << detail::format_double10(record.breakdown.total)
        << "}\n";
  }
  if (!out) throw DatasetError("write failed: " + path);
}

/// Inverse of write_scores, for round-trip checks and downstream tooling.
inline std::vector<ScoredRecord> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open scores file: " + path);
  std::vector<ScoredRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json obj = detail::parse_jsonl_line(path, lineno, line);
    ScoredRecord record;
    record.id = obj.at("id").get<std::string>();
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
      return obj[key].get<double>();
    };
    record.breakdown.r_form = opt("r_form");
    record.breakdown.r_exact = opt("r_exact");
    record.breakdown.r_dtw = opt("r_dtw");
    record.breakdown.r_nw = opt("r_nw");
    record.breakdown.total = obj.at("total").get<double>();
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace trajrl
