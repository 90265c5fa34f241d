#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * Parsing of tagged model outputs into reasoning trajectories.
 *
 * A well-formed output looks like
 *
 *   <think> step one. step two. </think><answer> final answer </answer>
 *
 * and maps to a Trajectory: the segmented reasoning sentences followed by
 * the answer as the last step.
 */

namespace trajrl {

/// Thrown when a trajectory is requested from content that has none.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct ParsedOutput {
  std::string think_text;   // content between <think> tags, untrimmed
  std::string answer_text;  // content between <answer> tags, untrimmed
  bool well_formed = false;
};

/// Ordered reasoning steps; the last element is always the final answer.
struct Trajectory {
  std::vector<std::string> steps;

  std::size_t size() const { return steps.size(); }
  std::size_t final_answer_index() const { return steps.size() - 1; }
  const std::string& final_answer() const { return steps.back(); }

  bool operator==(const Trajectory& other) const = default;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Position of `tag` if it occurs exactly once, npos otherwise.
inline std::size_t find_unique(std::string_view text, std::string_view tag) {
  std::size_t first = text.find(tag);
  if (first == std::string_view::npos) return std::string_view::npos;
  if (text.find(tag, first + tag.size()) != std::string_view::npos)
    return std::string_view::npos;
  return first;
}

}  // namespace detail

/**
 * Extract think/answer contents from a raw model output.
 *
 * well_formed requires each of the four tags exactly once, in the order
 * <think> </think> <answer> </answer>; tag names are case-sensitive.
 * Content outside the tags is ignored, so a preamble before <think> does
 * not invalidate the output. Never throws; malformed input just yields
 * well_formed == false with empty contents.
 */
inline ParsedOutput parse_tagged_output(std::string_view text) {
  constexpr std::string_view kThinkOpen = "<think>";
  constexpr std::string_view kThinkClose = "</think>";
  constexpr std::string_view kAnswerOpen = "<answer>";
  constexpr std::string_view kAnswerClose = "</answer>";

  const std::size_t p0 = detail::find_unique(text, kThinkOpen);
  const std::size_t p1 = detail::find_unique(text, kThinkClose);
  const std::size_t p2 = detail::find_unique(text, kAnswerOpen);
  const std::size_t p3 = detail::find_unique(text, kAnswerClose);

  ParsedOutput out;
  const auto npos = std::string_view::npos;
  if (p0 == npos || p1 == npos || p2 == npos || p3 == npos) return out;
  if (!(p0 < p1 && p1 < p2 && p2 < p3)) return out;

  out.think_text = std::string(
      text.substr(p0 + kThinkOpen.size(), p1 - (p0 + kThinkOpen.size())));
  out.answer_text = std::string(
      text.substr(p2 + kAnswerOpen.size(), p3 - (p2 + kAnswerOpen.size())));
  out.well_formed = true;
  return out;
}

/**
 * Split think-text into sentence steps.
 *
 * A boundary is '.', '!' or '?' followed by whitespace or end of text; the
 * terminal punctuation stays with its sentence. Pieces are trimmed and
 * empty pieces dropped. Abbreviations are not special-cased, so "e.g. x"
 * splits after "e.g." -- deterministic over clever.
 */
inline std::vector<std::string> segment_steps(std::string_view think_text) {
  std::vector<std::string> steps;
  std::size_t start = 0;
  for (std::size_t i = 0; i < think_text.size(); ++i) {
    const char c = think_text[i];
    const bool terminal = (c == '.' || c == '!' || c == '?');
    const bool at_end = (i + 1 == think_text.size());
    if (terminal && (at_end || detail::is_space(think_text[i + 1]))) {
      std::string piece = detail::trim(think_text.substr(start, i + 1 - start));
      if (!piece.empty()) steps.push_back(std::move(piece));
      start = i + 1;
    }
  }
  if (start < think_text.size()) {
    std::string piece = detail::trim(think_text.substr(start));
    if (!piece.empty()) steps.push_back(std::move(piece));
  }
  return steps;
}

/**
 * Segmented reasoning steps plus the trimmed answer as the final step.
 * Throws ParseError when the output is malformed or the answer trims to
 * nothing (a trajectory always has a non-empty final answer).
 */
inline Trajectory build_trajectory(const ParsedOutput& parsed) {
  if (!parsed.well_formed)
    throw ParseError("cannot build trajectory from malformed output");
  std::string answer = detail::trim(parsed.answer_text);
  if (answer.empty())
    throw ParseError("answer text is empty after trimming");
  Trajectory traj;
  traj.steps = segment_steps(parsed.think_text);
  traj.steps.push_back(std::move(answer));
  return traj;
}

/**
 * Inverse of parsing for trajectories whose reasoning steps each end in
 * terminal punctuation: render -> parse -> render is byte-identical.
 */
inline std::string render_tagged(const Trajectory& traj) {
  std::string think;
  for (std::size_t i = 0; i + 1 < traj.steps.size(); ++i) {
    if (!think.empty()) think += ' ';
    think += traj.steps[i];
  }
  return "<think>" + think + "</think><answer>" + traj.final_answer() +
         "</answer>";
}

}  // namespace trajrl
