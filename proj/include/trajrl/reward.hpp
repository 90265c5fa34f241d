#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trajrl/dtw.hpp"
#include "trajrl/embedding.hpp"
#include "trajrl/nw.hpp"
#include "trajrl/trajectory.hpp"

/**
 * Composite per-sample reward: format + exact-match + trajectory rewards
 * (DTW, NW) summed without weighting by default. Malformed outputs score
 * zero everywhere instead of erroring, since the RL loop needs a reward for
 * every sampled output.
 */

namespace trajrl {

class RewardError : public std::runtime_error {
 public:
  explicit RewardError(const std::string& what) : std::runtime_error(what) {}
};

struct RewardConfig {
  bool enable_form = true;
  bool enable_exact = true;
  bool enable_dtw = true;
  bool enable_nw = false;

  // Component weights, all 1 by default: the composite is an unweighted sum.
  double form_weight = 1.0;
  double exact_weight = 1.0;
  double dtw_weight = 1.0;
  double nw_weight = 1.0;

  HashEmbedderConfig embedder;
  NwParams nw;

  void validate() const {
    if (!enable_form && !enable_exact && !enable_dtw && !enable_nw)
      throw RewardError("at least one reward component must be enabled");
    nw.validate();
  }
};

/// Components are present iff enabled and computable for the sample.
struct RewardBreakdown {
  std::optional<double> r_form;   // 0 or 1
  std::optional<double> r_exact;  // 0 or 1
  std::optional<double> r_dtw;    // in [0, 1]
  std::optional<double> r_nw;     // in [0, 1]
  double total = 0.0;
};

/// 1 iff the text parses as <think>..</think><answer>..</answer>.
inline double format_reward(std::string_view text) {
  return parse_tagged_output(text).well_formed ? 1.0 : 0.0;
}

/**
 * Canonical answer form: trim, collapse internal whitespace runs to one
 * space, ASCII-lowercase, strip one trailing '.'.
 */
inline std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : detail::trim(text)) {
    if (detail::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

/// 1 iff the normalized answers are equal and non-empty.
inline double exact_match_reward(std::string_view generated_answer,
                                 std::string_view ground_truth_answer) {
  const std::string a = normalize_answer(generated_answer);
  const std::string b = normalize_answer(ground_truth_answer);
  return (!a.empty() && a == b) ? 1.0 : 0.0;
}

/**
 * Full per-sample breakdown for a raw generated text against a ground-truth
 * trajectory and answer. Total is the weighted sum of present components;
 * trajectory rewards are absent whenever no generated trajectory exists.
 */
inline RewardBreakdown composite_reward(std::string_view generated_text,
                                        const Trajectory& gt_trajectory,
                                        std::string_view gt_answer,
                                        const RewardConfig& config,
                                        const Embedder& embedder) {
  config.validate();
  if (gt_trajectory.steps.empty())
    throw RewardError("ground-truth trajectory is empty");

  const ParsedOutput parsed = parse_tagged_output(generated_text);

  RewardBreakdown out;
  if (config.enable_form) out.r_form = parsed.well_formed ? 1.0 : 0.0;
  if (config.enable_exact)
    out.r_exact = parsed.well_formed
                      ? exact_match_reward(parsed.answer_text, gt_answer)
                      : 0.0;

  std::optional<Trajectory> generated;
  if (parsed.well_formed) {
    try {
      generated = build_trajectory(parsed);
    } catch (const ParseError&) {
      // tags fine but the answer trims to nothing: no trajectory rewards
    }
  }
  if (generated && (config.enable_dtw || config.enable_nw)) {
    const EmbeddingSequence gen_seq = embedder.embed_trajectory(*generated);
    const EmbeddingSequence gt_seq = embedder.embed_trajectory(gt_trajectory);
    if (config.enable_dtw) out.r_dtw = dtw_reward(gen_seq, gt_seq);
    if (config.enable_nw) out.r_nw = nw_reward(gen_seq, gt_seq, config.nw);
  }

  double total = 0.0;
  if (out.r_form) total += config.form_weight * *out.r_form;
  if (out.r_exact) total += config.exact_weight * *out.r_exact;
  if (out.r_dtw) total += config.dtw_weight * *out.r_dtw;
  if (out.r_nw) total += config.nw_weight * *out.r_nw;
  out.total = total;
  return out;
}

inline RewardBreakdown composite_reward(std::string_view generated_text,
                                        const Trajectory& gt_trajectory,
                                        std::string_view gt_answer,
                                        const RewardConfig& config) {
  return composite_reward(generated_text, gt_trajectory, gt_answer, config,
                          Embedder(config.embedder));
}

}  // namespace trajrl
