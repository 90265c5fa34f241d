#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrl/random.hpp"
#include "trajrl/trajectory.hpp"

/**
 * Desk-scale stand-in for the RL environment: synthetic reasoning tasks
 * over a small catalog of step sentences, and a tabular softmax policy
 * whose log-probabilities and their gradients are exact. Sampled outputs
 * render to the tagged format, so the reward path sees the same text shape
 * a language model would produce.
 */

namespace trajrl {

class ToyError : public std::runtime_error {
 public:
  explicit ToyError(const std::string& what) : std::runtime_error(what) {}
};

struct ToyTask {
  std::string prompt_id;
  std::vector<std::string> step_catalog;       // candidate reasoning sentences
  std::vector<std::string> answer_candidates;  // >= 2 possible final answers
  Trajectory gt_trajectory;                    // catalog steps + answer
  std::string gt_answer;
  std::size_t max_steps = 5;  // bound on trajectory length incl. the answer
};

namespace detail {

inline const std::vector<std::string>& subject_bank() {
  static const std::vector<std::string> bank = {
      "The scan",  "The image",  "The region", "The contour",
      "The sample", "The signal", "The chart",  "The frame"};
  return bank;
}
inline const std::vector<std::string>& verb_bank() {
  static const std::vector<std::string> bank = {
      "shows", "suggests", "contains", "lacks",
      "highlights", "obscures", "reveals", "tracks"};
  return bank;
}
inline const std::vector<std::string>& object_bank() {
  static const std::vector<std::string> bank = {
      "a dense area", "a faint edge",   "a round mass", "a clear border",
      "two lobes",    "an even texture", "a bright spot", "a narrow band"};
  return bank;
}
inline const std::vector<std::string>& answer_bank() {
  static const std::vector<std::string> bank = {"yes",   "no",    "left",
                                                "right", "upper", "lower",
                                                "stable", "acute"};
  return bank;
}

inline std::string compose_sentence(Rng& rng) {
  const auto& s = subject_bank();
  const auto& v = verb_bank();
  const auto& o = object_bank();
  return s[uniform_index(rng, s.size())] + " " +
         v[uniform_index(rng, v.size())] + " " +
         o[uniform_index(rng, o.size())] + ".";
}

}  // namespace detail

/**
 * Deterministic task suite: each task gets catalog_size distinct step
 * sentences, answer_candidates distinct answers, and a ground truth of
 * 1..max_steps-1 distinct catalog steps in random order plus one answer.
 */
inline std::vector<ToyTask> generate_synthetic_tasks(
    std::uint64_t seed, std::size_t count, std::size_t catalog_size,
    std::size_t max_steps, std::size_t answer_candidates = 4) {
  if (count < 1) throw ToyError("count must be >= 1");
  if (catalog_size < 4) throw ToyError("catalog_size must be >= 4");
  if (max_steps < 2) throw ToyError("max_steps must be >= 2");
  if (answer_candidates < 2 ||
      answer_candidates > detail::answer_bank().size())
    throw ToyError("answer_candidates must be in [2, " +
                   std::to_string(detail::answer_bank().size()) + "]");

  Rng rng(detail::splitmix64(seed) ^ 0x746f797461736bULL);
  std::vector<ToyTask> tasks;
  tasks.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    ToyTask task;
    task.prompt_id = "task-" + std::to_string(t);
    task.max_steps = max_steps;

    while (task.step_catalog.size() < catalog_size) {
      std::string sentence = detail::compose_sentence(rng);
      if (std::find(task.step_catalog.begin(), task.step_catalog.end(),
                    sentence) == task.step_catalog.end())
        task.step_catalog.push_back(std::move(sentence));
    }

    std::vector<std::string> answers = detail::answer_bank();
    shuffle(answers, rng);
    answers.resize(answer_candidates);
    task.answer_candidates = std::move(answers);

    const std::size_t len = 1 + uniform_index(rng, max_steps - 1);
    std::vector<std::size_t> order(catalog_size);
    for (std::size_t k = 0; k < catalog_size; ++k) order[k] = k;
    shuffle(order, rng);
    for (std::size_t k = 0; k < len; ++k)
      task.gt_trajectory.steps.push_back(task.step_catalog[order[k]]);
    task.gt_answer =
        task.answer_candidates[uniform_index(rng, answer_candidates)];
    task.gt_trajectory.steps.push_back(task.gt_answer);

    tasks.push_back(std::move(task));
  }
  return tasks;
}

/**
 * Tabular softmax policy: one logit per (prompt, position, action). Actions
 * 0..K-1 emit catalog steps, K..K+A-1 emit an answer and terminate. The
 * final position admits answer actions only, so every sampled sequence ends
 * in an answer within max_steps.
 */
class ToyPolicy {
 public:
  ToyPolicy(std::size_t num_step_actions, std::size_t num_answer_actions,
            std::size_t max_positions)
      : num_step_actions_(num_step_actions),
        num_answer_actions_(num_answer_actions),
        max_positions_(max_positions) {
    if (num_answer_actions < 1) throw ToyError("need at least one answer action");
    if (max_positions < 1) throw ToyError("need at least one position");
  }

  std::size_t num_step_actions() const { return num_step_actions_; }
  std::size_t num_answer_actions() const { return num_answer_actions_; }
  std::size_t num_actions() const {
    return num_step_actions_ + num_answer_actions_;
  }
  std::size_t max_positions() const { return max_positions_; }
  std::size_t params_per_prompt() const {
    return max_positions_ * num_actions();
  }

  bool is_answer_action(std::size_t action) const {
    return action >= num_step_actions_;
  }

  /// Mutable logits block for a prompt, zero-initialized on first touch.
  std::vector<double>& logits_for(const std::string& prompt_id) {
    auto it = logits_.find(prompt_id);
    if (it == logits_.end())
      it = logits_.emplace(prompt_id,
                           std::vector<double>(params_per_prompt(), 0.0))
               .first;
    return it->second;
  }

  /// Read-only view; untouched prompts read as all-zero logits.
  const std::vector<double>& logits_view(const std::string& prompt_id) const {
    auto it = logits_.find(prompt_id);
    if (it != logits_.end()) return it->second;
    if (zeros_.size() != params_per_prompt())
      zeros_.assign(params_per_prompt(), 0.0);
    return zeros_;
  }

  /// Legal actions at a position: everything, except answers-only last.
  bool is_legal(std::size_t position, std::size_t action) const {
    if (position + 1 == max_positions_) return is_answer_action(action);
    return true;
  }

 private:
  std::size_t num_step_actions_;
  std::size_t num_answer_actions_;
  std::size_t max_positions_;
  std::map<std::string, std::vector<double>> logits_;
  mutable std::vector<double> zeros_;
};

/// One sampled output with its exact log-prob and log-prob gradient.
struct SampledOutput {
  std::vector<std::size_t> actions;  // last action is an answer
  double logp = 0.0;
  std::vector<double> logp_gradient;  // w.r.t. the prompt's logits block
};

namespace detail {

// Softmax probabilities over the legal actions of one position; illegal
// actions get probability 0.
inline std::vector<double> position_probs(const ToyPolicy& policy,
                                          const std::vector<double>& logits,
                                          std::size_t position) {
  const std::size_t num_actions = policy.num_actions();
  std::vector<double> probs(num_actions, 0.0);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < num_actions; ++a)
    if (policy.is_legal(position, a))
      max_logit = std::max(max_logit, logits[position * num_actions + a]);
  double z = 0.0;
  for (std::size_t a = 0; a < num_actions; ++a) {
    if (!policy.is_legal(position, a)) continue;
    probs[a] = std::exp(logits[position * num_actions + a] - max_logit);
    z += probs[a];
  }
  for (double& p : probs) p /= z;
  return probs;
}

}  // namespace detail

/// Ancestral sample from the factorized softmax, with analytic gradient.
inline SampledOutput sample_output(const ToyPolicy& policy,
                                   const ToyTask& task, Rng& rng) {
  const std::vector<double>& logits = policy.logits_view(task.prompt_id);
  SampledOutput out;
  out.logp_gradient.assign(policy.params_per_prompt(), 0.0);

  for (std::size_t t = 0; t < policy.max_positions(); ++t) {
    const std::vector<double> probs =
        detail::position_probs(policy, logits, t);
    const double u = uniform_double(rng);
    double acc = 0.0;
    // Fallback is the last answer action, legal at every position, in case
    // rounding leaves the cumulative sum a hair below u.
    std::size_t chosen = policy.num_actions() - 1;
    for (std::size_t a = 0; a < policy.num_actions(); ++a) {
      acc += probs[a];
      if (u < acc) {
        chosen = a;
        break;
      }
    }

    out.actions.push_back(chosen);
    out.logp += std::log(probs[chosen]);
    for (std::size_t a = 0; a < policy.num_actions(); ++a) {
      if (!policy.is_legal(t, a)) continue;
      const double indicator = (a == chosen) ? 1.0 : 0.0;
      out.logp_gradient[t * policy.num_actions() + a] = indicator - probs[a];
    }
    if (policy.is_answer_action(chosen)) break;
  }
  return out;
}

/// Greedy argmax decode; ties resolve to the lowest action index.
inline std::vector<std::size_t> greedy_actions(const ToyPolicy& policy,
                                               const ToyTask& task) {
  const std::vector<double>& logits = policy.logits_view(task.prompt_id);
  std::vector<std::size_t> actions;
  for (std::size_t t = 0; t < policy.max_positions(); ++t) {
    std::size_t best = 0;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < policy.num_actions(); ++a) {
      if (!policy.is_legal(t, a)) continue;
      const double l = logits[t * policy.num_actions() + a];
      if (l > best_logit) {
        best_logit = l;
        best = a;
      }
    }
    actions.push_back(best);
    if (policy.is_answer_action(best)) break;
  }
  return actions;
}

/// Log-probability of a fixed action sequence under the given policy.
inline double logp_of(const ToyPolicy& policy, const ToyTask& task,
                      const std::vector<std::size_t>& actions) {
  const std::vector<double>& logits = policy.logits_view(task.prompt_id);
  double logp = 0.0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const std::vector<double> probs =
        detail::position_probs(policy, logits, t);
    logp += std::log(probs[actions[t]]);
  }
  return logp;
}

/// Trajectory spelled by an action sequence: catalog steps plus the answer.
inline Trajectory actions_to_trajectory(const ToyPolicy& policy,
                                        const ToyTask& task,
                                        const std::vector<std::size_t>& actions) {
  Trajectory traj;
  for (std::size_t action : actions) {
    if (policy.is_answer_action(action)) {
      traj.steps.push_back(
          task.answer_candidates[action - policy.num_step_actions()]);
      break;
    }
    traj.steps.push_back(task.step_catalog[action]);
  }
  return traj;
}

/// Tagged text for an action sequence; always well-formed by construction.
inline std::string render_output(const ToyPolicy& policy, const ToyTask& task,
                                 const std::vector<std::size_t>& actions) {
  return render_tagged(actions_to_trajectory(policy, task, actions));
}

/// A policy sized for a task suite generated with shared dimensions.
inline ToyPolicy make_policy_for(const std::vector<ToyTask>& tasks) {
  if (tasks.empty()) throw ToyError("no tasks");
  const auto& t = tasks.front();
  return ToyPolicy(t.step_catalog.size(), t.answer_candidates.size(),
                   t.max_steps);
}

}  // namespace trajrl
