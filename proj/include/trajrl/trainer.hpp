#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrl/grpo.hpp"
#include "trajrl/random.hpp"
#include "trajrl/reward.hpp"
#include "trajrl/toy.hpp"

/**
 * End-to-end GRPO training loop over the toy policy: sample a group per
 * prompt, render to tagged text, score with the composite reward, update
 * the prompt's logits with the exact loss gradient. Deterministic in
 * (config, seed) down to the last bit.
 */

namespace trajrl {

struct TrainerConfig {
  std::uint64_t seed = 1;
  std::size_t iterations = 300;
  std::size_t group_size = 8;
  std::size_t num_tasks = 200;
  std::size_t heldout_tasks = 64;
  std::size_t batch_per_iteration = 32;  // prompts updated per iteration
  std::size_t catalog_size = 8;
  std::size_t answer_candidates = 4;
  std::size_t max_steps = 5;
  std::size_t epochs_per_group = 1;  // extra surrogate steps reusing a group
  double learning_rate = 0.1;
  double warm_start = 0.0;  // SFT-style logit boost toward the ground truth

  RewardConfig rewards;
  GrpoConfig grpo;

  void validate() const {
    if (iterations < 1) throw ToyError("iterations must be >= 1");
    if (group_size < 2) throw ToyError("group_size must be >= 2");
    if (num_tasks < 1) throw ToyError("num_tasks must be >= 1");
    if (batch_per_iteration < 1)
      throw ToyError("batch_per_iteration must be >= 1");
    if (epochs_per_group < 1) throw ToyError("epochs_per_group must be >= 1");
    if (!(learning_rate > 0.0)) throw ToyError("learning_rate must be > 0");
    rewards.validate();
    grpo.validate();
  }
};

struct IterationStats {
  std::size_t iteration = 0;
  double mean_reward = 0.0;        // over all sampled outputs this iteration
  double mean_dtw = 0.0;           // over sampled outputs that had r_dtw
  double mean_kl = 0.0;            // kl_estimate(ref, new) at sampling time
  double train_accuracy = 0.0;     // greedy exact-match on the training suite
  double heldout_accuracy = 0.0;   // greedy exact-match on unseen prompts
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::vector<IterationStats> iterations;
  double final_train_accuracy = 0.0;
  double final_heldout_accuracy = 0.0;
  double final_mean_dtw = 0.0;  // greedy mean R_DTW on the training suite
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_dtw = 0.0;
};

/**
 * Greedy-decode every task and report exact-match accuracy plus the mean
 * DTW reward of the decoded trajectories. Read-only on the policy.
 */
inline EvalResult evaluate(const ToyPolicy& policy,
                           const std::vector<ToyTask>& tasks,
                           const Embedder& embedder) {
  if (tasks.empty()) throw ToyError("no tasks to evaluate");
  EvalResult result;
  for (const auto& task : tasks) {
    const auto actions = greedy_actions(policy, task);
    const Trajectory traj = actions_to_trajectory(policy, task, actions);
    result.accuracy +=
        exact_match_reward(traj.final_answer(), task.gt_answer);
    result.mean_dtw += dtw_reward(embedder.embed_trajectory(traj),
                                  embedder.embed_trajectory(task.gt_trajectory));
  }
  result.accuracy /= static_cast<double>(tasks.size());
  result.mean_dtw /= static_cast<double>(tasks.size());
  return result;
}

inline EvalResult evaluate(const ToyPolicy& policy,
                           const std::vector<ToyTask>& tasks,
                           const HashEmbedderConfig& embedder_config) {
  return evaluate(policy, tasks, Embedder(embedder_config));
}

namespace detail {

// Warm-start: push the logits of the ground-truth action sequence up by
// `strength`, a cheap stand-in for an SFT stage.
inline void warm_start_policy(ToyPolicy& policy, const ToyTask& task,
                              double strength) {
  std::vector<double>& logits = policy.logits_for(task.prompt_id);
  const std::size_t num_actions = policy.num_actions();
  const std::size_t reasoning = task.gt_trajectory.size() - 1;
  for (std::size_t t = 0; t < reasoning; ++t) {
    const auto& step = task.gt_trajectory.steps[t];
    for (std::size_t k = 0; k < task.step_catalog.size(); ++k)
      if (task.step_catalog[k] == step) logits[t * num_actions + k] += strength;
  }
  for (std::size_t k = 0; k < task.answer_candidates.size(); ++k)
    if (task.answer_candidates[k] == task.gt_answer)
      logits[reasoning * num_actions + task.step_catalog.size() + k] +=
          strength;
}

}  // namespace detail

/**
 * Run the full loop and report per-iteration statistics. Each iteration
 * visits batch_per_iteration random prompts; each visited prompt gets one
 * sampled group and one gradient step (more with epochs_per_group > 1,
 * which reuses the group with refreshed importance ratios).
 */
inline TrainReport train(const TrainerConfig& config) {
  config.validate();

  const auto tasks =
      generate_synthetic_tasks(config.seed, config.num_tasks,
                               config.catalog_size, config.max_steps,
                               config.answer_candidates);
  const auto heldout = generate_synthetic_tasks(
      detail::splitmix64(config.seed ^ 0x68656c646f7574ULL),
      config.heldout_tasks > 0 ? config.heldout_tasks : 1,
      config.catalog_size, config.max_steps, config.answer_candidates);

  ToyPolicy policy = make_policy_for(tasks);
  if (config.warm_start != 0.0)
    for (const auto& task : tasks)
      detail::warm_start_policy(policy, task, config.warm_start);
  const ToyPolicy reference = policy;  // pi_ref, frozen

  const Embedder embedder(config.rewards.embedder);
  Rng rng(detail::splitmix64(config.seed) ^ 0x747261696eULL);

  TrainReport report;
  report.seed = config.seed;
  report.iterations.reserve(config.iterations);

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    double dtw_sum = 0.0;
    std::size_t dtw_count = 0;
    double kl_sum = 0.0;

    for (std::size_t b = 0; b < config.batch_per_iteration; ++b) {
      const ToyTask& task = tasks[uniform_index(rng, tasks.size())];

      // Sample the group under the current policy; pi_theta_old is the
      // policy at sampling time.
      std::vector<SampledOutput> outputs;
      outputs.reserve(config.group_size);
      GroupSample group;
      for (std::size_t i = 0; i < config.group_size; ++i) {
        SampledOutput sample = sample_output(policy, task, rng);
        const std::string text = render_output(policy, task, sample.actions);
        const RewardBreakdown breakdown = composite_reward(
            text, task.gt_trajectory, task.gt_answer, config.rewards,
            embedder);
        group.rewards.push_back(breakdown.total);
        group.logp_new.push_back(sample.logp);
        group.logp_old.push_back(sample.logp);
        group.logp_ref.push_back(logp_of(reference, task, sample.actions));

        reward_sum += breakdown.total;
        ++reward_count;
        if (breakdown.r_dtw) {
          dtw_sum += *breakdown.r_dtw;
          ++dtw_count;
        }
        kl_sum += kl_estimate(group.logp_ref.back(), sample.logp);
        outputs.push_back(std::move(sample));
      }

      const GroupStats stats = group_advantages(group.rewards, config.grpo);
      for (std::size_t epoch = 0; epoch < config.epochs_per_group; ++epoch) {
        if (epoch > 0) {
          // Refresh current-policy log-probs and gradients; logp_old stays
          // pinned to the sampling-time values.
          for (std::size_t i = 0; i < config.group_size; ++i) {
            group.logp_new[i] = logp_of(policy, task, outputs[i].actions);
            // Gradients of logp under the refreshed policy.
            const auto& logits = policy.logits_view(task.prompt_id);
            auto& grad = outputs[i].logp_gradient;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t t = 0; t < outputs[i].actions.size(); ++t) {
              const auto probs = detail::position_probs(policy, logits, t);
              for (std::size_t a = 0; a < policy.num_actions(); ++a) {
                if (!policy.is_legal(t, a)) continue;
                const double ind = (a == outputs[i].actions[t]) ? 1.0 : 0.0;
                grad[t * policy.num_actions() + a] = ind - probs[a];
              }
            }
          }
        }
        std::vector<std::vector<double>> logp_grads;
        logp_grads.reserve(config.group_size);
        for (const auto& o : outputs) logp_grads.push_back(o.logp_gradient);
        const std::vector<double> grad = grpo_loss_gradient(
            group, stats.advantages, config.grpo, logp_grads);

        std::vector<double>& logits = policy.logits_for(task.prompt_id);
        for (std::size_t k = 0; k < logits.size(); ++k)
          logits[k] -= config.learning_rate * grad[k];
      }
    }

    IterationStats stats;
    stats.iteration = iter;
    stats.mean_reward =
        reward_count > 0 ? reward_sum / static_cast<double>(reward_count) : 0.0;
    stats.mean_dtw =
        dtw_count > 0 ? dtw_sum / static_cast<double>(dtw_count) : 0.0;
    stats.mean_kl =
        reward_count > 0 ? kl_sum / static_cast<double>(reward_count) : 0.0;
    stats.train_accuracy = evaluate(policy, tasks, embedder).accuracy;
    stats.heldout_accuracy = evaluate(policy, heldout, embedder).accuracy;
    report.iterations.push_back(stats);
  }

  const EvalResult final_train = evaluate(policy, tasks, embedder);
  report.final_train_accuracy = final_train.accuracy;
  report.final_mean_dtw = final_train.mean_dtw;
  report.final_heldout_accuracy = evaluate(policy, heldout, embedder).accuracy;
  return report;
}

}  // namespace trajrl
