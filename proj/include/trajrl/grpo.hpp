#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * Group Relative Policy Optimization as pure numeric operations: rewards in,
 * group-standardized advantages, clipped importance-sampling surrogate with
 * a KL penalty to a reference policy, and the exact analytic gradient of the
 * per-prompt loss. No critic anywhere, that is the point of the method.
 */

namespace trajrl {

class GrpoError : public std::runtime_error {
 public:
  explicit GrpoError(const std::string& what) : std::runtime_error(what) {}
};

struct GrpoConfig {
  double epsilon = 0.2;          // surrogate clip width, in (0, 1)
  double beta = 0.04;            // KL penalty coefficient, >= 0
  double sigma_tolerance = 1e-8; // below this the group counts as degenerate

  void validate() const {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
      throw GrpoError("epsilon must be in (0, 1)");
    if (beta < 0.0) throw GrpoError("beta must be >= 0");
    if (!(sigma_tolerance > 0.0))
      throw GrpoError("sigma_tolerance must be > 0");
  }
};

/// One group of G sampled outputs for a single prompt.
struct GroupSample {
  std::vector<double> rewards;
  std::vector<double> logp_new;  // log pi_theta(o_i | q)
  std::vector<double> logp_old;  // log pi_theta_old(o_i | q)
  std::vector<double> logp_ref;  // log pi_ref(o_i | q)

  std::size_t size() const { return rewards.size(); }
};

struct GroupStats {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::vector<double> advantages;
};

/**
 * Group-relative advantages (r_i - mu) / sigma with the population standard
 * deviation. A degenerate group (sigma <= tolerance) gets all-zero
 * advantages instead of a division by ~zero.
 */
inline GroupStats group_advantages(const std::vector<double>& rewards,
                                   const GrpoConfig& config) {
  config.validate();
  const std::size_t g = rewards.size();
  if (g < 2) throw GrpoError("group size must be >= 2");

  GroupStats stats;
  double sum = 0.0;
  for (double r : rewards) sum += r;
  stats.mu = sum / static_cast<double>(g);

  double var = 0.0;
  for (double r : rewards) {
    const double c = r - stats.mu;
    var += c * c;
  }
  stats.sigma = std::sqrt(var / static_cast<double>(g));

  stats.advantages.assign(g, 0.0);
  if (stats.sigma > config.sigma_tolerance) {
    for (std::size_t i = 0; i < g; ++i)
      stats.advantages[i] = (rewards[i] - stats.mu) / stats.sigma;
  }
  return stats;
}

/// Importance sampling ratio pi_theta / pi_theta_old from log-probabilities.
inline double importance_ratio(double logp_new, double logp_old) {
  return std::exp(logp_new - logp_old);
}

/**
 * Nonnegative KL estimator u - log(u) - 1 with u the reference-to-current
 * probability ratio. Zero exactly when the log-probs agree.
 */
inline double kl_estimate(double logp_ref, double logp_new) {
  const double log_u = logp_ref - logp_new;
  return std::exp(log_u) - log_u - 1.0;
}

namespace detail {

inline void check_group(const GroupSample& group) {
  const std::size_t g = group.size();
  if (g < 2) throw GrpoError("group size must be >= 2");
  if (group.logp_new.size() != g || group.logp_old.size() != g ||
      group.logp_ref.size() != g)
    throw GrpoError("group field lengths disagree");
}

}  // namespace detail

/**
 * Per-prompt GRPO loss
 *
 *   -(1/G) sum_i [ min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)
 *                  - beta * kl_i ].
 *
 * The expectation over prompts is the trainer's business.
 */
inline double grpo_loss(const GroupSample& group,
                        const std::vector<double>& advantages,
                        const GrpoConfig& config) {
  config.validate();
  detail::check_group(group);
  const std::size_t g = group.size();
  if (advantages.size() != g)
    throw GrpoError("advantages length disagrees with group size");

  double total = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double rho = importance_ratio(group.logp_new[i], group.logp_old[i]);
    const double clipped =
        std::clamp(rho, 1.0 - config.epsilon, 1.0 + config.epsilon);
    const double surrogate =
        std::min(rho * advantages[i], clipped * advantages[i]);
    const double kl = kl_estimate(group.logp_ref[i], group.logp_new[i]);
    total += surrogate - config.beta * kl;
  }
  return -total / static_cast<double>(g);
}

/**
 * Exact gradient of grpo_loss with respect to the policy parameters,
 * given d log pi_theta(o_i|q) / d theta for every output. Advantages,
 * pi_theta_old and pi_ref are treated as constants. At a clip tie the
 * unclipped branch wins, so the surrogate gradient flows exactly when the
 * unclipped term attains the min.
 */
inline std::vector<double> grpo_loss_gradient(
    const GroupSample& group, const std::vector<double>& advantages,
    const GrpoConfig& config,
    const std::vector<std::vector<double>>& logprob_gradients) {
  config.validate();
  detail::check_group(group);
  const std::size_t g = group.size();
  if (advantages.size() != g || logprob_gradients.size() != g)
    throw GrpoError("gradient inputs disagree with group size");
  const std::size_t dim = logprob_gradients.front().size();
  for (const auto& grad : logprob_gradients)
    if (grad.size() != dim) throw GrpoError("log-prob gradient shape mismatch");

  std::vector<double> out(dim, 0.0);
  const double inv_g = 1.0 / static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i) {
    const double rho = importance_ratio(group.logp_new[i], group.logp_old[i]);
    const double clipped =
        std::clamp(rho, 1.0 - config.epsilon, 1.0 + config.epsilon);
    const double a = advantages[i];
    // d(rho)/d theta = rho * dlogp; zero when the clipped branch is active.
    double coeff = 0.0;
    if (rho * a <= clipped * a) coeff = -inv_g * a * rho;
    // d(kl)/d theta = (1 - u) * dlogp with u = exp(logp_ref - logp_new).
    const double u = std::exp(group.logp_ref[i] - group.logp_new[i]);
    coeff += config.beta * inv_g * (1.0 - u);
    for (std::size_t k = 0; k < dim; ++k)
      out[k] += coeff * logprob_gradients[i][k];
  }
  return out;
}

}  // namespace trajrl
