#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trajrl/dtw.hpp"
#include "trajrl/grpo.hpp"
#include "trajrl/nw.hpp"
#include "trajrl/random.hpp"

/**
 * Randomized cross-check suites: dynamic programs against brute-force
 * enumeration, analytic gradients against central finite differences. The
 * CLI `oracle` subcommand runs these and fails loudly on any mismatch.
 */

namespace trajrl {

struct OracleReport {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double max_delta = 0.0;  // worst |dp - brute| or relative gradient error

  bool ok() const { return failures == 0; }
};

namespace detail {

inline EmbeddingSequence random_sequence(Rng& rng, std::size_t len,
                                         std::size_t dim) {
  EmbeddingSequence seq(len, Vec(dim));
  for (auto& v : seq)
    for (auto& x : v) x = uniform_range(rng, -1.0, 1.0);
  return seq;
}

inline NwParams random_nw_params(Rng& rng) {
  NwParams params;
  params.tau = uniform_range(rng, -0.2, 0.8);
  params.mismatch_penalty = uniform_range(rng, 0.0, 1.0);
  params.gap_extend = uniform_range(rng, -0.3, -0.01);
  params.gap_open = params.gap_extend - uniform_range(rng, 0.0, 0.5);
  return params;
}

}  // namespace detail

/// dtw_distance vs full path enumeration on random small instances.
inline OracleReport dtw_oracle_suite(std::size_t trials, std::uint64_t seed,
                                     double tolerance = 1e-9) {
  Rng rng(detail::splitmix64(seed) ^ 0x647477ULL);
  OracleReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const std::size_t m = 1 + uniform_index(rng, 6);
    const std::size_t dim = (uniform_index(rng, 2) == 0) ? 2 : 4;
    const auto a = detail::random_sequence(rng, n, dim);
    const auto b = detail::random_sequence(rng, m, dim);

    const DtwResult dp = dtw_distance(a, b);
    const double brute = dtw_brute_force(a, b);
    const double delta = std::fabs(dp.distance - brute);
    report.max_delta = std::max(report.max_delta, delta);
    if (delta >= tolerance || !is_valid_warping_path(dp.path, n, m))
      ++report.failures;
  }
  return report;
}

/// nw_score_simple and nw_score_affine vs matching enumeration.
inline OracleReport nw_oracle_suite(std::size_t trials, std::uint64_t seed,
                                    bool affine, double tolerance = 1e-9) {
  Rng rng(detail::splitmix64(seed) ^ (affine ? 0x6e7761ULL : 0x6e7773ULL));
  OracleReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const std::size_t m = 1 + uniform_index(rng, 6);
    const std::size_t dim = (uniform_index(rng, 2) == 0) ? 2 : 4;
    const auto a = detail::random_sequence(rng, n, dim);
    const auto b = detail::random_sequence(rng, m, dim);
    const NwParams params = detail::random_nw_params(rng);

    const double dp = affine ? nw_score_affine(a, b, params).score
                             : nw_score_simple(a, b, params);
    const double brute = nw_brute_force(a, b, params, affine);
    const double delta = std::fabs(dp - brute);
    report.max_delta = std::max(report.max_delta, delta);
    if (delta >= tolerance) ++report.failures;
  }
  return report;
}

namespace detail {

// Minimal differentiable policy for gradient checking: fixed-length action
// sequences under position-wise softmax over `actions` logits. Independent
// of the toy environment on purpose.
struct FlatSoftmaxModel {
  std::size_t positions = 2;
  std::size_t actions = 5;

  std::size_t params() const { return positions * actions; }

  double logp(const std::vector<double>& theta,
              const std::vector<std::size_t>& seq) const {
    double total = 0.0;
    for (std::size_t t = 0; t < positions; ++t) {
      double max_logit = theta[t * actions];
      for (std::size_t a = 1; a < actions; ++a)
        max_logit = std::max(max_logit, theta[t * actions + a]);
      double z = 0.0;
      for (std::size_t a = 0; a < actions; ++a)
        z += std::exp(theta[t * actions + a] - max_logit);
      total += theta[t * actions + seq[t]] - max_logit - std::log(z);
    }
    return total;
  }

  std::vector<double> logp_gradient(const std::vector<double>& theta,
                                    const std::vector<std::size_t>& seq) const {
    std::vector<double> grad(params(), 0.0);
    for (std::size_t t = 0; t < positions; ++t) {
      double max_logit = theta[t * actions];
      for (std::size_t a = 1; a < actions; ++a)
        max_logit = std::max(max_logit, theta[t * actions + a]);
      double z = 0.0;
      std::vector<double> e(actions);
      for (std::size_t a = 0; a < actions; ++a) {
        e[a] = std::exp(theta[t * actions + a] - max_logit);
        z += e[a];
      }
      for (std::size_t a = 0; a < actions; ++a)
        grad[t * actions + a] = ((a == seq[t]) ? 1.0 : 0.0) - e[a] / z;
    }
    return grad;
  }
};

}  // namespace detail

/**
 * grpo_loss_gradient vs central finite differences (h = 1e-5) on a
 * 10-parameter softmax model, across random (epsilon, beta, G) draws.
 * Configurations that land a ratio within 1e-3 of a clip kink are redrawn,
 * since the loss is not differentiable there.
 */
inline OracleReport gradient_check_suite(std::size_t trials,
                                         std::uint64_t seed,
                                         double max_rel_error = 1e-4) {
  Rng rng(detail::splitmix64(seed) ^ 0x67726164ULL);
  const detail::FlatSoftmaxModel model;
  const double h = 1e-5;

  OracleReport report;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    GrpoConfig config;
    GroupSample group;
    std::vector<std::size_t> flat_seqs;
    std::vector<double> theta(model.params());
    std::size_t g = 0;

    for (int attempt = 0; attempt < 100; ++attempt) {
      config.epsilon = uniform_range(rng, 0.05, 0.3);
      config.beta = uniform_range(rng, 0.0, 0.2);
      g = 2 + uniform_index(rng, 7);

      for (auto& x : theta) x = uniform_range(rng, -1.0, 1.0);
      group = GroupSample{};
      flat_seqs.clear();
      bool near_kink = false;
      for (std::size_t i = 0; i < g; ++i) {
        std::vector<std::size_t> seq(model.positions);
        for (auto& a : seq) a = uniform_index(rng, model.actions);
        const double lp = model.logp(theta, seq);
        group.rewards.push_back(uniform_range(rng, 0.0, 3.0));
        group.logp_new.push_back(lp);
        group.logp_old.push_back(lp + uniform_range(rng, -0.3, 0.3));
        group.logp_ref.push_back(lp + uniform_range(rng, -0.3, 0.3));
        for (auto a : seq) flat_seqs.push_back(a);

        const double rho = importance_ratio(lp, group.logp_old.back());
        if (std::fabs(rho - (1.0 - config.epsilon)) < 1e-3 ||
            std::fabs(rho - (1.0 + config.epsilon)) < 1e-3)
          near_kink = true;
      }
      const GroupStats stats = group_advantages(group.rewards, config);
      if (!near_kink && stats.sigma > 1e-3) break;
    }

    const GroupStats stats = group_advantages(group.rewards, config);
    std::vector<std::vector<double>> logp_grads;
    for (std::size_t i = 0; i < g; ++i) {
      std::vector<std::size_t> seq(
          flat_seqs.begin() + static_cast<std::ptrdiff_t>(i * model.positions),
          flat_seqs.begin() +
              static_cast<std::ptrdiff_t>((i + 1) * model.positions));
      logp_grads.push_back(model.logp_gradient(theta, seq));
    }
    const std::vector<double> analytic =
        grpo_loss_gradient(group, stats.advantages, config, logp_grads);

    auto loss_at = [&](const std::vector<double>& params) {
      GroupSample moved = group;
      for (std::size_t i = 0; i < g; ++i) {
        std::vector<std::size_t> seq(
            flat_seqs.begin() +
                static_cast<std::ptrdiff_t>(i * model.positions),
            flat_seqs.begin() +
                static_cast<std::ptrdiff_t>((i + 1) * model.positions));
        moved.logp_new[i] = model.logp(params, seq);
      }
      return grpo_loss(moved, stats.advantages, config);
    };

    double worst = 0.0;
    bool failed = false;
    for (std::size_t k = 0; k < model.params(); ++k) {
      std::vector<double> plus = theta;
      std::vector<double> minus = theta;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      const double scale = std::max(std::fabs(analytic[k]), std::fabs(fd));
      if (scale <= 1e-8) continue;
      const double rel = std::fabs(analytic[k] - fd) / scale;
      worst = std::max(worst, rel);
      if (rel >= max_rel_error) failed = true;
    }
    report.max_delta = std::max(report.max_delta, worst);
    if (failed) ++report.failures;
  }
  return report;
}

}  // namespace trajrl
