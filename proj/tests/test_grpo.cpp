#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "trajrl/grpo.hpp"
#include "trajrl/oracle.hpp"
#include "trajrl/random.hpp"

using namespace trajrl;

namespace {

GrpoConfig default_config() { return GrpoConfig{}; }

// Rewards built as integer offsets around a dyadic mean, so that means,
// centered values and standard deviations all evaluate exactly in doubles
// and affine transforms by powers of two stay bit-exact.
std::vector<double> dyadic_group(Rng& rng, std::size_t g) {
  std::vector<double> centered(g, 0.0);
  long long sum = 0;
  for (std::size_t i = 0; i + 1 < g; ++i) {
    const long long c = static_cast<long long>(uniform_index(rng, 41)) - 20;
    centered[i] = static_cast<double>(c);
    sum += c;
  }
  centered[g - 1] = static_cast<double>(-sum);
  const double mu0 =
      static_cast<double>(static_cast<long long>(uniform_index(rng, 257)) -
                          128) /
      256.0;
  for (double& c : centered) c += mu0;
  return centered;
}

bool degenerate(const std::vector<double>& rewards) {
  for (double r : rewards)
    if (r != rewards.front()) return false;
  return true;
}

}  // namespace

TEST_CASE("group_advantages evaluates the standardization", "[grpo]") {
  const GroupStats stats =
      group_advantages({1.0, 0.0, 1.0, 0.0}, default_config());
  CHECK(stats.mu == 0.5);
  CHECK(stats.sigma == 0.5);
  CHECK(stats.advantages == std::vector<double>{1.0, -1.0, 1.0, -1.0});
}

TEST_CASE("group_advantages degenerate group", "[grpo]") {
  for (double c : {0.0, 1.0, -3.25}) {
    const GroupStats stats = group_advantages({c, c, c}, default_config());
    CHECK(stats.advantages == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(stats.sigma <= default_config().sigma_tolerance);
  }
}

TEST_CASE("group_advantages requires a spread-capable group", "[grpo]") {
  CHECK_THROWS_AS(group_advantages({1.0}, default_config()), GrpoError);
  CHECK_THROWS_AS(group_advantages({}, default_config()), GrpoError);
}

TEST_CASE("group_advantages normalization properties", "[grpo]") {
  Rng rng(51);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    std::vector<double> rewards(g);
    for (double& r : rewards) r = uniform_range(rng, -2.0, 2.0);
    if (degenerate(rewards)) continue;

    const GroupStats stats = group_advantages(rewards, default_config());
    double mean = 0.0;
    for (double a : stats.advantages) mean += a;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double a : stats.advantages) var += (a - mean) * (a - mean);
    const double popstd = std::sqrt(var / static_cast<double>(g));
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(popstd - 1.0) < 1e-9);
  }
}

TEST_CASE("group_advantages exact affine invariance", "[grpo]") {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    const std::vector<double> rewards = dyadic_group(rng, g);
    if (degenerate(rewards)) continue;

    const double a = std::ldexp(1.0, static_cast<int>(uniform_index(rng, 6)) - 2);
    const double b =
        static_cast<double>(static_cast<long long>(uniform_index(rng, 513)) -
                            256) /
        256.0;
    std::vector<double> transformed(g);
    for (std::size_t i = 0; i < g; ++i) transformed[i] = a * rewards[i] + b;

    const GroupStats base = group_advantages(rewards, default_config());
    const GroupStats moved = group_advantages(transformed, default_config());
    // bit-for-bit equality, not approximate
    CHECK(base.advantages == moved.advantages);
  }
}

TEST_CASE("importance_ratio", "[grpo]") {
  CHECK(importance_ratio(-1.5, -1.5) == 1.0);
  CHECK(importance_ratio(std::log(2.0), 0.0) ==
        Catch::Approx(2.0).margin(1e-12));
  Rng rng(57);
  for (int trial = 0; trial < 100; ++trial)
    CHECK(importance_ratio(uniform_range(rng, -20.0, 20.0),
                           uniform_range(rng, -20.0, 20.0)) > 0.0);
}

TEST_CASE("kl_estimate", "[grpo]") {
  CHECK(kl_estimate(-2.0, -2.0) == 0.0);
  // direct evaluations of u - log(u) - 1
  CHECK(kl_estimate(std::log(2.0), 0.0) ==
        Catch::Approx(2.0 - std::log(2.0) - 1.0).margin(1e-12));
  CHECK(kl_estimate(std::log(0.5), 0.0) ==
        Catch::Approx(0.5 - std::log(0.5) - 1.0).margin(1e-12));
  CHECK(kl_estimate(std::log(2.0), 0.0) == Catch::Approx(0.30685).margin(1e-5));
  CHECK(kl_estimate(std::log(0.5), 0.0) == Catch::Approx(0.19315).margin(1e-5));

  Rng rng(59);
  for (int trial = 0; trial < 1000; ++trial) {
    const double log_u = uniform_range(rng, -5.0, 5.0);
    CHECK(kl_estimate(log_u, 0.0) >= 0.0);
  }
}

namespace {

GroupSample two_identical(double advantage_sign, double rho) {
  // two copies of the same sample keep G >= 2 while pinning the per-term
  // arithmetic of the loss
  GroupSample group;
  for (int i = 0; i < 2; ++i) {
    group.rewards.push_back(advantage_sign);
    group.logp_new.push_back(std::log(rho));
    group.logp_old.push_back(0.0);
    group.logp_ref.push_back(std::log(rho));
  }
  return group;
}

}  // namespace

TEST_CASE("grpo_loss pinned evaluations", "[grpo]") {
  GrpoConfig config;
  config.epsilon = 0.2;
  config.beta = 0.0;

  SECTION("ratios of one with centered advantages cancel") {
    GroupSample group;
    group.rewards = {1.0, 0.0, 1.0, 0.0};
    group.logp_new = {-1.0, -2.0, -0.5, -3.0};
    group.logp_old = group.logp_new;
    group.logp_ref = group.logp_new;
    const GroupStats stats = group_advantages(group.rewards, config);
    CHECK(grpo_loss(group, stats.advantages, config) ==
          Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("positive advantage above the clip uses the clipped value") {
    const GroupSample group = two_identical(1.0, 1.5);
    const std::vector<double> advantages = {1.0, 1.0};
    // min(1.5 * 1, 1.2 * 1) = 1.2 per term
    CHECK(grpo_loss(group, advantages, config) ==
          Catch::Approx(-1.2).margin(1e-12));
  }

  SECTION("negative advantage below the clip keeps the raw ratio") {
    const GroupSample group = two_identical(-1.0, 0.5);
    const std::vector<double> advantages = {-1.0, -1.0};
    // min(0.5 * -1, 0.8 * -1) = -0.8 per term
    CHECK(grpo_loss(group, advantages, config) ==
          Catch::Approx(0.8).margin(1e-12));
  }

  SECTION("length mismatch is rejected") {
    const GroupSample group = two_identical(1.0, 1.0);
    CHECK_THROWS_AS(grpo_loss(group, {1.0}, config), GrpoError);
  }
}

TEST_CASE("grpo_loss_gradient clip saturation", "[grpo]") {
  GrpoConfig config;
  config.epsilon = 0.2;
  config.beta = 0.0;

  // sample 0 sits above 1 + eps with positive advantage: clipped branch,
  // no surrogate gradient; sample 1 has zero advantage
  GroupSample group;
  group.rewards = {2.0, 0.0};
  group.logp_new = {std::log(1.5), 0.0};
  group.logp_old = {0.0, 0.0};
  group.logp_ref = {0.0, 0.0};
  const std::vector<double> advantages = {1.0, 0.0};
  const std::vector<std::vector<double>> grads = {{1.0, 2.0}, {3.0, 4.0}};

  const std::vector<double> grad =
      grpo_loss_gradient(group, advantages, config, grads);
  CHECK(grad == std::vector<double>{0.0, 0.0});

  // inside the clip window the surrogate gradient flows
  group.logp_new[0] = std::log(1.1);
  const std::vector<double> inside =
      grpo_loss_gradient(group, advantages, config, grads);
  const double coeff = -0.5 * 1.0 * 1.1;  // -(1/G) * A * rho
  CHECK(inside[0] == Catch::Approx(coeff * 1.0).margin(1e-12));
  CHECK(inside[1] == Catch::Approx(coeff * 2.0).margin(1e-12));
}

TEST_CASE("grpo_loss_gradient matches finite differences", "[grpo][oracle]") {
  const OracleReport report = gradient_check_suite(30, 7);
  CHECK(report.failures == 0);
  CHECK(report.max_delta < 1e-4);
}

TEST_CASE("loss is zero at the sampling policy with beta zero", "[grpo]") {
  Rng rng(61);
  GrpoConfig config;
  config.beta = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    GroupSample group;
    for (std::size_t i = 0; i < g; ++i) {
      group.rewards.push_back(uniform_range(rng, 0.0, 3.0));
      const double lp = uniform_range(rng, -4.0, -0.1);
      group.logp_new.push_back(lp);
      group.logp_old.push_back(lp);
      group.logp_ref.push_back(uniform_range(rng, -4.0, -0.1));
    }
    const GroupStats stats = group_advantages(group.rewards, config);
    CHECK(std::fabs(grpo_loss(group, stats.advantages, config)) < 1e-9);
  }
}
