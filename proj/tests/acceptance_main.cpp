// Acceptance suite: one criterion per check, one [PASS]/[FAIL] line each,
// nonzero exit when anything fails. Tolerances and runtime budgets are
// pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "trajrl/cli.hpp"
#include "trajrl/dtw.hpp"
#include "trajrl/grpo.hpp"
#include "trajrl/nw.hpp"
#include "trajrl/oracle.hpp"
#include "trajrl/random.hpp"
#include "trajrl/reward.hpp"
#include "trajrl/trainer.hpp"
#include "trajrl/trajectory.hpp"

using namespace trajrl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

EmbeddingSequence random_seq(Rng& rng, std::size_t len, std::size_t dim) {
  EmbeddingSequence seq(len, Vec(dim));
  for (auto& v : seq)
    for (auto& x : v) x = uniform_range(rng, -1.0, 1.0);
  return seq;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// --- 1 -------------------------------------------------------------------

Outcome dtw_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const OracleReport report = dtw_oracle_suite(200, 3, 1e-9);
  const double elapsed = seconds_since(start);
  Outcome outcome;
  outcome.pass = report.failures == 0 && elapsed < 10.0;
  outcome.detail = "200 instances, max |delta| " + fmt(report.max_delta) +
                   ", " + fmt(elapsed) + " s";
  return outcome;
}

// --- 2 -------------------------------------------------------------------

Outcome dtw_identity_and_bounds() {
  Rng rng(5);
  Outcome outcome;
  outcome.pass = true;

  for (int trial = 0; trial < 200; ++trial) {
    const auto seq = random_seq(rng, 1 + uniform_index(rng, 6), 4);
    if (dtw_distance(seq, seq).distance != 0.0) outcome.pass = false;
  }
  std::size_t unit_rewards = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_seq(rng, 1 + uniform_index(rng, 6), 4);
    const auto b = random_seq(rng, 1 + uniform_index(rng, 6), 4);
    const double distance = dtw_distance(a, b).distance;
    const double reward = dtw_reward(a, b);
    if (!(reward > 0.0 && reward <= 1.0)) outcome.pass = false;
    if ((reward == 1.0) != (distance == 0.0)) outcome.pass = false;
    if (reward == 1.0) ++unit_rewards;
  }
  outcome.detail =
      "identity exact on 200 sequences; 1000 pairs in (0,1], reward 1 on " +
      std::to_string(unit_rewards);
  return outcome;
}

// --- 3 -------------------------------------------------------------------

Outcome nw_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const OracleReport simple = nw_oracle_suite(200, 3, false, 1e-9);
  const OracleReport affine = nw_oracle_suite(200, 3, true, 1e-9);
  const double elapsed = seconds_since(start);
  Outcome outcome;
  outcome.pass =
      simple.failures == 0 && affine.failures == 0 && elapsed < 30.0;
  outcome.detail = "simple max " + fmt(simple.max_delta) + ", affine max " +
                   fmt(affine.max_delta) + ", " + fmt(elapsed) + " s";
  return outcome;
}

// --- 4 -------------------------------------------------------------------

Outcome nw_tau_monotonicity() {
  Rng rng(7);
  Outcome outcome;
  outcome.pass = true;
  double worst_rise = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const auto a = random_seq(rng, 1 + uniform_index(rng, 6), 3);
    const auto b = random_seq(rng, 1 + uniform_index(rng, 6), 3);
    NwParams params;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 9; ++k) {
      params.tau = 0.1 * k;
      const double score = nw_score_affine(a, b, params).score;
      worst_rise = std::max(worst_rise, score - previous);
      if (score > previous) outcome.pass = false;
      previous = score;
    }
  }
  outcome.detail = "100 instances, tau 0.0..0.9, worst rise " +
                   fmt(std::max(worst_rise, 0.0));
  return outcome;
}

// --- 5 -------------------------------------------------------------------

Outcome advantage_normalization() {
  Rng rng(11);
  GrpoConfig config;
  Outcome outcome;
  outcome.pass = true;
  double worst_mean = 0.0, worst_std = 0.0;

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    std::vector<double> rewards(g);
    for (double& r : rewards) r = uniform_range(rng, -2.0, 2.0);
    bool degenerate = true;
    for (double r : rewards)
      if (r != rewards.front()) degenerate = false;
    if (degenerate) continue;

    const GroupStats stats = group_advantages(rewards, config);
    double mean = 0.0;
    for (double a : stats.advantages) mean += a;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double a : stats.advantages) var += a * a;
    const double popstd =
        std::sqrt(var / static_cast<double>(g) - mean * mean);
    worst_mean = std::max(worst_mean, std::fabs(mean));
    worst_std = std::max(worst_std, std::fabs(popstd - 1.0));
    if (std::fabs(mean) >= 1e-9 || std::fabs(popstd - 1.0) >= 1e-9)
      outcome.pass = false;
  }

  // all-equal groups return all zeros
  for (double c : {0.0, 2.5, -1.0}) {
    const GroupStats stats = group_advantages({c, c, c, c}, config);
    for (double a : stats.advantages)
      if (a != 0.0) outcome.pass = false;
  }

  // exact invariance under r -> a*r + b with dyadic inputs and a power-of-
  // two scale, where every intermediate rounds identically
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    std::vector<double> rewards(g, 0.0);
    long long sum = 0;
    for (std::size_t i = 0; i + 1 < g; ++i) {
      const long long c = static_cast<long long>(uniform_index(rng, 41)) - 20;
      rewards[i] = static_cast<double>(c);
      sum += c;
    }
    rewards[g - 1] = static_cast<double>(-sum);
    const double mu0 =
        static_cast<double>(static_cast<long long>(uniform_index(rng, 257)) -
                            128) /
        256.0;
    for (double& r : rewards) r += mu0;
    bool degenerate = true;
    for (double r : rewards)
      if (r != rewards.front()) degenerate = false;
    if (degenerate) continue;

    const double a =
        std::ldexp(1.0, static_cast<int>(uniform_index(rng, 6)) - 2);
    const double b =
        static_cast<double>(static_cast<long long>(uniform_index(rng, 513)) -
                            256) /
        256.0;
    std::vector<double> moved(g);
    for (std::size_t i = 0; i < g; ++i) moved[i] = a * rewards[i] + b;
    if (group_advantages(rewards, config).advantages !=
        group_advantages(moved, config).advantages)
      outcome.pass = false;
  }

  outcome.detail = "1000 groups, worst |mean| " + fmt(worst_mean) +
                   ", worst |std-1| " + fmt(worst_std) +
                   "; affine invariance exact on 500 groups";
  return outcome;
}

// --- 6 -------------------------------------------------------------------

Outcome kl_estimator_properties() {
  Rng rng(13);
  Outcome outcome;
  outcome.pass = true;
  double min_kl = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 10000; ++trial) {
    const double log_u = uniform_range(rng, -5.0, 5.0);
    const double kl = kl_estimate(log_u, 0.0);
    min_kl = std::min(min_kl, kl);
    if (kl < 0.0) outcome.pass = false;
  }
  const double at_one = std::fabs(kl_estimate(-1.75, -1.75));
  if (at_one > 1e-12) outcome.pass = false;
  outcome.detail = "10000 draws, min " + fmt(min_kl) + ", |kl(u=1)| " +
                   fmt(at_one);
  return outcome;
}

// --- 7 -------------------------------------------------------------------

Outcome gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  const OracleReport report = gradient_check_suite(100, 3, 1e-4);
  const double elapsed = seconds_since(start);
  Outcome outcome;
  outcome.pass = report.failures == 0 && elapsed < 60.0;
  outcome.detail = "100 configurations, worst relative error " +
                   fmt(report.max_delta) + ", " + fmt(elapsed) + " s";
  return outcome;
}

// --- 8 -------------------------------------------------------------------

Outcome loss_sanity_at_sampling_policy() {
  Rng rng(17);
  GrpoConfig config;
  config.beta = 0.0;
  Outcome outcome;
  outcome.pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 15);
    GroupSample group;
    for (std::size_t i = 0; i < g; ++i) {
      group.rewards.push_back(uniform_range(rng, 0.0, 3.0));
      const double lp = uniform_range(rng, -5.0, -0.1);
      group.logp_new.push_back(lp);
      group.logp_old.push_back(lp);
      group.logp_ref.push_back(uniform_range(rng, -5.0, -0.1));
    }
    const GroupStats stats = group_advantages(group.rewards, config);
    if (stats.sigma <= config.sigma_tolerance) continue;
    const double loss =
        std::fabs(grpo_loss(group, stats.advantages, config));
    worst = std::max(worst, loss);
    if (loss >= 1e-9) outcome.pass = false;
  }
  outcome.detail = "200 groups at theta = theta_old, worst |loss| " +
                   fmt(worst);
  return outcome;
}

// --- 9 -------------------------------------------------------------------

Outcome toy_directional_trend() {
  const auto start = std::chrono::steady_clock::now();
  const int num_seeds = 5;
  double mean_form = 0.0, mean_exact = 0.0, mean_dtw = 0.0;
  int nonneg_gap_seeds = 0;

  for (std::uint64_t seed = 1; seed <= num_seeds; ++seed) {
    TrainerConfig base;  // 200 tasks, G = 8, 300 iterations
    base.seed = seed;

    TrainerConfig form_only = base;
    form_only.rewards.enable_form = true;
    form_only.rewards.enable_exact = false;
    form_only.rewards.enable_dtw = false;

    TrainerConfig form_exact = base;
    form_exact.rewards.enable_dtw = false;

    const TrainerConfig full = base;  // form + exact + dtw

    const double acc_form = train(form_only).final_train_accuracy;
    const double acc_exact = train(form_exact).final_train_accuracy;
    const double acc_dtw = train(full).final_train_accuracy;
    mean_form += acc_form / num_seeds;
    mean_exact += acc_exact / num_seeds;
    mean_dtw += acc_dtw / num_seeds;
    if (acc_dtw - acc_exact >= 0.0) ++nonneg_gap_seeds;
  }
  const double elapsed = seconds_since(start);

  Outcome outcome;
  outcome.pass = mean_dtw >= mean_exact && mean_exact >= mean_form &&
                 nonneg_gap_seeds >= 4 && elapsed < 300.0;
  outcome.detail = "mean accuracy form " + fmt(mean_form) + " <= form+exact " +
                   fmt(mean_exact) + " <= form+exact+dtw " + fmt(mean_dtw) +
                   "; gap >= 0 in " + std::to_string(nonneg_gap_seeds) +
                   "/5 seeds; " + fmt(elapsed) + " s";
  return outcome;
}

// --- 10 ------------------------------------------------------------------

Outcome format_round_trip() {
  Rng rng(19);
  Outcome outcome;
  outcome.pass = true;

  for (int trial = 0; trial < 1000; ++trial) {
    Trajectory traj;
    const std::size_t reasoning = uniform_index(rng, 6);
    for (std::size_t s = 0; s < reasoning; ++s)
      traj.steps.push_back("Clause " + std::to_string(rng() % 997) +
                           " holds.");
    traj.steps.push_back("answer " + std::to_string(rng() % 13));

    const std::string text = render_tagged(traj);
    const ParsedOutput parsed = parse_tagged_output(text);
    if (!parsed.well_formed) outcome.pass = false;
    if (render_tagged(build_trajectory(parsed)) != text) outcome.pass = false;
  }

  const std::vector<std::string> malformed = {
      "",
      "no tags at all",
      "<think>half open",
      "<think>a</think>",
      "<answer>a</answer>",
      "<answer>x</answer><think>y</think>",
      "<think>a</think><think>b</think><answer>c</answer>",
      "<think>a<answer>b</answer></think><answer>c</answer>",
      "<THINK>a</THINK><answer>b</answer>",
      "</think><think>a<answer>b</answer>",
  };
  std::size_t zeros = 0;
  for (const auto& text : malformed) {
    try {
      if (format_reward(text) == 0.0) ++zeros;
    } catch (...) {
      outcome.pass = false;
    }
  }
  if (zeros != malformed.size()) outcome.pass = false;
  outcome.detail = "1000 rendered records byte-identical; " +
                   std::to_string(zeros) + "/" +
                   std::to_string(malformed.size()) +
                   " malformed cases score 0";
  return outcome;
}

// --- 11 ------------------------------------------------------------------

Outcome train_toy_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const fs::path out_a = dir / "trajrl_acceptance_run_a.jsonl";
  const fs::path out_b = dir / "trajrl_acceptance_run_b.jsonl";
  const fs::path config = dir / "trajrl_acceptance_train.cfg";
  {
    std::ofstream cfg(config);
    cfg << "trainer.batch = 8\ntrainer.heldout = 8\n";
  }

  const std::vector<std::string> base = {
      "--config", config.string(), "train-toy", "--seed", "7", "--iters",
      "20",       "--tasks",       "16",        "--group-size", "8",
      "--rewards", "form,exact,dtw"};
  auto run_once = [&](const fs::path& out) {
    std::vector<std::string> args = base;
    args.push_back("--out");
    args.push_back(out.string());
    return cli::run_cli(args);
  };

  Outcome outcome;
  const int code_a = run_once(out_a);
  const int code_b = run_once(out_b);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
  };
  const std::string a = slurp(out_a);
  const std::string b = slurp(out_b);
  outcome.pass = code_a == 0 && code_b == 0 && !a.empty() && a == b;
  outcome.detail = "two identical invocations, " +
                   std::to_string(a.size()) + " bytes each, byte-identical: " +
                   (a == b ? "yes" : "no");

  fs::remove(out_a);
  fs::remove(out_b);
  fs::remove(config);
  return outcome;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"dtw oracle equivalence", dtw_oracle_equivalence},
      {"dtw identity and reward bounds", dtw_identity_and_bounds},
      {"nw oracle equivalence", nw_oracle_equivalence},
      {"nw tau monotonicity", nw_tau_monotonicity},
      {"grpo advantage normalization", advantage_normalization},
      {"kl estimator nonnegativity", kl_estimator_properties},
      {"grpo gradient check", gradient_check},
      {"loss sanity at the sampling policy", loss_sanity_at_sampling_policy},
      {"toy directional reproduction", toy_directional_trend},
      {"format/parse round trip", format_round_trip},
      {"train-toy determinism", train_toy_determinism},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome outcome;
    try {
      outcome = criteria[k].run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %zu. %s (%s)\n", outcome.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].name, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0)
    std::printf("%d of %zu acceptance criteria failed\n", failures,
                criteria.size());
  else
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  return failures == 0 ? 0 : 1;
}
