#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajrl/config.hpp"
#include "trajrl/dataset.hpp"
#include "trajrl/dtw.hpp"
#include "trajrl/nw.hpp"
#include "trajrl/oracle.hpp"
#include "trajrl/reward.hpp"
#include "trajrl/trainer.hpp"

/**
 * Command-line surface: score | align | train-toy | oracle. All randomness
 * flows from explicit --seed flags; identical invocations produce
 * byte-identical output files.
 */

namespace trajrl {
namespace cli {

namespace detail {

inline RunConfig load_run_config(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("TRAJRL_CONFIG")) path = env;
  }
  if (path.empty()) return RunConfig::from_string("");
  return RunConfig::from_file(path);
}

inline Embedder make_embedder(const AppSettings& settings) {
  if (!settings.external_embeddings.empty())
    return Embedder(load_external_embeddings(settings.external_embeddings));
  return Embedder(settings.embedder);
}

/// A file is either a tagged record or plain prose split into sentences.
inline Trajectory trajectory_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  const std::string contents = text.str();

  const ParsedOutput parsed = parse_tagged_output(contents);
  if (parsed.well_formed) return build_trajectory(parsed);
  Trajectory traj;
  traj.steps = segment_steps(contents);
  if (traj.steps.empty())
    throw DatasetError(path + ": no sentences to align");
  return traj;
}

inline void apply_reward_list(const std::string& list, RewardConfig& rewards) {
  rewards.enable_form = false;
  rewards.enable_exact = false;
  rewards.enable_dtw = false;
  rewards.enable_nw = false;
  std::istringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "form") rewards.enable_form = true;
    else if (item == "exact") rewards.enable_exact = true;
    else if (item == "dtw") rewards.enable_dtw = true;
    else if (item == "nw") rewards.enable_nw = true;
    else throw ConfigError("unknown reward component \"" + item + "\"");
  }
  rewards.validate();
}

inline int run_score(const std::string& config_path, const std::string& gt_path,
                     const std::string& gen_path, const std::string& out_path,
                     const std::string& reward_list) {
  AppSettings settings =
      AppSettings::from_config(load_run_config(config_path));
  if (!reward_list.empty())
    apply_reward_list(reward_list, settings.rewards);
  const Embedder embedder = make_embedder(settings);

  const auto dataset = read_dataset(gt_path, settings.record_fields);
  std::map<std::string, const ReasoningRecord*> by_id;
  for (const auto& record : dataset) by_id[record.id] = &record;

  const auto generated = read_generated(gen_path, settings.generated_fields);
  std::vector<ScoredRecord> scored;
  scored.reserve(generated.size());
  for (const auto& gen : generated) {
    auto it = by_id.find(gen.id);
    if (it == by_id.end())
      throw DatasetError("generated id \"" + gen.id +
                         "\" has no ground-truth record");
    const Trajectory gt_traj = record_trajectory(*it->second);
    ScoredRecord record;
    record.id = gen.id;
    record.breakdown = composite_reward(gen.output, gt_traj,
                                        it->second->answer, settings.rewards,
                                        embedder);
    scored.push_back(std::move(record));
  }
  std::sort(scored.begin(), scored.end(),
            [](const ScoredRecord& a, const ScoredRecord& b) {
              return a.id < b.id;
            });
  write_scores(out_path, scored);
  std::cout << "scored " << scored.size() << " records -> " << out_path
            << "\n";
  return 0;
}

inline int run_align(const std::string& config_path, const std::string& method,
                     const std::string& gen_path, const std::string& gt_path) {
  AppSettings settings =
      AppSettings::from_config(load_run_config(config_path));
  const Embedder embedder = make_embedder(settings);

  const Trajectory gen_traj = trajectory_from_file(gen_path);
  const Trajectory gt_traj = trajectory_from_file(gt_path);
  const EmbeddingSequence gen_seq = embedder.embed_trajectory(gen_traj);
  const EmbeddingSequence gt_seq = embedder.embed_trajectory(gt_traj);

  using trajrl::detail::format_double10;
  if (method == "dtw") {
    const DtwResult result = dtw_distance(gen_seq, gt_seq);
    for (const auto& [i, j] : result.path)
      std::cout << "pair\t" << i << "\t" << j << "\n";
    std::cout << "dtw\t" << format_double10(result.distance) << "\t"
              << format_double10(result.normalized) << "\t"
              << format_double10(std::exp(-result.normalized)) << "\n";
    return 0;
  }
  if (method == "nw") {
    const NwAlignment alignment =
        nw_align_affine(gen_seq, gt_seq, settings.nw);
    const NwResult result = nw_score_affine(gen_seq, gt_seq, settings.nw);
    for (const auto& [i, j] : alignment.matches)
      std::cout << "match\t" << i << "\t" << j << "\n";
    for (const auto& gap : alignment.gaps)
      std::cout << "gap\t" << (gap.in_generated ? "gen" : "gt") << "\t"
                << gap.start << "\t" << gap.length << "\n";
    std::cout << "nw\t" << format_double10(result.score) << "\t"
              << format_double10(result.reward) << "\n";
    return 0;
  }
  throw ConfigError("unknown align method \"" + method + "\"");
}

inline int run_train_toy(const std::string& config_path, std::uint64_t seed,
                         bool seed_set, std::uint64_t iters, bool iters_set,
                         std::uint64_t group_size, bool group_set,
                         std::uint64_t tasks, bool tasks_set,
                         const std::string& reward_list,
                         const std::string& out_path) {
  AppSettings settings =
      AppSettings::from_config(load_run_config(config_path));
  TrainerConfig config = settings.trainer;
  if (seed_set) config.seed = seed;
  if (iters_set) config.iterations = static_cast<std::size_t>(iters);
  if (group_set) config.group_size = static_cast<std::size_t>(group_size);
  if (tasks_set) config.num_tasks = static_cast<std::size_t>(tasks);
  if (!reward_list.empty()) apply_reward_list(reward_list, config.rewards);
  config.validate();

  const TrainReport report = train(config);

  using trajrl::detail::format_double10;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DatasetError("cannot open output file: " + out_path);
  for (const auto& it : report.iterations) {
    out << "{\"iter\":" << it.iteration << ",\"seed\":" << report.seed
        << ",\"mean_reward\":" << format_double10(it.mean_reward)
        << ",\"mean_dtw\":" << format_double10(it.mean_dtw)
        << ",\"mean_kl\":" << format_double10(it.mean_kl)
        << ",\"train_accuracy\":" << format_double10(it.train_accuracy)
        << ",\"heldout_accuracy\":" << format_double10(it.heldout_accuracy)
        << "}\n";
  }
  if (!out) throw DatasetError("write failed: " + out_path);

  std::cout << "final train_accuracy="
            << format_double10(report.final_train_accuracy)
            << " heldout_accuracy="
            << format_double10(report.final_heldout_accuracy)
            << " mean_dtw=" << format_double10(report.final_mean_dtw) << "\n";
  return 0;
}

inline int run_oracle(const std::string& check, std::uint64_t trials,
                      std::uint64_t seed) {
  bool all_ok = true;
  auto emit = [&](const std::string& name, const OracleReport& report) {
    std::cout << name << ": " << report.trials << " trials, "
              << report.failures << " failures, max delta "
              << trajrl::detail::format_double10(report.max_delta) << "\n";
    if (!report.ok()) all_ok = false;
  };
  if (check == "dtw" || check == "all")
    emit("dtw", dtw_oracle_suite(trials, seed));
  if (check == "nw" || check == "all") {
    emit("nw-simple", nw_oracle_suite(trials, seed, /*affine=*/false));
    emit("nw-affine", nw_oracle_suite(trials, seed, /*affine=*/true));
  }
  if (check == "grad" || check == "all")
    emit("grad", gradient_check_suite(std::min<std::uint64_t>(trials, 100),
                                      seed));
  return all_ok ? 0 : 1;
}

}  // namespace detail

/// Entry point shared by the binary and the in-process CLI tests.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"trajectory-aware process rewards and desk-scale GRPO"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "key=value config file (default: $TRAJRL_CONFIG)");

  auto* score = app.add_subcommand(
      "score", "score generated outputs against ground-truth records");
  std::string gt_path, gen_path, out_path, reward_list;
  score->add_option("--gt", gt_path, "ground-truth JSONL")->required();
  score->add_option("--gen", gen_path, "generated JSONL")->required();
  score->add_option("--out", out_path, "output breakdown JSONL")->required();
  score->add_option("--rewards", reward_list,
                    "comma list of form,exact,dtw,nw");

  auto* align =
      app.add_subcommand("align", "print one trajectory alignment");
  std::string method = "dtw";
  std::string align_gen, align_gt;
  align->add_option("--method", method, "dtw or nw")
      ->check(CLI::IsMember({"dtw", "nw"}));
  align->add_option("--gen", align_gen, "generated text file")->required();
  align->add_option("--gt", align_gt, "ground-truth text file")->required();

  auto* train_toy =
      app.add_subcommand("train-toy", "run the toy GRPO training loop");
  std::uint64_t seed = 1, iters = 300, group_size = 8, tasks = 200;
  std::string train_rewards, report_path = "report.jsonl";
  auto* seed_opt = train_toy->add_option("--seed", seed, "training seed");
  auto* iters_opt = train_toy->add_option("--iters", iters, "iterations");
  auto* group_opt =
      train_toy->add_option("--group-size", group_size, "samples per group");
  auto* tasks_opt = train_toy->add_option("--tasks", tasks, "training tasks");
  train_toy->add_option("--rewards", train_rewards,
                        "comma list of form,exact,dtw,nw");
  train_toy->add_option("--out", report_path, "report JSONL path");

  auto* oracle = app.add_subcommand(
      "oracle", "run brute-force and gradient cross-checks");
  std::string check = "all";
  std::uint64_t oracle_trials = 200, oracle_seed = 3;
  oracle->add_option("--check", check, "dtw, nw, grad or all")
      ->check(CLI::IsMember({"dtw", "nw", "grad", "all"}));
  oracle->add_option("--trials", oracle_trials, "trials per suite");
  oracle->add_option("--seed", oracle_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (score->parsed())
      return detail::run_score(config_path, gt_path, gen_path, out_path,
                               reward_list);
    if (align->parsed())
      return detail::run_align(config_path, method, align_gen, align_gt);
    if (train_toy->parsed())
      return detail::run_train_toy(config_path, seed, seed_opt->count() > 0,
                                   iters, iters_opt->count() > 0, group_size,
                                   group_opt->count() > 0, tasks,
                                   tasks_opt->count() > 0, train_rewards,
                                   report_path);
    if (oracle->parsed())
      return detail::run_oracle(check, oracle_trials, oracle_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("trajrl");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cli
}  // namespace trajrl
