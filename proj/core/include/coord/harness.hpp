#pragma once

// Experiment harness: the training loop (act, post-process, step, store,
// per-episode gradient phase with warm-up gating), noise-free evaluation
// over seeded repetitions, experiment grids, and the finite-difference
// gradient check suite.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coord/agent.hpp"
#include "coord/baselines.hpp"
#include "coord/environment.hpp"
#include "coord/replay.hpp"

namespace coord::harness {

struct TrainConfig {
  int episodes = 300;
  int gradient_steps_per_period = 64;  // eta; the period is one episode
  uint64_t seed = 1;
  size_t buffer_capacity = replay::kDefaultCapacity;
};

struct TrainResult {
  std::vector<double> episode_mean_reward;
  long env_steps = 0;
  long gradient_steps = 0;
  long target_updates = 0;
};

// Runs the training loop on `agent`: explore-act, post-process, step, store;
// after each episode whose cumulative step count has passed the agent's
// warm-up, run `gradient_steps_per_period` update steps.
TrainResult train(const env::ScenarioConfig& scenario, const TrainConfig& cfg,
                  agent::TrainableAgent& agent,
                  std::ostream* progress = nullptr);

// Two-column text: episode index, mean episode reward.
void write_reward_curve(const std::string& path, const std::vector<double>& curve);

struct EvalConfig {
  int repetitions = 25;
  int eval_steps = 200;  // monitoring periods per repetition
  uint64_t seed = 1;
  int threads = 1;
};

struct ResultRecord {
  std::string agent;
  std::string scenario;
  uint64_t seed = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_rep;
  std::optional<std::string> error;  // set when evaluation was impossible
};

// Noise-free evaluation: mean per-window objective per repetition.
// Propagates UnsupportedCapability (callers may record it as a result).
ResultRecord evaluate(const agent::Policy& policy, const env::ScenarioConfig& scenario,
                      const EvalConfig& cfg);

// JSON-lines output, one self-describing record per line.
void write_results(const std::string& path, const std::vector<ResultRecord>& records,
                   bool append = false);

struct AgentRef {
  std::string kind;        // random | gnn | flat
  std::string checkpoint;  // directory for trained agents
};

struct ExperimentSpec {
  std::string name;
  std::string scenario_path;
  std::vector<std::string> traffic_models;  // empty: keep the scenario's model
  std::vector<int> ingress_counts;          // empty: keep the scenario's counts
  std::string generalization = "seen";
  int repetitions = 25;
  int eval_steps = 200;
  uint64_t seed = 1;
  int threads = 1;
  std::vector<AgentRef> agents;

  static ExperimentSpec load(const std::string& path);
};

// Evaluates every agent on every grid cell; UnsupportedCapability becomes a
// record with the error field set instead of aborting the sweep.
std::vector<ResultRecord> run_sweep(const ExperimentSpec& spec,
                                    std::ostream* progress = nullptr);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  long entries_checked = 0;
};

// Central finite differences (h = 1e-5) against the recorded tape for every
// layer kind: dense, GATv2, full embedder, actor head, critic head.
std::vector<GradCheckResult> run_gradient_checks(uint64_t seed = 7);

}  // namespace coord::harness
