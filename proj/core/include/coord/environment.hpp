#pragma once

// POMDP wrapper around the simulator: graph-shaped observations normalized
// to [-1, 1], one simulated monitoring period per step, episode lifecycle,
// and per-episode scenario rotation across the generalization dimensions
// (capacities, ingress permutation, ingress count, topology).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coord/simulator.hpp"
#include "coord/topology.hpp"
#include "coord/traffic.hpp"

namespace coord::env {

struct Observation {
  int num_nodes = 0;
  std::vector<double> node_features;  // |V| x 3: ingress traffic, load, capacity
  int num_dir_edges = 0;
  std::vector<double> edge_features;  // |E_dir| x 2: delay, used bandwidth
  std::vector<int> adj_src, adj_dst;  // each undirected link in both directions
  topo::ActionMask mask;

  static constexpr int kNodeFeatures = 3;
  static constexpr int kEdgeFeatures = 2;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

// v -> 2 * min(v / v_max, 1) - 1
double normalize_feature(double v, double v_max);

struct CapacitySet {
  std::optional<double> default_capacity;
  std::map<int, double> per_node;
};

struct TrafficConfig {
  traffic::ArrivalProcess process;
  double rate = 1.0;
  double duration = 8.0;
};

struct ScenarioConfig {
  std::string name;
  int chain_length = 3;
  int v_max = 64;
  int episode_length = 200;
  double monitoring_period = 100.0;
  double scheduling_threshold = 0.1;

  enum class Rotation { kFixed, kCycle, kSeededRandom };
  Rotation rotation = Rotation::kFixed;
  std::string generalization = "seen";  // seen | gen1..gen4 (documentation tag)

  double capacity_max = 10.0;
  double ingress_traffic_max = 10.0;
  double delay_max = 10.0;

  double demand_factor = 1.0;
  double processing_delay = 5.0;

  std::vector<std::string> topology_paths;
  std::vector<std::string> override_paths;  // parallel to topology_paths, "" = none

  std::vector<CapacitySet> capacity_sets;               // empty: keep file values
  std::vector<int> ingress_counts = {1};                // rotation dimension 3
  std::vector<std::vector<int>> ingress_permutations;   // empty: seeded permutations
  TrafficConfig traffic;

  static ScenarioConfig load(const std::string& path);
};

// Parameters chosen by the rotation schedule for one episode.
struct EpisodeSetup {
  int topology_index = 0;
  int capacity_index = -1;
  std::vector<int> ingress_nodes;
};

class Environment {
 public:
  Environment(ScenarioConfig cfg, uint64_t seed);

  // Advances the rotation schedule and starts a fresh episode; returns the
  // zero-traffic initial observation.
  Observation reset();

  // Raw action path: masks and post-processes internally.
  StepResult step(const sim::ActionTensor& raw_action);
  // For callers that already post-processed (the training loop does).
  StepResult step_processed(const sim::SchedulingTensor& action);

  const ScenarioConfig& config() const { return cfg_; }
  const topo::NetworkTopology& topology() const;
  const topo::ActionMask& mask() const;
  const EpisodeSetup& episode_setup() const { return setup_; }
  int episode_index() const { return episode_; }
  int step_index() const { return step_; }
  double clock() const { return clock_; }

  // rotation choice as a pure function of (seed, episode); exposed for tests
  EpisodeSetup plan_episode(int episode_index) const;

 private:
  Observation observe(const sim::MonitoringSnapshot* snap) const;

  ScenarioConfig cfg_;
  uint64_t seed_;
  std::vector<topo::NetworkTopology> base_topologies_;

  int episode_ = -1;
  int step_ = 0;
  double clock_ = 0.0;
  EpisodeSetup setup_;
  topo::NetworkTopology topo_;
  topo::ActionMask mask_;
  std::unique_ptr<sim::Simulator> simulator_;
  std::unique_ptr<traffic::FlowGenerator> generator_;
};

}  // namespace coord::env
