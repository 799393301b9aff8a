#pragma once

// Comparison agents: a uniform-random valid policy (floor) and a DDPG agent
// over a flattened fixed-size observation vector instead of the graph
// embedder. The flattened agent's input layout is frozen at construction,
// so any change of topology size raises UnsupportedCapability.

#include <cstdint>
#include <string>
#include <vector>

#include "coord/agent.hpp"

namespace coord::harness {

class RandomPolicy : public agent::Policy {
 public:
  sim::ActionTensor act(const env::Observation& obs, bool explore,
                        Rng& rng) const override;
  std::string name() const override { return "random"; }
};

class FlatDdpgAgent : public agent::TrainableAgent {
 public:
  // Observation layout (node count / edge count) is fixed from `example`.
  FlatDdpgAgent(const env::Observation& example, agent::Hyperparams hp, uint64_t seed);

  sim::ActionTensor act(const env::Observation& obs, bool explore,
                        Rng& rng) const override;
  std::string name() const override { return "flat-ddpg"; }

  agent::UpdateStats update(const std::vector<replay::Transition>& batch) override;
  const agent::Hyperparams& hyperparams() const override { return hp_; }
  long gradient_steps() const override { return gradient_steps_; }
  long target_updates() const override { return target_updates_; }

  void save(const std::string& dir) const override;
  static FlatDdpgAgent load(const std::string& dir);

  int observation_dim() const { return obs_dim_; }
  int action_size() const { return n_ * v_max_ * v_max_; }

  // Flattened observation: [node features | edge features | mask]; throws
  // UnsupportedCapability when the observation shape differs from the one
  // fixed at construction.
  std::vector<double> flatten(const env::Observation& obs) const;

 private:
  FlatDdpgAgent() = default;
  diff::Tensor actor_forward(const diff::Tensor& obs,
                             const diff::ParameterSet& params) const;
  diff::Tensor critic_forward(const diff::Tensor& obs, const diff::Tensor& actions,
                              const diff::ParameterSet& params) const;

  int n_ = 0, v_max_ = 0;
  int fixed_nodes_ = 0, fixed_edges_ = 0;
  int obs_dim_ = 0;
  agent::Hyperparams hp_;
  diff::ParameterSet actor_, critic_, target_actor_, target_critic_;
  diff::Adam actor_opt_, critic_opt_;
  long gradient_steps_ = 0, target_updates_ = 0;
};

}  // namespace coord::harness
