#pragma once

// DDPG actor-critic over graph embeddings: masked sigmoid actor head,
// critic over [graph embedding || action || mask], target networks with
// soft updates, and the batched update rule.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coord/diffcore.hpp"
#include "coord/embedder.hpp"
#include "coord/environment.hpp"
#include "coord/post_process.hpp"
#include "coord/replay.hpp"
#include "coord/rng.hpp"
#include "coord/simulator.hpp"

namespace coord::agent {

struct Hyperparams {
  double gamma = 0.99;
  double lr = 0.001;
  double tau = 0.0001;
  double noise_mean = 0.15;
  double noise_std = 0.3;
  double scheduling_threshold = 0.1;
  int warmup_steps = 200;
  int batch_size = 100;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double mean_q = 0.0;  // actor objective before the step
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual sim::ActionTensor act(const env::Observation& obs, bool explore,
                                Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

class TrainableAgent : public Policy {
 public:
  virtual UpdateStats update(const std::vector<replay::Transition>& batch) = 0;
  virtual const Hyperparams& hyperparams() const = 0;
  virtual long gradient_steps() const = 0;
  virtual long target_updates() const = 0;
  virtual void save(const std::string& dir) const = 0;
};

class GnnDdpgAgent : public TrainableAgent {
 public:
  GnnDdpgAgent(int chain_length, int v_max, gnn::EmbedderConfig embed_cfg,
               Hyperparams hp, uint64_t seed);

  // Sigmoid head output; exploration adds truncated Gaussian noise before
  // the element-wise mask product.
  sim::ActionTensor act(const env::Observation& obs, bool explore,
                        Rng& rng) const override;
  std::string name() const override { return "gnn-ddpg"; }

  // Scalar Q for a full flattened action (row-major i, j, k order).
  double critic_value(const env::Observation& obs,
                      const std::vector<double>& flat_action) const;

  // One gradient step on the batch: critic MSE to the bootstrapped target,
  // actor ascent on Q, then soft target updates.
  UpdateStats update(const std::vector<replay::Transition>& batch) override;
  void soft_update_targets();

  const Hyperparams& hyperparams() const override { return hp_; }
  long gradient_steps() const override { return gradient_steps_; }
  long target_updates() const override { return target_updates_; }

  void save(const std::string& dir) const override;
  static GnnDdpgAgent load(const std::string& dir);

  int chain_length() const { return n_; }
  int v_max() const { return v_max_; }
  int action_size() const { return n_ * v_max_ * v_max_; }
  const gnn::EmbedderConfig& embedder_config() const { return embed_cfg_; }

  diff::ParameterSet& actor_params() { return actor_; }
  diff::ParameterSet& critic_params() { return critic_; }
  diff::ParameterSet& target_actor_params() { return target_actor_; }
  diff::ParameterSet& target_critic_params() { return target_critic_; }

  // Tape-building forward passes (public so tests can differentiate them).
  diff::Tensor actor_forward(const gnn::BatchedGraph& graph, const diff::Tensor& masks,
                             const diff::ParameterSet& params) const;
  diff::Tensor critic_forward(const gnn::BatchedGraph& graph, const diff::Tensor& actions,
                              const diff::Tensor& masks,
                              const diff::ParameterSet& params) const;

 private:
  int n_, v_max_;
  gnn::EmbedderConfig embed_cfg_;
  Hyperparams hp_;
  diff::ParameterSet actor_, critic_, target_actor_, target_critic_;
  diff::Adam actor_opt_, critic_opt_;
  long gradient_steps_ = 0, target_updates_ = 0;
};

// Head parameter construction shared with the flattened baseline.
void init_actor_head(diff::ParameterSet& ps, int input_dim, int hidden, int output_dim,
                     Rng& rng);
void init_critic_head(diff::ParameterSet& ps, int input_dim, int hidden, Rng& rng);
diff::Tensor actor_head_forward(const diff::ParameterSet& ps, const diff::Tensor& input);
diff::Tensor critic_head_forward(const diff::ParameterSet& ps, const diff::Tensor& input);

}  // namespace coord::agent
