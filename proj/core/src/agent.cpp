#include "coord/agent.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "coord/errors.hpp"

namespace coord::agent {

namespace {
constexpr int kActorHidden = 256;
constexpr int kCriticHidden = 64;
}  // namespace

void init_actor_head(diff::ParameterSet& ps, int input_dim, int hidden, int output_dim,
                     Rng& rng) {
  ps.create("head.w1", {input_dim, hidden}, input_dim, rng);
  ps.create_zeros("head.b1", {hidden});
  ps.create("head.w2", {hidden, output_dim}, hidden, rng);
  ps.create_zeros("head.b2", {output_dim});
}

void init_critic_head(diff::ParameterSet& ps, int input_dim, int hidden, Rng& rng) {
  ps.create("head.w1", {input_dim, hidden}, input_dim, rng);
  ps.create_zeros("head.b1", {hidden});
  ps.create("head.w2", {hidden, 1}, hidden, rng);
  ps.create_zeros("head.b2", {1});
}

diff::Tensor actor_head_forward(const diff::ParameterSet& ps, const diff::Tensor& input) {
  diff::Tensor h = relu(dense(input, ps.get("head.w1"), ps.get("head.b1")));
  return sigmoid(dense(h, ps.get("head.w2"), ps.get("head.b2")));
}

diff::Tensor critic_head_forward(const diff::ParameterSet& ps, const diff::Tensor& input) {
  diff::Tensor h = relu(dense(input, ps.get("head.w1"), ps.get("head.b1")));
  return dense(h, ps.get("head.w2"), ps.get("head.b2"));
}

GnnDdpgAgent::GnnDdpgAgent(int chain_length, int v_max, gnn::EmbedderConfig embed_cfg,
                           Hyperparams hp, uint64_t seed)
    : n_(chain_length),
      v_max_(v_max),
      embed_cfg_(embed_cfg),
      hp_(hp),
      actor_opt_({hp.lr}),
      critic_opt_({hp.lr}) {
  if (chain_length <= 0 || v_max <= 0)
    throw ContractViolation("chain length and v_max must be positive");
  const int a = action_size();

  Rng actor_rng(derive_seed(seed, 1));
  actor_.init_seed = seed;
  gnn::init_embedder_params(actor_, "emb.", embed_cfg_, actor_rng);
  init_actor_head(actor_, embed_cfg_.hidden_dim + a, kActorHidden, a, actor_rng);

  Rng critic_rng(derive_seed(seed, 2));
  critic_.init_seed = seed;
  gnn::init_embedder_params(critic_, "emb.", embed_cfg_, critic_rng);
  init_critic_head(critic_, embed_cfg_.hidden_dim + 2 * a, kCriticHidden, critic_rng);

  target_actor_ = actor_.clone();
  target_critic_ = critic_.clone();
}

diff::Tensor GnnDdpgAgent::actor_forward(const gnn::BatchedGraph& graph,
                                         const diff::Tensor& masks,
                                         const diff::ParameterSet& params) const {
  gnn::EmbedResult emb = gnn::embed(graph, params, "emb.", embed_cfg_);
  diff::Tensor input = diff::concat_cols({emb.graph_embedding, masks});
  return actor_head_forward(params, input);
}

diff::Tensor GnnDdpgAgent::critic_forward(const gnn::BatchedGraph& graph,
                                          const diff::Tensor& actions,
                                          const diff::Tensor& masks,
                                          const diff::ParameterSet& params) const {
  gnn::EmbedResult emb = gnn::embed(graph, params, "emb.", embed_cfg_);
  diff::Tensor input = diff::concat_cols({emb.graph_embedding, actions, masks});
  return critic_head_forward(params, input);
}

sim::ActionTensor GnnDdpgAgent::act(const env::Observation& obs, bool explore,
                                    Rng& rng) const {
  if (obs.mask.n != n_ || obs.mask.v_max != v_max_)
    throw ContractViolation("observation mask does not match agent dimensions");

  diff::NoGradGuard no_grad;
  gnn::BatchedGraph graph = gnn::BatchedGraph::from_observation(obs);
  diff::Tensor masks =
      diff::Tensor::from_values({1, action_size()}, replay::mask_to_doubles(obs.mask));
  diff::Tensor out = actor_forward(graph, masks, actor_);

  sim::ActionTensor action = sim::ActionTensor::zeros(n_, v_max_);
  const auto& values = out.values();
  const auto& mask_values = masks.values();
  for (size_t i = 0; i < action.x.size(); ++i) {
    double v = values[i];
    if (explore) v += rng.gaussian(hp_.noise_mean, hp_.noise_std);
    v = std::clamp(v, 0.0, 1.0);
    action.x[i] = v * mask_values[i];
  }
  return action;
}

double GnnDdpgAgent::critic_value(const env::Observation& obs,
                                  const std::vector<double>& flat_action) const {
  if (static_cast<int>(flat_action.size()) != action_size())
    throw ContractViolation("critic_value expects a full flattened action");
  diff::NoGradGuard no_grad;
  gnn::BatchedGraph graph = gnn::BatchedGraph::from_observation(obs);
  diff::Tensor masks =
      diff::Tensor::from_values({1, action_size()}, replay::mask_to_doubles(obs.mask));
  diff::Tensor actions = diff::Tensor::from_values({1, action_size()}, flat_action);
  return critic_forward(graph, actions, masks, critic_).item();
}

UpdateStats GnnDdpgAgent::update(const std::vector<replay::Transition>& batch) {
  if (batch.empty()) throw ContractViolation("empty update batch");
  replay::GraphBatch b = replay::collate(batch);
  const int s = b.batch_size();

  // bootstrapped critic target from the target networks
  std::vector<double> target_q(static_cast<size_t>(s));
  {
    diff::NoGradGuard no_grad;
    diff::Tensor next_action =
        diff::mul(actor_forward(b.next_graph, b.next_masks, target_actor_), b.next_masks);
    diff::Tensor next_q =
        critic_forward(b.next_graph, next_action, b.next_masks, target_critic_);
    for (int i = 0; i < s; ++i) {
      const double bootstrap =
          b.dones[static_cast<size_t>(i)] ? 0.0 : hp_.gamma * next_q.at(i, 0);
      target_q[static_cast<size_t>(i)] = b.rewards[static_cast<size_t>(i)] + bootstrap;
    }
  }

  UpdateStats stats;

  // critic step: minimize MSE(Q(s, a), y)
  {
    diff::Tensor q = critic_forward(b.obs_graph, b.actions, b.masks, critic_);
    diff::Tensor y = diff::Tensor::from_values({s, 1}, target_q);
    diff::Tensor err = diff::sub(q, y);
    diff::Tensor loss = diff::mean(diff::mul(err, err));
    stats.critic_loss = loss.item();
    diff::backward(loss);
    critic_opt_.step(critic_);
  }

  // actor step: ascend Q(s, mu(s) * mask); gradients reach the actor through
  // the critic, whose own accumulation is discarded afterwards
  {
    diff::Tensor mu = actor_forward(b.obs_graph, b.masks, actor_);
    diff::Tensor masked = diff::mul(mu, b.masks);
    diff::Tensor q = critic_forward(b.obs_graph, masked, b.masks, critic_);
    diff::Tensor objective = diff::mean(q);
    stats.mean_q = objective.item();
    diff::Tensor loss = diff::scale(objective, -1.0);
    diff::backward(loss);
    actor_opt_.step(actor_);
    critic_.zero_grads();
  }

  soft_update_targets();
  ++gradient_steps_;
  return stats;
}

void GnnDdpgAgent::soft_update_targets() {
  diff::soft_update(actor_, target_actor_, hp_.tau);
  diff::soft_update(critic_, target_critic_, hp_.tau);
  ++target_updates_;
}

void GnnDdpgAgent::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  actor_.save(dir + "/actor");
  critic_.save(dir + "/critic");
  target_actor_.save(dir + "/target_actor");
  target_critic_.save(dir + "/target_critic");

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "kind" << YAML::Value << "gnn-ddpg";
  y << YAML::Key << "chain_length" << YAML::Value << n_;
  y << YAML::Key << "v_max" << YAML::Value << v_max_;
  y << YAML::Key << "hidden_dim" << YAML::Value << embed_cfg_.hidden_dim;
  y << YAML::Key << "processor_iterations" << YAML::Value << embed_cfg_.processor_iterations;
  y << YAML::Key << "node_features" << YAML::Value << embed_cfg_.node_features;
  y << YAML::Key << "edge_features" << YAML::Value << embed_cfg_.edge_features;
  y << YAML::Key << "gamma" << YAML::Value << hp_.gamma;
  y << YAML::Key << "lr" << YAML::Value << hp_.lr;
  y << YAML::Key << "tau" << YAML::Value << hp_.tau;
  y << YAML::Key << "noise_mean" << YAML::Value << hp_.noise_mean;
  y << YAML::Key << "noise_std" << YAML::Value << hp_.noise_std;
  y << YAML::Key << "scheduling_threshold" << YAML::Value << hp_.scheduling_threshold;
  y << YAML::Key << "warmup_steps" << YAML::Value << hp_.warmup_steps;
  y << YAML::Key << "batch_size" << YAML::Value << hp_.batch_size;
  y << YAML::Key << "gradient_steps" << YAML::Value << gradient_steps_;
  y << YAML::Key << "target_updates" << YAML::Value << target_updates_;
  y << YAML::EndMap;
  std::ofstream out(dir + "/agent.yaml");
  if (!out) throw std::runtime_error("cannot write " + dir + "/agent.yaml");
  out << y.c_str() << "\n";
}

GnnDdpgAgent GnnDdpgAgent::load(const std::string& dir) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(dir + "/agent.yaml");
  } catch (const YAML::Exception&) {
    throw std::runtime_error("cannot read agent manifest in " + dir);
  }
  if (doc["kind"] && doc["kind"].as<std::string>() != "gnn-ddpg")
    throw ContractViolation("checkpoint in " + dir + " is not a gnn-ddpg agent");

  gnn::EmbedderConfig ecfg;
  ecfg.hidden_dim = doc["hidden_dim"].as<int>();
  ecfg.processor_iterations = doc["processor_iterations"].as<int>();
  ecfg.node_features = doc["node_features"].as<int>();
  ecfg.edge_features = doc["edge_features"].as<int>();
  Hyperparams hp;
  hp.gamma = doc["gamma"].as<double>();
  hp.lr = doc["lr"].as<double>();
  hp.tau = doc["tau"].as<double>();
  hp.noise_mean = doc["noise_mean"].as<double>();
  hp.noise_std = doc["noise_std"].as<double>();
  hp.scheduling_threshold = doc["scheduling_threshold"].as<double>();
  hp.warmup_steps = doc["warmup_steps"].as<int>();
  hp.batch_size = doc["batch_size"].as<int>();

  GnnDdpgAgent agent(doc["chain_length"].as<int>(), doc["v_max"].as<int>(), ecfg, hp,
                     /*seed=*/0);
  agent.actor_ = diff::ParameterSet::load(dir + "/actor");
  agent.critic_ = diff::ParameterSet::load(dir + "/critic");
  agent.target_actor_ = diff::ParameterSet::load(dir + "/target_actor");
  agent.target_critic_ = diff::ParameterSet::load(dir + "/target_critic");
  agent.gradient_steps_ = doc["gradient_steps"].as<long>();
  agent.target_updates_ = doc["target_updates"].as<long>();
  return agent;
}

}  // namespace coord::agent
