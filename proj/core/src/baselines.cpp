#include "coord/baselines.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "coord/errors.hpp"

namespace coord::harness {

namespace {
constexpr int kActorHidden = 256;
constexpr int kCriticHidden = 64;
}  // namespace

sim::ActionTensor RandomPolicy::act(const env::Observation& obs, bool /*explore*/,
                                    Rng& rng) const {
  sim::ActionTensor action = sim::ActionTensor::zeros(obs.mask.n, obs.mask.v_max);
  for (size_t i = 0; i < action.x.size(); ++i)
    if (obs.mask.valid[i]) action.x[i] = rng.uniform();
  return action;
}

FlatDdpgAgent::FlatDdpgAgent(const env::Observation& example, agent::Hyperparams hp,
                             uint64_t seed)
    : n_(example.mask.n),
      v_max_(example.mask.v_max),
      fixed_nodes_(example.num_nodes),
      fixed_edges_(example.num_dir_edges),
      hp_(hp),
      actor_opt_({hp.lr}),
      critic_opt_({hp.lr}) {
  obs_dim_ = fixed_nodes_ * env::Observation::kNodeFeatures +
             fixed_edges_ * env::Observation::kEdgeFeatures + action_size();

  Rng actor_rng(derive_seed(seed, 11));
  actor_.init_seed = seed;
  agent::init_actor_head(actor_, obs_dim_, kActorHidden, action_size(), actor_rng);
  Rng critic_rng(derive_seed(seed, 12));
  critic_.init_seed = seed;
  agent::init_critic_head(critic_, obs_dim_ + action_size(), kCriticHidden, critic_rng);

  target_actor_ = actor_.clone();
  target_critic_ = critic_.clone();
}

std::vector<double> FlatDdpgAgent::flatten(const env::Observation& obs) const {
  if (obs.num_nodes != fixed_nodes_ || obs.num_dir_edges != fixed_edges_ ||
      obs.mask.n != n_ || obs.mask.v_max != v_max_)
    throw UnsupportedCapability(
        "flat-ddpg observation layout is fixed at construction; topology size changed");
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(obs_dim_));
  flat.insert(flat.end(), obs.node_features.begin(), obs.node_features.end());
  flat.insert(flat.end(), obs.edge_features.begin(), obs.edge_features.end());
  for (uint8_t b : obs.mask.valid) flat.push_back(b ? 1.0 : 0.0);
  return flat;
}

diff::Tensor FlatDdpgAgent::actor_forward(const diff::Tensor& obs,
                                          const diff::ParameterSet& params) const {
  return agent::actor_head_forward(params, obs);
}

diff::Tensor FlatDdpgAgent::critic_forward(const diff::Tensor& obs,
                                           const diff::Tensor& actions,
                                           const diff::ParameterSet& params) const {
  return agent::critic_head_forward(params, diff::concat_cols({obs, actions}));
}

sim::ActionTensor FlatDdpgAgent::act(const env::Observation& obs, bool explore,
                                     Rng& rng) const {
  diff::NoGradGuard no_grad;
  diff::Tensor input = diff::Tensor::from_values({1, obs_dim_}, flatten(obs));
  diff::Tensor out = actor_forward(input, actor_);

  sim::ActionTensor action = sim::ActionTensor::zeros(n_, v_max_);
  for (size_t i = 0; i < action.x.size(); ++i) {
    double v = out.values()[i];
    if (explore) v += rng.gaussian(hp_.noise_mean, hp_.noise_std);
    v = std::clamp(v, 0.0, 1.0);
    action.x[i] = obs.mask.valid[i] ? v : 0.0;
  }
  return action;
}

agent::UpdateStats FlatDdpgAgent::update(const std::vector<replay::Transition>& batch) {
  if (batch.empty()) throw ContractViolation("empty update batch");
  const int s = static_cast<int>(batch.size());
  const size_t a = static_cast<size_t>(action_size());

  std::vector<double> obs_flat, next_flat, actions;
  obs_flat.reserve(static_cast<size_t>(s) * obs_dim_);
  next_flat.reserve(static_cast<size_t>(s) * obs_dim_);
  actions.reserve(static_cast<size_t>(s) * a);
  std::vector<double> rewards(static_cast<size_t>(s));
  std::vector<uint8_t> dones(static_cast<size_t>(s));
  for (int i = 0; i < s; ++i) {
    const auto& t = batch[static_cast<size_t>(i)];
    if (t.action.x.size() != a)
      throw ContractViolation("mixed action shapes in one batch");
    const auto o = flatten(t.obs);
    const auto no = flatten(t.next_obs);
    obs_flat.insert(obs_flat.end(), o.begin(), o.end());
    next_flat.insert(next_flat.end(), no.begin(), no.end());
    actions.insert(actions.end(), t.action.x.begin(), t.action.x.end());
    rewards[static_cast<size_t>(i)] = t.reward;
    dones[static_cast<size_t>(i)] = t.done ? 1 : 0;
  }
  diff::Tensor obs_t = diff::Tensor::from_values({s, obs_dim_}, std::move(obs_flat));
  diff::Tensor next_t = diff::Tensor::from_values({s, obs_dim_}, std::move(next_flat));
  diff::Tensor act_t =
      diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(actions));

  // next-state mask lives in the tail of the flattened observation
  std::vector<double> next_mask(static_cast<size_t>(s) * a);
  for (int i = 0; i < s; ++i)
    for (size_t k = 0; k < a; ++k)
      next_mask[static_cast<size_t>(i) * a + k] =
          next_t.at(i, obs_dim_ - static_cast<int>(a) + static_cast<int>(k));
  diff::Tensor next_mask_t =
      diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(next_mask));

  std::vector<double> target_q(static_cast<size_t>(s));
  {
    diff::NoGradGuard no_grad;
    diff::Tensor next_action = diff::mul(actor_forward(next_t, target_actor_), next_mask_t);
    diff::Tensor next_q = critic_forward(next_t, next_action, target_critic_);
    for (int i = 0; i < s; ++i)
      target_q[static_cast<size_t>(i)] =
          rewards[static_cast<size_t>(i)] +
          (dones[static_cast<size_t>(i)] ? 0.0 : hp_.gamma * next_q.at(i, 0));
  }

  agent::UpdateStats stats;
  {
    diff::Tensor q = critic_forward(obs_t, act_t, critic_);
    diff::Tensor y = diff::Tensor::from_values({s, 1}, target_q);
    diff::Tensor err = diff::sub(q, y);
    diff::Tensor loss = diff::mean(diff::mul(err, err));
    stats.critic_loss = loss.item();
    diff::backward(loss);
    critic_opt_.step(critic_);
  }
  {
    std::vector<double> mask_now(static_cast<size_t>(s) * a);
    for (int i = 0; i < s; ++i)
      for (size_t k = 0; k < a; ++k)
        mask_now[static_cast<size_t>(i) * a + k] =
            obs_t.at(i, obs_dim_ - static_cast<int>(a) + static_cast<int>(k));
    diff::Tensor mask_t =
        diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(mask_now));
    diff::Tensor mu = diff::mul(actor_forward(obs_t, actor_), mask_t);
    diff::Tensor q = critic_forward(obs_t, mu, critic_);
    diff::Tensor objective = diff::mean(q);
    stats.mean_q = objective.item();
    diff::backward(diff::scale(objective, -1.0));
    actor_opt_.step(actor_);
    critic_.zero_grads();
  }

  diff::soft_update(actor_, target_actor_, hp_.tau);
  diff::soft_update(critic_, target_critic_, hp_.tau);
  ++gradient_steps_;
  ++target_updates_;
  return stats;
}

void FlatDdpgAgent::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  actor_.save(dir + "/actor");
  critic_.save(dir + "/critic");
  target_actor_.save(dir + "/target_actor");
  target_critic_.save(dir + "/target_critic");

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "kind" << YAML::Value << "flat-ddpg";
  y << YAML::Key << "chain_length" << YAML::Value << n_;
  y << YAML::Key << "v_max" << YAML::Value << v_max_;
  y << YAML::Key << "fixed_nodes" << YAML::Value << fixed_nodes_;
  y << YAML::Key << "fixed_edges" << YAML::Value << fixed_edges_;
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

FlatDdpgAgent FlatDdpgAgent::load(const std::string& dir) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(dir + "/agent.yaml");
  } catch (const YAML::Exception&) {
    throw std::runtime_error("cannot read agent manifest in " + dir);
  }
  if (doc["kind"] && doc["kind"].as<std::string>() != "flat-ddpg")
    throw ContractViolation("checkpoint in " + dir + " is not a flat-ddpg agent");

  FlatDdpgAgent agent;
  agent.n_ = doc["chain_length"].as<int>();
  agent.v_max_ = doc["v_max"].as<int>();
  agent.fixed_nodes_ = doc["fixed_nodes"].as<int>();
  agent.fixed_edges_ = doc["fixed_edges"].as<int>();
  agent.obs_dim_ = agent.fixed_nodes_ * env::Observation::kNodeFeatures +
                   agent.fixed_edges_ * env::Observation::kEdgeFeatures +
                   agent.action_size();
  agent.hp_.gamma = doc["gamma"].as<double>();
  agent.hp_.lr = doc["lr"].as<double>();
  agent.hp_.tau = doc["tau"].as<double>();
  agent.hp_.noise_mean = doc["noise_mean"].as<double>();
  agent.hp_.noise_std = doc["noise_std"].as<double>();
  agent.hp_.scheduling_threshold = doc["scheduling_threshold"].as<double>();
  agent.hp_.warmup_steps = doc["warmup_steps"].as<int>();
  agent.hp_.batch_size = doc["batch_size"].as<int>();
  agent.actor_ = diff::ParameterSet::load(dir + "/actor");
  agent.critic_ = diff::ParameterSet::load(dir + "/critic");
  agent.target_actor_ = diff::ParameterSet::load(dir + "/target_actor");
  agent.target_critic_ = diff::ParameterSet::load(dir + "/target_critic");
  agent.actor_opt_ = diff::Adam({agent.hp_.lr});
  agent.critic_opt_ = diff::Adam({agent.hp_.lr});
  agent.gradient_steps_ = doc["gradient_steps"].as<long>();
  agent.target_updates_ = doc["target_updates"].as<long>();
  return agent;
}

}  // namespace coord::harness
