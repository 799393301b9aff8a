#include "coord/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "coord/errors.hpp"

namespace coord::harness {

TrainResult train(const env::ScenarioConfig& scenario, const TrainConfig& cfg,
                  agent::TrainableAgent& agent, std::ostream* progress) {
  env::Environment environment(scenario, cfg.seed);
  replay::ReplayBuffer buffer(cfg.buffer_capacity);
  Rng noise_rng(derive_seed(cfg.seed, 0xA11CE));
  Rng sample_rng(derive_seed(cfg.seed, 0xB0B));

  const agent::Hyperparams& hp = agent.hyperparams();
  TrainResult result;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    env::Observation obs = environment.reset();
    double reward_sum = 0.0;
    int steps = 0;
    for (int t = 0; t < scenario.episode_length; ++t) {
      sim::ActionTensor raw = agent.act(obs, /*explore=*/true, noise_rng);
      sim::SchedulingTensor action =
          agent::post_process(raw, obs.mask, hp.scheduling_threshold);
      env::StepResult sr = environment.step_processed(action);
      buffer.store({obs, action, sr.reward, sr.observation, sr.done});
      obs = std::move(sr.observation);
      reward_sum += sr.reward;
      ++steps;
      ++result.env_steps;
      if (sr.done) break;
    }
    result.episode_mean_reward.push_back(reward_sum / steps);

    // training period = episode boundary, gated by the warm-up step count
    if (result.env_steps >= hp.warmup_steps) {
      for (int g = 0; g < cfg.gradient_steps_per_period; ++g) {
        if (buffer.size() < static_cast<size_t>(hp.batch_size)) break;
        agent.update(buffer.sample(static_cast<size_t>(hp.batch_size), sample_rng));
      }
    }
    if (progress)
      (*progress) << "episode " << episode << " reward "
                  << result.episode_mean_reward.back() << "\n";
  }
  result.gradient_steps = agent.gradient_steps();
  result.target_updates = agent.target_updates();
  return result;
}

void write_reward_curve(const std::string& path, const std::vector<double>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (size_t i = 0; i < curve.size(); ++i) out << i << " " << curve[i] << "\n";
}

namespace {

double evaluate_one_rep(const agent::Policy& policy, const env::ScenarioConfig& scenario,
                        uint64_t rep_seed, int eval_steps) {
  env::Environment environment(scenario, rep_seed);
  Rng unused_rng(rep_seed);
  env::Observation obs = environment.reset();
  double total = 0.0;
  for (int t = 0; t < eval_steps; ++t) {
    sim::ActionTensor raw = policy.act(obs, /*explore=*/false, unused_rng);
    env::StepResult sr = environment.step(raw);
    total += sr.reward;
    obs = sr.done ? environment.reset() : std::move(sr.observation);
  }
  return total / eval_steps;
}

}  // namespace

ResultRecord evaluate(const agent::Policy& policy, const env::ScenarioConfig& scenario,
                      const EvalConfig& cfg) {
  ResultRecord record;
  record.agent = policy.name();
  record.scenario = scenario.name;
  record.seed = cfg.seed;
  record.per_rep.assign(static_cast<size_t>(cfg.repetitions), 0.0);

  const int workers = std::max(1, cfg.threads);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run_range = [&](int begin, int end) {
    try {
      for (int r = begin; r < end; ++r)
        record.per_rep[static_cast<size_t>(r)] = evaluate_one_rep(
            policy, scenario, derive_seed(cfg.seed, 1000 + static_cast<uint64_t>(r)),
            cfg.eval_steps);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers == 1) {
    run_range(0, cfg.repetitions);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.repetitions + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(cfg.repetitions, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  double sum = 0.0;
  for (double v : record.per_rep) sum += v;
  record.mean = sum / record.per_rep.size();
  double var = 0.0;
  for (double v : record.per_rep) var += (v - record.mean) * (v - record.mean);
  record.stddev = record.per_rep.size() > 1
                      ? std::sqrt(var / (record.per_rep.size() - 1))
                      : 0.0;
  return record;
}

void write_results(const std::string& path, const std::vector<ResultRecord>& records,
                   bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["agent"] = r.agent;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    if (r.error) {
      j["error"] = *r.error;
    } else {
      j["mean"] = r.mean;
      j["std"] = r.stddev;
      j["reps"] = r.per_rep;
    }
    out << j.dump() << "\n";
  }
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw std::runtime_error("cannot open experiment spec: " + path);
  } catch (const YAML::ParserException& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  ExperimentSpec spec;
  const std::string base_dir = std::filesystem::path(path).parent_path().string();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp = p;
    return fp.is_absolute() ? fp.string()
                            : (std::filesystem::path(base_dir) / fp).string();
  };
  try {
    if (doc["name"]) spec.name = doc["name"].as<std::string>();
    spec.scenario_path = resolve(doc["scenario"].as<std::string>());
    if (doc["traffic_models"])
      spec.traffic_models = doc["traffic_models"].as<std::vector<std::string>>();
    if (doc["ingress_counts"])
      spec.ingress_counts = doc["ingress_counts"].as<std::vector<int>>();
    if (doc["generalization"]) spec.generalization = doc["generalization"].as<std::string>();
    if (doc["repetitions"]) spec.repetitions = doc["repetitions"].as<int>();
    if (doc["eval_steps"]) spec.eval_steps = doc["eval_steps"].as<int>();
    if (doc["seed"]) spec.seed = doc["seed"].as<uint64_t>();
    if (doc["threads"]) spec.threads = doc["threads"].as<int>();
    for (const auto& a : doc["agents"]) {
      AgentRef ref;
      ref.kind = a["name"].as<std::string>();
      if (a["checkpoint"]) ref.checkpoint = resolve(a["checkpoint"].as<std::string>());
      spec.agents.push_back(ref);
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  if (spec.agents.empty()) throw ConfigError("experiment spec lists no agents");
  return spec;
}

namespace {

traffic::ArrivalProcess process_for_model(const std::string& model,
                                          const env::TrafficConfig& base) {
  if (model == "fixed") return traffic::ArrivalProcess::fixed(base.process.interval);
  if (model == "poisson") return traffic::ArrivalProcess::poisson(base.process.interval);
  if (model == "mmpp") return traffic::ArrivalProcess::make_mmpp(base.process.mmpp);
  if (model == "trace") {
    if (base.process.trace_path.empty())
      throw ConfigError("trace model requested but the scenario has no trace file");
    return traffic::ArrivalProcess::trace(base.process.trace_path);
  }
  throw ConfigError("unknown traffic model: " + model);
}

std::unique_ptr<agent::Policy> make_policy(const AgentRef& ref) {
  if (ref.kind == "random") return std::make_unique<RandomPolicy>();
  if (ref.kind == "gnn")
    return std::make_unique<agent::GnnDdpgAgent>(agent::GnnDdpgAgent::load(ref.checkpoint));
  if (ref.kind == "flat")
    return std::make_unique<FlatDdpgAgent>(FlatDdpgAgent::load(ref.checkpoint));
  throw ConfigError("unknown agent kind: " + ref.kind);
}

}  // namespace

std::vector<ResultRecord> run_sweep(const ExperimentSpec& spec, std::ostream* progress) {
  const env::ScenarioConfig base = env::ScenarioConfig::load(spec.scenario_path);
  std::vector<std::string> models = spec.traffic_models;
  if (models.empty()) models = {""};
  std::vector<int> counts = spec.ingress_counts;
  if (counts.empty()) counts = {-1};

  std::vector<ResultRecord> records;
  for (const auto& model : models) {
    for (int count : counts) {
      env::ScenarioConfig scenario = base;
      std::string label = base.name;
      if (!model.empty()) {
        scenario.traffic.process = process_for_model(model, base.traffic);
        label += "+" + model;
      }
      if (count > 0) {
        scenario.ingress_counts = {count};
        label += "+ingress" + std::to_string(count);
      }
      scenario.name = label;

      EvalConfig ec;
      ec.repetitions = spec.repetitions;
      ec.eval_steps = spec.eval_steps;
      ec.seed = spec.seed;
      ec.threads = spec.threads;

      for (const auto& ref : spec.agents) {
        if (progress) (*progress) << label << " / " << ref.kind << "...\n";
        std::unique_ptr<agent::Policy> policy = make_policy(ref);
        try {
          records.push_back(evaluate(*policy, scenario, ec));
        } catch (const UnsupportedCapability& e) {
          ResultRecord r;
          r.agent = policy->name();
          r.scenario = label;
          r.seed = spec.seed;
          r.error = e.what();
          records.push_back(std::move(r));
        }
      }
    }
  }
  return records;
}

// ---- gradient checks ---------------------------------------------------------

namespace {

struct FdCase {
  std::string name;
  diff::ParameterSet params;
  std::function<diff::Tensor()> forward;  // scalar loss over params
};

GradCheckResult check_case(FdCase& c) {
  constexpr double kH = 1e-5;
  GradCheckResult result;
  result.name = c.name;

  diff::Tensor loss = c.forward();
  diff::backward(loss);
  std::map<std::string, std::vector<double>> analytic;
  for (const auto& name : c.params.names()) analytic[name] = c.params.get(name).grad();
  c.params.zero_grads();

  for (const auto& name : c.params.names()) {
    diff::Tensor& p = c.params.get(name);
    for (size_t i = 0; i < p.numel(); ++i) {
      const double saved = p.values()[i];
      double plus, minus;
      {
        diff::NoGradGuard no_grad;
        p.values()[i] = saved + kH;
        plus = c.forward().item();
        p.values()[i] = saved - kH;
        minus = c.forward().item();
        p.values()[i] = saved;
      }
      const double fd = (plus - minus) / (2.0 * kH);
      const double an = analytic[name][i];
      const double rel = std::abs(an - fd) / std::max(std::abs(an) + std::abs(fd), 1e-3);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.entries_checked;
    }
  }
  return result;
}

env::Observation synthetic_observation(int num_nodes, int n, int v_max, Rng& rng) {
  env::Observation obs;
  obs.num_nodes = num_nodes;
  obs.node_features.resize(static_cast<size_t>(num_nodes) * env::Observation::kNodeFeatures);
  for (auto& v : obs.node_features) v = rng.uniform(-1.0, 1.0);
  // path graph, both directions per link
  obs.num_dir_edges = 2 * (num_nodes - 1);
  obs.edge_features.resize(static_cast<size_t>(obs.num_dir_edges) *
                           env::Observation::kEdgeFeatures);
  for (auto& v : obs.edge_features) v = rng.uniform(-1.0, 1.0);
  for (int i = 0; i + 1 < num_nodes; ++i) {
    obs.adj_src.push_back(i);
    obs.adj_dst.push_back(i + 1);
    obs.adj_src.push_back(i + 1);
    obs.adj_dst.push_back(i);
  }
  obs.mask.n = n;
  obs.mask.v_max = v_max;
  obs.mask.num_nodes = num_nodes;
  obs.mask.valid.assign(static_cast<size_t>(n) * v_max * v_max, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < num_nodes; ++j)
      for (int k = 0; k < num_nodes; ++k) obs.mask.valid[obs.mask.idx(i, j, k)] = 1;
  return obs;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);

  {  // dense layer through a smooth nonlinearity
    FdCase c;
    c.name = "dense";
    Rng init(derive_seed(seed, 1));
    c.params.create("w", {3, 5}, 3, init);
    c.params.create("b", {5}, 3, init);
    std::vector<double> xv(4 * 3);
    for (auto& v : xv) v = init.uniform(-1.0, 1.0);
    diff::Tensor x = diff::Tensor::from_values({4, 3}, xv);
    c.forward = [&c, x]() {
      return diff::mean(diff::sigmoid(diff::dense(x, c.params.get("w"), c.params.get("b"))));
    };
    results.push_back(check_case(c));
  }

  {  // one GATv2 layer on a 3-node path with self-loops
    FdCase c;
    c.name = "gatv2";
    Rng init(derive_seed(seed, 2));
    const int d = 3, de = 2, h = 4;
    c.params.create("w_dst", {d, h}, 2 * d + de, init);
    c.params.create("w_src", {d, h}, 2 * d + de, init);
    c.params.create("w_edge", {de, h}, 2 * d + de, init);
    c.params.create("attn", {h, 1}, h, init);
    c.params.create("w_out", {d, h}, d, init);
    std::vector<double> hv(3 * d), ev(7 * de);
    for (auto& v : hv) v = init.uniform(-1.0, 1.0);
    for (auto& v : ev) v = init.uniform(-1.0, 1.0);
    diff::Tensor hx = diff::Tensor::from_values({3, d}, hv);
    diff::Tensor ex = diff::Tensor::from_values({7, de}, ev);
    const std::vector<int> src = {0, 1, 1, 2, 0, 1, 2};
    const std::vector<int> dst = {1, 0, 2, 1, 0, 1, 2};
    c.forward = [&c, hx, ex, src, dst]() {
      gnn::GatLayerParams p{c.params.get("w_dst"), c.params.get("w_src"),
                            c.params.get("w_edge"), c.params.get("attn"),
                            c.params.get("w_out")};
      return diff::mean(diff::sigmoid(gnn::gatv2_layer(hx, ex, src, dst, p)));
    };
    results.push_back(check_case(c));
  }

  {  // full embedder (small hidden size keeps the sweep fast)
    FdCase c;
    c.name = "embedder";
    Rng init(derive_seed(seed, 3));
    gnn::EmbedderConfig cfg;
    cfg.hidden_dim = 6;
    cfg.processor_iterations = 2;
    gnn::init_embedder_params(c.params, "emb.", cfg, init);
    Rng obs_rng(derive_seed(seed, 4));
    env::Observation obs = synthetic_observation(4, 2, 6, obs_rng);
    auto graph = std::make_shared<gnn::BatchedGraph>(gnn::BatchedGraph::from_observation(obs));
    c.forward = [&c, graph, cfg]() {
      gnn::EmbedResult r = gnn::embed(*graph, c.params, "emb.", cfg);
      return diff::mean(r.graph_embedding);
    };
    results.push_back(check_case(c));
  }

  {  // actor head (sigmoid output)
    FdCase c;
    c.name = "actor-head";
    Rng init(derive_seed(seed, 5));
    agent::init_actor_head(c.params, 10, 6, 8, init);
    std::vector<double> xv(2 * 10);
    for (auto& v : xv) v = init.uniform(-1.0, 1.0);
    diff::Tensor x = diff::Tensor::from_values({2, 10}, xv);
    c.forward = [&c, x]() { return diff::mean(agent::actor_head_forward(c.params, x)); };
    results.push_back(check_case(c));
  }

  {  // critic head (scalar output)
    FdCase c;
    c.name = "critic-head";
    Rng init(derive_seed(seed, 6));
    agent::init_critic_head(c.params, 12, 6, init);
    std::vector<double> xv(3 * 12);
    for (auto& v : xv) v = init.uniform(-1.0, 1.0);
    diff::Tensor x = diff::Tensor::from_values({3, 12}, xv);
    c.forward = [&c, x]() { return diff::mean(agent::critic_head_forward(c.params, x)); };
    results.push_back(check_case(c));
  }

  return results;
}

}  // namespace coord::harness
