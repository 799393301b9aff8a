// Command-line front end: train agents, evaluate checkpoints, run experiment
// sweeps, verify gradients, and generate traffic traces.

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <iostream>

#include "coord/baselines.hpp"
#include "coord/harness.hpp"

namespace {

using namespace coord;

int cmd_train(const std::string& scenario_path, uint64_t seed, int episodes, int eta,
              const std::string& agent_kind, const std::string& out_dir,
              const std::string& curve_path, bool quiet) {
  env::ScenarioConfig scenario = env::ScenarioConfig::load(scenario_path);
  harness::TrainConfig cfg;
  cfg.episodes = episodes;
  cfg.gradient_steps_per_period = eta;
  cfg.seed = seed;

  agent::Hyperparams hp;
  hp.scheduling_threshold = scenario.scheduling_threshold;

  std::unique_ptr<agent::TrainableAgent> agent;
  if (agent_kind == "gnn") {
    gnn::EmbedderConfig ecfg;
    agent = std::make_unique<agent::GnnDdpgAgent>(scenario.chain_length, scenario.v_max,
                                                  ecfg, hp, seed);
  } else if (agent_kind == "flat") {
    env::Environment probe(scenario, seed);
    env::Observation example = probe.reset();
    agent = std::make_unique<harness::FlatDdpgAgent>(example, hp, seed);
  } else {
    std::cerr << "unknown agent kind: " << agent_kind << "\n";
    return 2;
  }

  harness::TrainResult result =
      harness::train(scenario, cfg, *agent, quiet ? nullptr : &std::cerr);
  agent->save(out_dir);
  if (!curve_path.empty()) harness::write_reward_curve(curve_path, result.episode_mean_reward);

  double tail = 0.0;
  const size_t window = std::min<size_t>(10, result.episode_mean_reward.size());
  for (size_t i = result.episode_mean_reward.size() - window;
       i < result.episode_mean_reward.size(); ++i)
    tail += result.episode_mean_reward[i];
  std::cout << "trained " << agent->name() << ": episodes=" << episodes
            << " env_steps=" << result.env_steps
            << " gradient_steps=" << result.gradient_steps
            << " last10_mean_reward=" << (window ? tail / window : 0.0) << "\n"
            << "checkpoint: " << out_dir << "\n";
  return 0;
}

std::string checkpoint_kind(const std::string& dir) {
  YAML::Node doc = YAML::LoadFile(dir + "/agent.yaml");
  return doc["kind"] ? doc["kind"].as<std::string>() : "gnn-ddpg";
}

int cmd_eval(const std::string& checkpoint, const std::string& spec_path,
             const std::string& out_path) {
  harness::ExperimentSpec spec = harness::ExperimentSpec::load(spec_path);
  const std::string kind = checkpoint_kind(checkpoint);
  spec.agents = {{kind == "flat-ddpg" ? "flat" : "gnn", checkpoint}};
  auto records = harness::run_sweep(spec, &std::cerr);
  harness::write_results(out_path, records);
  for (const auto& r : records) {
    std::cout << r.agent << " on " << r.scenario << ": ";
    if (r.error)
      std::cout << "error=" << *r.error << "\n";
    else
      std::cout << "mean=" << r.mean << " std=" << r.stddev << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path) {
  harness::ExperimentSpec spec = harness::ExperimentSpec::load(spec_path);
  auto records = harness::run_sweep(spec, &std::cerr);
  harness::write_results(out_path, records);
  std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(uint64_t seed) {
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  for (const auto& r : harness::run_gradient_checks(seed)) {
    const bool pass = r.max_rel_error < kTolerance;
    ok = ok && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << r.name << ": max rel error "
              << r.max_rel_error << " over " << r.entries_checked << " entries\n";
  }
  return ok ? 0 : 1;
}

int cmd_tracegen(const std::string& model, double interval, double rate, double duration,
                 const std::vector<int>& ingress, double horizon, uint64_t seed,
                 const std::string& out_path) {
  traffic::ArrivalProcess process;
  if (model == "fixed")
    process = traffic::ArrivalProcess::fixed(interval);
  else if (model == "poisson")
    process = traffic::ArrivalProcess::poisson(interval);
  else if (model == "mmpp")
    process = traffic::ArrivalProcess::make_mmpp({});
  else {
    std::cerr << "unknown model: " << model << "\n";
    return 2;
  }
  traffic::FlowGenerator gen(process, ingress, rate, duration, 0, seed);
  std::vector<traffic::TraceRow> rows;
  for (const auto& f : gen.spawn(0.0, horizon))
    rows.push_back({f.arrival_time, f.src, f.rate, f.duration});
  traffic::write_trace(out_path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"service coordination testbed: simulator, agents, experiments"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train an agent on a scenario");
  std::string scenario_path, out_dir = "checkpoint", curve_path, agent_kind = "gnn";
  uint64_t seed = 1;
  int episodes = 300, eta = 64;
  bool quiet = false;
  train->add_option("--scenario", scenario_path, "scenario YAML")->required();
  train->add_option("--seed", seed, "training seed");
  train->add_option("--episodes", episodes, "number of episodes");
  train->add_option("--eta", eta, "gradient steps per training period");
  train->add_option("--agent", agent_kind, "gnn | flat");
  train->add_option("--out", out_dir, "checkpoint output directory");
  train->add_option("--curve", curve_path, "reward curve output file");
  train->add_flag("--quiet", quiet, "suppress per-episode progress");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a spec");
  std::string checkpoint, spec_path, results_path = "results.jsonl";
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--spec", spec_path, "experiment spec YAML")->required();
  eval->add_option("--out", results_path, "results output (JSON lines)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a full experiment grid");
  std::string sweep_spec, sweep_out = "results.jsonl";
  sweep->add_option("--spec", sweep_spec, "experiment spec YAML")->required();
  sweep->add_option("--out", sweep_out, "results output (JSON lines)");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  uint64_t gc_seed = 7;
  gradcheck->add_option("--seed", gc_seed, "seed for the randomized checks");

  // tracegen
  auto* tracegen = app.add_subcommand("tracegen", "generate a traffic trace file");
  std::string tg_model = "poisson", tg_out = "trace.csv";
  double tg_interval = 10.0, tg_rate = 1.0, tg_duration = 8.0, tg_horizon = 20000.0;
  std::vector<int> tg_ingress = {0};
  uint64_t tg_seed = 1;
  tracegen->add_option("--model", tg_model, "fixed | poisson | mmpp");
  tracegen->add_option("--interval", tg_interval, "mean inter-arrival time");
  tracegen->add_option("--rate", tg_rate, "flow rate");
  tracegen->add_option("--duration", tg_duration, "flow duration");
  tracegen->add_option("--ingress", tg_ingress, "ingress node ids");
  tracegen->add_option("--horizon", tg_horizon, "trace end time");
  tracegen->add_option("--seed", tg_seed, "seed");
  tracegen->add_option("--out", tg_out, "output trace file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(scenario_path, seed, episodes, eta, agent_kind, out_dir,
                       curve_path, quiet);
    if (eval->parsed()) return cmd_eval(checkpoint, spec_path, results_path);
    if (sweep->parsed()) return cmd_sweep(sweep_spec, sweep_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
    if (tracegen->parsed())
      return cmd_tracegen(tg_model, tg_interval, tg_rate, tg_duration, tg_ingress,
                          tg_horizon, tg_seed, tg_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
