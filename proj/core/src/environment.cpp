#include "coord/environment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "coord/errors.hpp"
#include "coord/post_process.hpp"
#include "coord/rng.hpp"

namespace coord::env {

double normalize_feature(double v, double v_max) {
  if (v_max <= 0.0) throw ContractViolation("normalization maximum must be positive");
  return 2.0 * std::min(v / v_max, 1.0) - 1.0;
}

namespace {

TrafficConfig parse_traffic(const YAML::Node& node, const std::string& base_dir) {
  TrafficConfig tc;
  if (!node) return tc;
  if (node["rate"]) tc.rate = node["rate"].as<double>();
  if (node["duration"]) tc.duration = node["duration"].as<double>();
  const std::string model = node["model"] ? node["model"].as<std::string>() : "fixed";
  if (model == "fixed") {
    tc.process = traffic::ArrivalProcess::fixed(
        node["interval"] ? node["interval"].as<double>() : 10.0);
  } else if (model == "poisson") {
    tc.process = traffic::ArrivalProcess::poisson(
        node["interval"] ? node["interval"].as<double>() : 10.0);
  } else if (model == "mmpp") {
    traffic::MmppParams mp;
    if (const auto& m = node["mmpp"]) {
      if (m["interval0"]) mp.mean_interval0 = m["interval0"].as<double>();
      if (m["interval1"]) mp.mean_interval1 = m["interval1"].as<double>();
      if (m["sojourn0"]) mp.mean_sojourn0 = m["sojourn0"].as<double>();
      if (m["sojourn1"]) mp.mean_sojourn1 = m["sojourn1"].as<double>();
    }
    tc.process = traffic::ArrivalProcess::make_mmpp(mp);
  } else if (model == "trace") {
    if (!node["trace_file"]) throw ConfigError("trace model requires trace_file");
    std::filesystem::path p = node["trace_file"].as<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    tc.process = traffic::ArrivalProcess::trace(p.string());
  } else {
    throw ConfigError("unknown traffic model: " + model);
  }
  return tc;
}

}  // namespace

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw std::runtime_error("cannot open scenario file: " + path);
  } catch (const YAML::ParserException& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }

  const std::string base_dir = std::filesystem::path(path).parent_path().string();
  ScenarioConfig cfg;
  try {
    if (doc["name"]) cfg.name = doc["name"].as<std::string>();
    if (doc["chain_length"]) cfg.chain_length = doc["chain_length"].as<int>();
    if (doc["v_max"]) cfg.v_max = doc["v_max"].as<int>();
    if (doc["episode_length"]) cfg.episode_length = doc["episode_length"].as<int>();
    if (doc["monitoring_period"])
      cfg.monitoring_period = doc["monitoring_period"].as<double>();
    if (doc["scheduling_threshold"])
      cfg.scheduling_threshold = doc["scheduling_threshold"].as<double>();
    if (doc["rotation"]) {
      const auto r = doc["rotation"].as<std::string>();
      if (r == "fixed")
        cfg.rotation = Rotation::kFixed;
      else if (r == "cycle")
        cfg.rotation = Rotation::kCycle;
      else if (r == "seeded-random")
        cfg.rotation = Rotation::kSeededRandom;
      else
        throw ConfigError("unknown rotation mode: " + r);
    }
    if (doc["generalization"]) cfg.generalization = doc["generalization"].as<std::string>();
    if (const auto& n = doc["normalization"]) {
      if (n["capacity_max"]) cfg.capacity_max = n["capacity_max"].as<double>();
      if (n["ingress_traffic_max"])
        cfg.ingress_traffic_max = n["ingress_traffic_max"].as<double>();
      if (n["delay_max"]) cfg.delay_max = n["delay_max"].as<double>();
    }
    if (const auto& s = doc["service"]) {
      if (s["demand_factor"]) cfg.demand_factor = s["demand_factor"].as<double>();
      if (s["processing_delay"]) cfg.processing_delay = s["processing_delay"].as<double>();
    }

    const std::string topo_dir =
        doc["topology_dir"] ? doc["topology_dir"].as<std::string>() : "";
    for (const auto& t : doc["topologies"]) {
      std::string file, overrides;
      if (t.IsScalar()) {
        file = t.as<std::string>();
      } else {
        file = t["file"].as<std::string>();
        if (t["overrides"]) overrides = t["overrides"].as<std::string>();
      }
      auto resolve = [&](const std::string& p) -> std::string {
        if (p.empty()) return p;
        std::filesystem::path fp = p;
        if (fp.is_absolute()) return fp.string();
        std::filesystem::path rel = std::filesystem::path(base_dir);
        if (!topo_dir.empty()) rel /= topo_dir;
        return (rel / fp).string();
      };
      cfg.topology_paths.push_back(resolve(file));
      cfg.override_paths.push_back(resolve(overrides));
    }

    for (const auto& c : doc["capacity_sets"]) {
      CapacitySet cs;
      if (c["default"]) cs.default_capacity = c["default"].as<double>();
      if (const auto& nodes = c["nodes"])
        for (const auto& kv : nodes)
          cs.per_node[kv.first.as<int>()] = kv.second.as<double>();
      cfg.capacity_sets.push_back(std::move(cs));
    }

    if (const auto& ing = doc["ingress"]) {
      if (ing["counts"]) cfg.ingress_counts = ing["counts"].as<std::vector<int>>();
      if (const auto& perms = ing["permutations"]; perms && perms.IsSequence())
        for (const auto& p : perms)
          cfg.ingress_permutations.push_back(p.as<std::vector<int>>());
    }
    cfg.traffic = parse_traffic(doc["traffic"], base_dir);
  } catch (const YAML::Exception& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }

  if (cfg.topology_paths.empty()) throw ConfigError("scenario lists no topologies");
  if (cfg.episode_length <= 0) throw ConfigError("episode_length must be positive");
  if (cfg.monitoring_period <= 0) throw ConfigError("monitoring_period must be positive");
  if (cfg.ingress_counts.empty()) throw ConfigError("ingress counts must be non-empty");
  return cfg;
}

Environment::Environment(ScenarioConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
  for (size_t i = 0; i < cfg_.topology_paths.size(); ++i) {
    topo::ParameterOverrides ov;
    if (!cfg_.override_paths[i].empty())
      ov = topo::ParameterOverrides::load(cfg_.override_paths[i]);
    topo::NetworkTopology t;
    try {
      t = topo::load_topology(cfg_.topology_paths[i], ov);
    } catch (const std::exception& e) {
      throw ConfigError("topology '" + cfg_.topology_paths[i] +
                        "' in rotation is invalid: " + e.what());
    }
    if (t.num_nodes() > cfg_.v_max)
      throw ConfigError("topology '" + t.name + "' exceeds v_max=" +
                        std::to_string(cfg_.v_max));
    base_topologies_.push_back(std::move(t));
  }
}

EpisodeSetup Environment::plan_episode(int episode_index) const {
  auto pick = [&](size_t size, uint64_t dim) -> int {
    if (size <= 1) return 0;
    switch (cfg_.rotation) {
      case ScenarioConfig::Rotation::kFixed: return 0;
      case ScenarioConfig::Rotation::kCycle:
        return static_cast<int>(episode_index % static_cast<int>(size));
      case ScenarioConfig::Rotation::kSeededRandom: {
        Rng r(derive_seed(derive_seed(seed_, 0xD100 + dim),
                          static_cast<uint64_t>(episode_index)));
        return static_cast<int>(r.below(size));
      }
    }
    return 0;
  };

  EpisodeSetup setup;
  setup.topology_index = pick(cfg_.topology_paths.size(), 0);
  setup.capacity_index =
      cfg_.capacity_sets.empty() ? -1 : pick(cfg_.capacity_sets.size(), 1);

  const topo::NetworkTopology& base =
      base_topologies_[static_cast<size_t>(setup.topology_index)];
  const int v = base.num_nodes();

  const int count =
      cfg_.ingress_counts[static_cast<size_t>(pick(cfg_.ingress_counts.size(), 2))];
  if (count <= 0 || count > v)
    throw ConfigError("ingress count " + std::to_string(count) +
                      " invalid for topology with " + std::to_string(v) + " nodes");

  std::vector<int> order;
  if (!cfg_.ingress_permutations.empty()) {
    order = cfg_.ingress_permutations[static_cast<size_t>(
        pick(cfg_.ingress_permutations.size(), 3))];
  } else {
    order.resize(static_cast<size_t>(v));
    std::iota(order.begin(), order.end(), 0);
    Rng r(derive_seed(derive_seed(seed_, 0xD100 + 3),
                      static_cast<uint64_t>(episode_index)));
    for (int i = v - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[r.below(static_cast<uint64_t>(i) + 1)]);
  }
  for (int node : order) {
    if (node >= 0 && node < v) setup.ingress_nodes.push_back(node);
    if (static_cast<int>(setup.ingress_nodes.size()) == count) break;
  }
  if (static_cast<int>(setup.ingress_nodes.size()) != count)
    throw ConfigError("ingress permutation has fewer than " + std::to_string(count) +
                      " nodes valid for this topology");
  std::sort(setup.ingress_nodes.begin(), setup.ingress_nodes.end());
  return setup;
}

Observation Environment::reset() {
  ++episode_;
  step_ = 0;
  clock_ = 0.0;
  setup_ = plan_episode(episode_);

  topo_ = base_topologies_[static_cast<size_t>(setup_.topology_index)];
  if (setup_.capacity_index >= 0) {
    const CapacitySet& cs = cfg_.capacity_sets[static_cast<size_t>(setup_.capacity_index)];
    for (auto& node : topo_.nodes) {
      if (cs.default_capacity) node.capacity = *cs.default_capacity;
      if (auto it = cs.per_node.find(node.id); it != cs.per_node.end())
        node.capacity = it->second;
    }
  }
  for (auto& node : topo_.nodes) node.is_ingress = false;
  for (int id : setup_.ingress_nodes)
    topo_.nodes[static_cast<size_t>(id)].is_ingress = true;

  mask_ = topo::build_mask(topo_, cfg_.chain_length, cfg_.v_max);
  simulator_ = std::make_unique<sim::Simulator>(
      topo_,
      traffic::ServiceChain::uniform(0, cfg_.chain_length, cfg_.demand_factor,
                                     cfg_.processing_delay),
      derive_seed(derive_seed(seed_, 0x51Au), static_cast<uint64_t>(episode_)));
  generator_ = std::make_unique<traffic::FlowGenerator>(
      cfg_.traffic.process, setup_.ingress_nodes, cfg_.traffic.rate,
      cfg_.traffic.duration, 0,
      derive_seed(derive_seed(seed_, 0x7Fu), static_cast<uint64_t>(episode_)));

  return observe(nullptr);
}

StepResult Environment::step(const sim::ActionTensor& raw_action) {
  if (raw_action.n != cfg_.chain_length || raw_action.v_max != cfg_.v_max)
    throw ContractViolation("action tensor has the wrong shape");
  for (double v : raw_action.x)
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractViolation("raw action entries must lie in [0, 1]");
  return step_processed(
      agent::post_process(raw_action, mask_, cfg_.scheduling_threshold));
}

StepResult Environment::step_processed(const sim::SchedulingTensor& action) {
  if (!simulator_) throw ContractViolation("step before reset");
  if (step_ >= cfg_.episode_length)
    throw ContractViolation("episode is over; call reset");

  const double mp = cfg_.monitoring_period;
  auto flows = generator_->spawn(clock_, clock_ + mp);
  const auto snap = simulator_->run_window(action, flows, clock_, mp);
  clock_ += mp;
  ++step_;

  StepResult result;
  result.reward = sim::reward(snap);
  result.done = step_ == cfg_.episode_length;
  result.observation = observe(&snap);
  return result;
}

const topo::NetworkTopology& Environment::topology() const {
  if (!simulator_) throw ContractViolation("no episode in progress");
  return topo_;
}

const topo::ActionMask& Environment::mask() const {
  if (!simulator_) throw ContractViolation("no episode in progress");
  return mask_;
}

Observation Environment::observe(const sim::MonitoringSnapshot* snap) const {
  Observation obs;
  const int v = topo_.num_nodes();
  obs.num_nodes = v;
  obs.node_features.resize(static_cast<size_t>(v) * Observation::kNodeFeatures);
  for (int i = 0; i < v; ++i) {
    const double ingress = snap ? snap->ingress_traffic[static_cast<size_t>(i)] : 0.0;
    const double load = snap ? snap->node_load_ratio[static_cast<size_t>(i)] : 0.0;
    double* row = &obs.node_features[static_cast<size_t>(i) * Observation::kNodeFeatures];
    row[0] = normalize_feature(ingress, cfg_.ingress_traffic_max);
    row[1] = normalize_feature(load, 1.0);
    row[2] = normalize_feature(topo_.nodes[static_cast<size_t>(i)].capacity,
                               cfg_.capacity_max);
  }

  const int e_dir = 2 * topo_.num_links();
  obs.num_dir_edges = e_dir;
  obs.edge_features.resize(static_cast<size_t>(e_dir) * Observation::kEdgeFeatures);
  obs.adj_src.resize(static_cast<size_t>(e_dir));
  obs.adj_dst.resize(static_cast<size_t>(e_dir));
  for (int l = 0; l < topo_.num_links(); ++l) {
    const auto& link = topo_.links[static_cast<size_t>(l)];
    const double used = snap ? snap->link_bandwidth_ratio[static_cast<size_t>(l)] : 0.0;
    const double feat[2] = {normalize_feature(link.delay, cfg_.delay_max),
                            normalize_feature(used, 1.0)};
    for (int dir = 0; dir < 2; ++dir) {
      const int e = 2 * l + dir;
      obs.adj_src[static_cast<size_t>(e)] = dir == 0 ? link.a : link.b;
      obs.adj_dst[static_cast<size_t>(e)] = dir == 0 ? link.b : link.a;
      obs.edge_features[static_cast<size_t>(e) * 2] = feat[0];
      obs.edge_features[static_cast<size_t>(e) * 2 + 1] = feat[1];
    }
  }
  obs.mask = mask_;
  return obs;
}

}  // namespace coord::env
