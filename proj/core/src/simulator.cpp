#include "coord/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "coord/errors.hpp"
#include "coord/rng.hpp"

namespace coord::sim {

ActionTensor ActionTensor::zeros(int n, int v_max) {
  ActionTensor t;
  t.n = n;
  t.v_max = v_max;
  t.x.assign(static_cast<size_t>(n) * v_max * v_max, 0.0);
  return t;
}

SchedulingTensor SchedulingTensor::zeros(int n, int v_max) {
  SchedulingTensor t;
  t.n = n;
  t.v_max = v_max;
  t.x.assign(static_cast<size_t>(n) * v_max * v_max, 0.0);
  return t;
}

DeploymentIndicator derive_deployment(const SchedulingTensor& x, int num_nodes) {
  DeploymentIndicator d;
  d.n = x.n;
  d.num_nodes = num_nodes;
  d.y.assign(static_cast<size_t>(x.n) * num_nodes, 0);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < num_nodes; ++j)
      for (int tau = 0; tau < x.v_max; ++tau)
        if (x.at(i, tau, j) > 0.0) {
          d.y[static_cast<size_t>(i) * num_nodes + j] = 1;
          break;
        }
  return d;
}

// ---- StepProfile -----------------------------------------------------------

void StepProfile::add(double start, double end, double amount) {
  if (!(start < end) || amount == 0.0) return;
  deltas_[start] += amount;
  deltas_[end] -= amount;
}

double StepProfile::level_at(double t) const {
  double level = base_;
  for (const auto& [at, d] : deltas_) {
    if (at > t) break;
    level += d;
  }
  return level;
}

double StepProfile::max_over(double start, double end) const {
  double level = base_;
  auto it = deltas_.begin();
  for (; it != deltas_.end() && it->first <= start; ++it) level += it->second;
  double peak = level;
  for (; it != deltas_.end() && it->first < end; ++it) {
    level += it->second;
    peak = std::max(peak, level);
  }
  return peak;
}

double StepProfile::integrate(double start, double end) const {
  if (!(start < end)) return 0.0;
  double level = base_;
  auto it = deltas_.begin();
  for (; it != deltas_.end() && it->first <= start; ++it) level += it->second;
  double t = start, acc = 0.0;
  for (; it != deltas_.end() && it->first < end; ++it) {
    acc += level * (it->first - t);
    t = it->first;
    level += it->second;
  }
  acc += level * (end - t);
  return acc;
}

void StepProfile::prune(double before) {
  auto it = deltas_.begin();
  while (it != deltas_.end() && it->first <= before) {
    base_ += it->second;
    it = deltas_.erase(it);
  }
}

// ---- ReservationLedger -----------------------------------------------------

ReservationLedger::ReservationLedger(int num_nodes, int num_links)
    : node_profiles_(num_nodes), link_profiles_(num_links) {}

bool ReservationLedger::node_fits(int node, double start, double end, double amount,
                                  double capacity) const {
  return node_profiles_[node].max_over(start, end) + amount <= capacity + kSlack;
}

bool ReservationLedger::link_fits(int link, double start, double end, double amount,
                                  double bandwidth) const {
  return link_profiles_[link].max_over(start, end) + amount <= bandwidth + kSlack;
}

void ReservationLedger::reserve_node(int node, double start, double end, double amount) {
  node_profiles_[node].add(start, end, amount);
}

void ReservationLedger::reserve_link(int link, double start, double end, double amount) {
  link_profiles_[link].add(start, end, amount);
}

double ReservationLedger::node_peak(int node, double start, double end) const {
  return node_profiles_[node].max_over(start, end);
}

double ReservationLedger::link_peak(int link, double start, double end) const {
  return link_profiles_[link].max_over(start, end);
}

double ReservationLedger::node_mean(int node, double start, double end) const {
  return node_profiles_[node].integrate(start, end) / (end - start);
}

double ReservationLedger::link_mean(int link, double start, double end) const {
  return link_profiles_[link].integrate(start, end) / (end - start);
}

void ReservationLedger::prune(double before) {
  for (auto& p : node_profiles_) p.prune(before);
  for (auto& p : link_profiles_) p.prune(before);
}

// ---- reward ----------------------------------------------------------------

double reward(const MonitoringSnapshot& snapshot) {
  const double total = static_cast<double>(snapshot.succ_count + snapshot.drop_count);
  if (total == 0.0) return 0.0;  // no traffic convention
  return static_cast<double>(snapshot.succ_count - snapshot.drop_count) / total;
}

const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::kNoDestination: return "no-destination";
    case DropReason::kLinkSaturated: return "link-saturated";
    case DropReason::kNodeSaturated: return "node-saturated";
  }
  return "?";
}

// ---- schedule_hop ----------------------------------------------------------

HopResult schedule_hop(traffic::Flow& flow, const SchedulingTensor& x,
                       const topo::NetworkTopology& topo,
                       const topo::RoutingTable& routing,
                       const traffic::ServiceChain& chain, ReservationLedger& ledger,
                       double now, double u) {
  const int v = topo.num_nodes();
  const int i = flow.current_function;
  const int j = flow.current_node;
  if (i < 0 || i >= chain.length()) throw ContractViolation("flow has no pending function");
  if (j < 0 || j >= v) throw ContractViolation("flow is at an unknown node");

  HopResult res;

  // inverse-CDF sample over row x[i][j][.] restricted to k < |V|
  double total = 0.0;
  for (int k = 0; k < v; ++k) total += x.at(i, j, k);
  if (total <= 0.0) {
    res.reason = DropReason::kNoDestination;
    return res;
  }
  const double target = u * total;
  int dest = -1;
  double acc = 0.0;
  for (int k = 0; k < v; ++k) {
    const double p = x.at(i, j, k);
    if (p <= 0.0) continue;
    acc += p;
    dest = k;
    if (acc > target) break;
  }

  const traffic::FunctionSpec& fn = chain.functions[static_cast<size_t>(i)];
  const double transfer_delay = j == dest ? 0.0 : routing.delay(j, dest);

  // bandwidth along the path, each link offset by the upstream link delays
  if (dest != j) {
    double offset = 0.0;
    for (int link : routing.links(j, dest)) {
      const auto& l = topo.links[static_cast<size_t>(link)];
      if (!ledger.link_fits(link, now + offset, now + offset + flow.duration, flow.rate,
                            l.bandwidth)) {
        res.reason = DropReason::kLinkSaturated;
        res.destination = dest;
        return res;
      }
      offset += l.delay;
    }
  }

  const double arrive = now + transfer_delay;
  const double demand = flow.rate * fn.resource_demand_factor;
  if (!ledger.node_fits(dest, arrive, arrive + flow.duration, demand,
                        topo.nodes[static_cast<size_t>(dest)].capacity)) {
    res.reason = DropReason::kNodeSaturated;
    res.destination = dest;
    return res;
  }

  // commit
  if (dest != j) {
    double offset = 0.0;
    for (int link : routing.links(j, dest)) {
      ledger.reserve_link(link, now + offset, now + offset + flow.duration, flow.rate);
      offset += topo.links[static_cast<size_t>(link)].delay;
    }
  }
  ledger.reserve_node(dest, arrive, arrive + flow.duration, demand);

  flow.accumulated_delay += transfer_delay + fn.processing_delay;
  flow.current_node = dest;
  flow.current_function = i + 1;

  res.advanced = true;
  res.destination = dest;
  res.completion_time = arrive + fn.processing_delay;
  return res;
}

// ---- Simulator --------------------------------------------------------------

Simulator::Simulator(topo::NetworkTopology topo, traffic::ServiceChain chain,
                     uint64_t seed)
    : topo_(std::move(topo)),
      routing_(shortest_paths(topo_)),
      chain_(std::move(chain)),
      seed_(seed),
      ledger_(topo_.num_nodes(), topo_.num_links()) {}

void Simulator::reset(uint64_t seed) {
  seed_ = seed;
  ledger_ = ReservationLedger(topo_.num_nodes(), topo_.num_links());
  events_ = {};
  flows_.clear();
  seq_counter_ = 0;
  in_transit_ = 0;
  total_arrived_ = total_succ_ = total_drop_ = 0;
}

MonitoringSnapshot Simulator::run_window(const SchedulingTensor& x,
                                         const std::vector<traffic::Flow>& arrivals,
                                         double window_start, double mp,
                                         std::ostream* event_log) {
  if (x.n != chain_.length())
    throw ContractViolation("scheduling tensor chain length mismatch");
  if (x.v_max < topo_.num_nodes())
    throw ContractViolation("scheduling tensor smaller than topology");

  const double window_end = window_start + mp;
  MonitoringSnapshot snap;
  snap.ingress_traffic.assign(static_cast<size_t>(topo_.num_nodes()), 0.0);

  for (const auto& f : arrivals) {
    if (f.arrival_time < window_start || f.arrival_time >= window_end)
      throw ContractViolation("arrival outside the window");
    flows_.emplace(f.flow_id, f);
    events_.push({f.arrival_time, f.flow_id, seq_counter_++, false});
    snap.ingress_traffic[static_cast<size_t>(f.src)] += f.rate;
    ++in_transit_;
    ++total_arrived_;
    ++snap.arrived_count;
  }

  while (!events_.empty() && events_.top().time < window_end) {
    const Event ev = events_.top();
    events_.pop();
    auto it = flows_.find(ev.flow_id);
    if (it == flows_.end()) throw ContractViolation("event for unknown flow");
    traffic::Flow& flow = it->second;

    if (ev.completion) {
      ++snap.succ_count;
      ++total_succ_;
      --in_transit_;
      if (event_log)
        (*event_log) << ev.time << "," << ev.flow_id << ",succ,node:" << flow.current_node
                     << ",\n";
      flows_.erase(it);
      continue;
    }

    const double u = keyed_uniform(seed_, static_cast<uint64_t>(ev.flow_id),
                                   static_cast<uint64_t>(flow.current_function));
    HopResult hop = schedule_hop(flow, x, topo_, routing_, chain_, ledger_, ev.time, u);
    if (!hop.advanced) {
      ++snap.drop_count;
      ++total_drop_;
      --in_transit_;
      if (event_log)
        (*event_log) << ev.time << "," << ev.flow_id << ",drop,node:" << flow.current_node
                     << "," << to_string(hop.reason) << "\n";
      flows_.erase(it);
      continue;
    }
    if (event_log)
      (*event_log) << ev.time << "," << ev.flow_id << ",hop,node:" << hop.destination
                   << ",\n";
    events_.push({hop.completion_time, ev.flow_id, seq_counter_++,
                  flow.current_function == chain_.length()});
  }

  snap.carryover_count = in_transit_;
  if (total_arrived_ != total_succ_ + total_drop_ + in_transit_)
    throw ContractViolation("flow conservation violated");

  snap.node_load_ratio.assign(static_cast<size_t>(topo_.num_nodes()), 0.0);
  for (int v = 0; v < topo_.num_nodes(); ++v) {
    const double cap = topo_.nodes[static_cast<size_t>(v)].capacity;
    if (cap > 0.0)
      snap.node_load_ratio[static_cast<size_t>(v)] =
          std::clamp(ledger_.node_mean(v, window_start, window_end) / cap, 0.0, 1.0);
  }
  snap.link_bandwidth_ratio.assign(static_cast<size_t>(topo_.num_links()), 0.0);
  for (int l = 0; l < topo_.num_links(); ++l) {
    const double bw = topo_.links[static_cast<size_t>(l)].bandwidth;
    if (bw > 0.0)
      snap.link_bandwidth_ratio[static_cast<size_t>(l)] =
          std::clamp(ledger_.link_mean(l, window_start, window_end) / bw, 0.0, 1.0);
  }

  ledger_.prune(window_end);
  return snap;
}

}  // namespace coord::sim
