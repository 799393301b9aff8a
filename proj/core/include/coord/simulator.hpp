#pragma once

// Flow-level discrete-event engine for one monitoring period at a time:
// probabilistic per-hop scheduling, interval-based capacity/bandwidth
// reservations, success/drop accounting, and cumulative window statistics.
//
// Destination sampling is order-independent: the uniform draw for a hop is
// keyed by (run seed, flow id, function index), so identical inputs give
// identical outcomes no matter how events interleave. Simultaneous events
// are processed in ascending (time, flow id, insertion order).

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "coord/topology.hpp"
#include "coord/traffic.hpp"

namespace coord::sim {

// Raw actor output: entries in [0, 1], no row constraint yet.
struct ActionTensor {
  int n = 0, v_max = 0;
  std::vector<double> x;

  static ActionTensor zeros(int n, int v_max);
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(i) * v_max + j) * v_max + k;
  }
  double at(int i, int j, int k) const { return x[idx(i, j, k)]; }
  double& at(int i, int j, int k) { return x[idx(i, j, k)]; }
};

// Row-stochastic scheduling tensor: for j < |V| each row sums to 1, nonzero
// entries are at least the scheduling threshold, masked entries are zero.
struct SchedulingTensor {
  int n = 0, v_max = 0;
  std::vector<double> x;

  static SchedulingTensor zeros(int n, int v_max);
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(i) * v_max + j) * v_max + k;
  }
  double at(int i, int j, int k) const { return x[idx(i, j, k)]; }
  double& at(int i, int j, int k) { return x[idx(i, j, k)]; }
};

struct DeploymentIndicator {
  int n = 0, num_nodes = 0;
  std::vector<uint8_t> y;  // n * num_nodes

  bool at(int i, int j) const { return y[static_cast<size_t>(i) * num_nodes + j] != 0; }
};

// y[i][j] = 1 iff any source row schedules function i onto node j.
DeploymentIndicator derive_deployment(const SchedulingTensor& x, int num_nodes);

// Piecewise-constant usage profile over time.
class StepProfile {
 public:
  void add(double start, double end, double amount);
  double level_at(double t) const;            // value on [t, next breakpoint)
  double max_over(double start, double end) const;
  double integrate(double start, double end) const;
  void prune(double before);  // fold breakpoints at or before `before` into the base

 private:
  std::map<double, double> deltas_;
  double base_ = 0.0;
};

class ReservationLedger {
 public:
  ReservationLedger() = default;
  ReservationLedger(int num_nodes, int num_links);

  bool node_fits(int node, double start, double end, double amount, double capacity) const;
  bool link_fits(int link, double start, double end, double amount, double bandwidth) const;
  void reserve_node(int node, double start, double end, double amount);
  void reserve_link(int link, double start, double end, double amount);

  double node_peak(int node, double start, double end) const;
  double link_peak(int link, double start, double end) const;
  double node_mean(int node, double start, double end) const;
  double link_mean(int link, double start, double end) const;
  void prune(double before);

  static constexpr double kSlack = 1e-9;  // tolerance for capacity comparisons

 private:
  std::vector<StepProfile> node_profiles_, link_profiles_;
};

struct MonitoringSnapshot {
  std::vector<double> ingress_traffic;       // per node: sum of arrived rates in MP
  std::vector<double> node_load_ratio;       // per node: time-averaged usage / capacity
  std::vector<double> link_bandwidth_ratio;  // per link
  long succ_count = 0;
  long drop_count = 0;
  long arrived_count = 0;    // arrivals in this window
  long carryover_count = 0;  // flows still in transit at window end
};

// (succ - drop) / (succ + drop); 0 when there was no traffic at all.
double reward(const MonitoringSnapshot& snapshot);

enum class DropReason { kNoDestination, kLinkSaturated, kNodeSaturated };
const char* to_string(DropReason r);

struct HopResult {
  bool advanced = false;
  DropReason reason = DropReason::kNoDestination;
  int destination = -1;
  double completion_time = 0.0;  // when this function finishes processing
};

// One scheduling hop for `flow` at time `now` with uniform draw `u`:
// samples the destination from row x[current_function][current_node], checks
// bandwidth along the routed path and capacity at the destination, and on
// success commits the reservations and advances the flow.
HopResult schedule_hop(traffic::Flow& flow, const SchedulingTensor& x,
                       const topo::NetworkTopology& topo,
                       const topo::RoutingTable& routing,
                       const traffic::ServiceChain& chain, ReservationLedger& ledger,
                       double now, double u);

class Simulator {
 public:
  Simulator(topo::NetworkTopology topo, traffic::ServiceChain chain, uint64_t seed);

  // Processes one monitoring period [window_start, window_start + mp).
  // `arrivals` must be sorted by arrival time and lie inside the window.
  // In-transit flows and reservations carry over between calls.
  MonitoringSnapshot run_window(const SchedulingTensor& x,
                                const std::vector<traffic::Flow>& arrivals,
                                double window_start, double mp,
                                std::ostream* event_log = nullptr);

  void reset(uint64_t seed);  // drops all carryover state
  long in_transit() const { return in_transit_; }
  long total_arrived() const { return total_arrived_; }
  long total_succeeded() const { return total_succ_; }
  long total_dropped() const { return total_drop_; }

  const topo::NetworkTopology& topology() const { return topo_; }
  const topo::RoutingTable& routing() const { return routing_; }
  const traffic::ServiceChain& chain() const { return chain_; }
  const ReservationLedger& ledger() const { return ledger_; }

 private:
  struct Event {
    double time;
    long flow_id;
    long seq;
    bool completion;  // completion events only count; hop events schedule
    bool operator>(const Event& o) const {
      return std::tie(time, flow_id, seq) > std::tie(o.time, o.flow_id, o.seq);
    }
  };

  topo::NetworkTopology topo_;
  topo::RoutingTable routing_;
  traffic::ServiceChain chain_;
  uint64_t seed_;
  ReservationLedger ledger_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::map<long, traffic::Flow> flows_;  // in-flight flow states by id
  long seq_counter_ = 0;
  long in_transit_ = 0;
  long total_arrived_ = 0, total_succ_ = 0, total_drop_ = 0;
};

}  // namespace coord::sim
