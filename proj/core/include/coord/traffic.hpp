#pragma once

// Flow demand generation: Fixed / Poisson / MMPP / trace-file arrival
// processes, one independent stream per ingress node.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coord/rng.hpp"

namespace coord::traffic {

struct FunctionSpec {
  double resource_demand_factor = 1.0;
  double processing_delay = 5.0;
};

struct ServiceChain {
  int service_id = 0;
  std::vector<FunctionSpec> functions;

  int length() const { return static_cast<int>(functions.size()); }
  static ServiceChain uniform(int service_id, int n, double demand_factor = 1.0,
                              double processing_delay = 5.0);
};

struct Flow {
  long flow_id = 0;
  int service_id = 0;
  int src = 0;
  double rate = 1.0;
  double arrival_time = 0.0;
  double duration = 8.0;
  // hop-by-hop progress
  int current_function = 0;
  int current_node = 0;
  double accumulated_delay = 0.0;
};

struct MmppParams {
  double mean_interval0 = 5.0;
  double mean_interval1 = 20.0;
  double mean_sojourn0 = 500.0;
  double mean_sojourn1 = 500.0;
};

struct TraceRow {
  double time = 0.0;
  int ingress = 0;
  double rate = 1.0;
  double duration = 8.0;
};

// Trace file: header "time,ingress,rate,duration", one row per flow,
// ascending time.
std::vector<TraceRow> load_trace(const std::string& path);
void write_trace(const std::string& path, const std::vector<TraceRow>& rows);

struct ArrivalProcess {
  enum class Kind { kFixed, kPoisson, kMmpp, kTrace };
  Kind kind = Kind::kFixed;
  double interval = 10.0;  // fixed interval, or Poisson mean
  MmppParams mmpp;
  std::string trace_path;

  static ArrivalProcess fixed(double interval);
  static ArrivalProcess poisson(double mean_interval);
  static ArrivalProcess make_mmpp(MmppParams p);
  static ArrivalProcess trace(std::string path);
};

// State of one ingress node's arrival stream.
class ArrivalStream {
 public:
  ArrivalStream(const ArrivalProcess& process, int ingress, uint64_t seed,
                const std::vector<TraceRow>* trace_rows = nullptr);

  // Gap between the previous arrival (or stream start) and the next one;
  // nullopt once a trace is exhausted. Advances the stream.
  std::optional<double> next_interarrival();

  double now() const { return now_; }
  int ingress() const { return ingress_; }
  // rate/duration attached to the arrival most recently returned (traces
  // carry their own values; analytic processes use the configured ones)
  std::optional<double> row_rate() const { return row_rate_; }
  std::optional<double> row_duration() const { return row_duration_; }

 private:
  ArrivalProcess process_;
  int ingress_ = 0;
  Rng rng_;
  double now_ = 0.0;
  // mmpp modulation
  int mmpp_state_ = 0;
  double mmpp_switch_time_ = 0.0;
  // trace cursor
  const std::vector<TraceRow>* trace_rows_ = nullptr;
  size_t trace_pos_ = 0;
  std::optional<double> row_rate_, row_duration_;
};

// One stream per ingress node, sub-seeded from (master_seed, node id) so
// streams are independent of which other ingress nodes exist.
class FlowGenerator {
 public:
  FlowGenerator(ArrivalProcess process, std::vector<int> ingress_nodes,
                double rate, double duration, int service_id, uint64_t master_seed);

  // Flows with arrival_time in [t0, t1), sorted by (arrival_time, src).
  // Generator state advances; windows are expected to be consecutive.
  std::vector<Flow> spawn(double t0, double t1);

  bool trace_exhausted() const { return trace_exhausted_; }

 private:
  std::vector<ArrivalStream> streams_;
  std::vector<TraceRow> trace_rows_;
  std::vector<std::optional<double>> pending_;  // next arrival time per stream
  double rate_, duration_;
  int service_id_;
  long next_flow_id_ = 0;
  bool trace_exhausted_ = false;
};

}  // namespace coord::traffic
