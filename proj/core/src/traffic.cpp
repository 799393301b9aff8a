#include "coord/traffic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "coord/errors.hpp"

namespace coord::traffic {

ServiceChain ServiceChain::uniform(int service_id, int n, double demand_factor,
                                   double processing_delay) {
  if (n <= 0) throw ContractViolation("chain length must be positive");
  ServiceChain c;
  c.service_id = service_id;
  c.functions.assign(static_cast<size_t>(n), {demand_factor, processing_delay});
  return c;
}

std::vector<TraceRow> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::vector<TraceRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "time,ingress,rate,duration")
        throw ParseError(path, 1, "expected header 'time,ingress,rate,duration'");
      continue;
    }
    TraceRow r;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream ss(line);
    if (!(ss >> r.time >> c1 >> r.ingress >> c2 >> r.rate >> c3 >> r.duration) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw ParseError(path, lineno, "malformed trace row");
    if (!rows.empty() && r.time < rows.back().time)
      throw ParseError(path, lineno, "trace times must be ascending");
    if (r.rate <= 0 || r.duration <= 0)
      throw ParseError(path, lineno, "rate and duration must be positive");
    rows.push_back(r);
  }
  return rows;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "time,ingress,rate,duration\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.time << "," << r.ingress << "," << r.rate << "," << r.duration << "\n";
}

ArrivalProcess ArrivalProcess::fixed(double interval) {
  if (interval <= 0) throw ContractViolation("fixed interval must be positive");
  ArrivalProcess p;
  p.kind = Kind::kFixed;
  p.interval = interval;
  return p;
}

ArrivalProcess ArrivalProcess::poisson(double mean_interval) {
  if (mean_interval <= 0) throw ContractViolation("mean interval must be positive");
  ArrivalProcess p;
  p.kind = Kind::kPoisson;
  p.interval = mean_interval;
  return p;
}

ArrivalProcess ArrivalProcess::make_mmpp(MmppParams mp) {
  if (mp.mean_interval0 <= 0 || mp.mean_interval1 <= 0 || mp.mean_sojourn0 <= 0 ||
      mp.mean_sojourn1 <= 0)
    throw ContractViolation("mmpp intervals and sojourns must be positive");
  ArrivalProcess p;
  p.kind = Kind::kMmpp;
  p.mmpp = mp;
  return p;
}

ArrivalProcess ArrivalProcess::trace(std::string path) {
  ArrivalProcess p;
  p.kind = Kind::kTrace;
  p.trace_path = std::move(path);
  return p;
}

ArrivalStream::ArrivalStream(const ArrivalProcess& process, int ingress, uint64_t seed,
                             const std::vector<TraceRow>* trace_rows)
    : process_(process), ingress_(ingress), rng_(seed), trace_rows_(trace_rows) {
  if (process_.kind == ArrivalProcess::Kind::kMmpp) {
    mmpp_state_ = 0;
    mmpp_switch_time_ = rng_.exponential(process_.mmpp.mean_sojourn0);
  }
  if (process_.kind == ArrivalProcess::Kind::kTrace && trace_rows_ == nullptr)
    throw ContractViolation("trace stream without trace rows");
}

std::optional<double> ArrivalStream::next_interarrival() {
  row_rate_.reset();
  row_duration_.reset();
  switch (process_.kind) {
    case ArrivalProcess::Kind::kFixed: {
      now_ += process_.interval;
      return process_.interval;
    }
    case ArrivalProcess::Kind::kPoisson: {
      const double gap = rng_.exponential(process_.interval);
      now_ += gap;
      return gap;
    }
    case ArrivalProcess::Kind::kMmpp: {
      // Poisson arrivals at the current state's rate, competing with state
      // switches; memorylessness lets us redraw after each switch.
      const double start = now_;
      double t = now_;
      while (true) {
        const double mean = mmpp_state_ == 0 ? process_.mmpp.mean_interval0
                                             : process_.mmpp.mean_interval1;
        const double candidate = t + rng_.exponential(mean);
        if (candidate < mmpp_switch_time_) {
          now_ = candidate;
          return candidate - start;
        }
        t = mmpp_switch_time_;
        mmpp_state_ ^= 1;
        const double sojourn = mmpp_state_ == 0 ? process_.mmpp.mean_sojourn0
                                                : process_.mmpp.mean_sojourn1;
        mmpp_switch_time_ = t + rng_.exponential(sojourn);
      }
    }
    case ArrivalProcess::Kind::kTrace: {
      while (trace_pos_ < trace_rows_->size() &&
             (*trace_rows_)[trace_pos_].ingress != ingress_)
        ++trace_pos_;
      if (trace_pos_ >= trace_rows_->size()) return std::nullopt;  // end of trace
      const TraceRow& row = (*trace_rows_)[trace_pos_++];
      const double gap = row.time - now_;
      now_ = row.time;
      row_rate_ = row.rate;
      row_duration_ = row.duration;
      return gap;
    }
  }
  return std::nullopt;
}

FlowGenerator::FlowGenerator(ArrivalProcess process, std::vector<int> ingress_nodes,
                             double rate, double duration, int service_id,
                             uint64_t master_seed)
    : rate_(rate), duration_(duration), service_id_(service_id) {
  if (ingress_nodes.empty()) throw ContractViolation("ingress set must be non-empty");
  if (rate <= 0 || duration <= 0)
    throw ContractViolation("flow rate and duration must be positive");
  if (process.kind == ArrivalProcess::Kind::kTrace)
    trace_rows_ = load_trace(process.trace_path);
  std::sort(ingress_nodes.begin(), ingress_nodes.end());
  for (int node : ingress_nodes) {
    streams_.emplace_back(process, node, derive_seed(master_seed, static_cast<uint64_t>(node)),
                          process.kind == ArrivalProcess::Kind::kTrace ? &trace_rows_ : nullptr);
    pending_.push_back(std::nullopt);
  }
}

std::vector<Flow> FlowGenerator::spawn(double t0, double t1) {
  std::vector<Flow> flows;
  if (!(t0 < t1)) return flows;

  struct Pending {
    double time;
    int src;
    double rate, duration;
  };
  std::vector<Pending> batch;

  for (size_t s = 0; s < streams_.size(); ++s) {
    auto& stream = streams_[s];
    // resume from a pending arrival that fell beyond the previous window
    std::optional<double> next = pending_[s];
    std::optional<double> rate = stream.row_rate();
    std::optional<double> dur = stream.row_duration();
    pending_[s].reset();
    while (true) {
      if (!next) {
        if (auto gap = stream.next_interarrival()) {
          next = stream.now();
          rate = stream.row_rate();
          dur = stream.row_duration();
          (void)gap;
        } else {
          trace_exhausted_ = true;
          break;
        }
      }
      if (*next >= t1) {
        pending_[s] = next;  // belongs to a later window
        break;
      }
      if (*next >= t0)
        batch.push_back({*next, stream.ingress(), rate.value_or(rate_), dur.value_or(duration_)});
      next.reset();
    }
  }

  std::sort(batch.begin(), batch.end(), [](const Pending& x, const Pending& y) {
    return std::tie(x.time, x.src) < std::tie(y.time, y.src);
  });
  flows.reserve(batch.size());
  for (const auto& p : batch) {
    Flow f;
    f.flow_id = next_flow_id_++;
    f.service_id = service_id_;
    f.src = p.src;
    f.rate = p.rate;
    f.arrival_time = p.time;
    f.duration = p.duration;
    f.current_node = p.src;
    flows.push_back(f);
  }
  return flows;
}

}  // namespace coord::traffic
