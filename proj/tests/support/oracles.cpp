#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coord/errors.hpp"
#include "coord/post_process.hpp"
#include "coord/rng.hpp"

namespace oracles {

using coord::Rng;
using coord::keyed_uniform;

// ---- dense attention-layer reference ----------------------------------------

DenseGatResult dense_gat_reference(const Matrix& states, const Matrix& edge_features,
                                   const std::vector<int>& edge_src,
                                   const std::vector<int>& edge_dst,
                                   const DenseGatParams& params) {
  const int n = static_cast<int>(states.size());
  const int hidden = static_cast<int>(params.attn.size());
  const int node_dim = static_cast<int>(states[0].size());
  const int edge_dim = static_cast<int>(edge_features.empty() ? 0 : edge_features[0].size());
  const size_t num_edges = edge_src.size();

  // raw scores per edge: a^T LeakyReLU(W . [h_dst || h_src || e])
  std::vector<double> raw(num_edges);
  for (size_t e = 0; e < num_edges; ++e) {
    std::vector<double> concat;
    concat.reserve(static_cast<size_t>(2 * node_dim + edge_dim));
    for (double v : states[static_cast<size_t>(edge_dst[e])]) concat.push_back(v);
    for (double v : states[static_cast<size_t>(edge_src[e])]) concat.push_back(v);
    for (double v : edge_features[e]) concat.push_back(v);

    double score = 0.0;
    for (int r = 0; r < hidden; ++r) {
      double acc = 0.0;
      for (size_t c = 0; c < concat.size(); ++c) acc += params.w_concat[r][c] * concat[c];
      if (acc < 0.0) acc *= params.leaky_slope;
      score += params.attn[static_cast<size_t>(r)] * acc;
    }
    raw[e] = score;
  }

  // softmax over each destination's incoming edges (self-loop included)
  std::vector<double> alpha(num_edges, 0.0);
  for (int v = 0; v < n; ++v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t e = 0; e < num_edges; ++e)
      if (edge_dst[e] == v) mx = std::max(mx, raw[e]);
    double sum = 0.0;
    for (size_t e = 0; e < num_edges; ++e)
      if (edge_dst[e] == v) {
        alpha[e] = std::exp(raw[e] - mx);
        sum += alpha[e];
      }
    for (size_t e = 0; e < num_edges; ++e)
      if (edge_dst[e] == v) alpha[e] /= sum;
  }

  auto transform = [&](int node) {
    std::vector<double> out(static_cast<size_t>(hidden), 0.0);
    for (int r = 0; r < hidden; ++r)
      for (int c = 0; c < node_dim; ++c)
        out[static_cast<size_t>(r)] +=
            params.w_out[static_cast<size_t>(r)][static_cast<size_t>(c)] *
            states[static_cast<size_t>(node)][static_cast<size_t>(c)];
    return out;
  };

  DenseGatResult result;
  result.edge_alpha = alpha;
  result.next_states.assign(static_cast<size_t>(n),
                            std::vector<double>(static_cast<size_t>(hidden), 0.0));
  for (int v = 0; v < n; ++v) {
    // aggregation: m_v = sum over neighbors of alpha_vw * W h_w
    std::vector<double> m(static_cast<size_t>(hidden), 0.0);
    double alpha_self = 0.0;
    for (size_t e = 0; e < num_edges; ++e) {
      if (edge_dst[e] != v) continue;
      if (edge_src[e] == v) {
        alpha_self = alpha[e];
        continue;
      }
      const auto tw = transform(edge_src[e]);
      for (int r = 0; r < hidden; ++r) m[static_cast<size_t>(r)] += alpha[e] * tw[static_cast<size_t>(r)];
    }
    // update: h'_v = alpha_vv * W h_v + m_v
    const auto self_tw = transform(v);
    for (int r = 0; r < hidden; ++r)
      result.next_states[static_cast<size_t>(v)][static_cast<size_t>(r)] =
          alpha_self * self_tw[static_cast<size_t>(r)] + m[static_cast<size_t>(r)];
  }
  return result;
}

// ---- routing reference -------------------------------------------------------

namespace {
void dfs_paths(const coord::topo::NetworkTopology& topo, int current, int dst,
               std::vector<int>& path, std::vector<char>& visited, double delay,
               PathInfo& best) {
  if (current == dst) {
    if (delay < best.delay || (delay == best.delay && path < best.nodes)) {
      best.nodes = path;
      best.delay = delay;
    }
    return;
  }
  for (auto [next, link] : topo.neighbors(current)) {
    if (visited[static_cast<size_t>(next)]) continue;
    visited[static_cast<size_t>(next)] = 1;
    path.push_back(next);
    dfs_paths(topo, next, dst, path, visited, delay + topo.links[static_cast<size_t>(link)].delay,
              best);
    path.pop_back();
    visited[static_cast<size_t>(next)] = 0;
  }
}
}  // namespace

PathInfo best_path_by_enumeration(const coord::topo::NetworkTopology& topo, int src,
                                  int dst) {
  PathInfo best;
  best.delay = std::numeric_limits<double>::infinity();
  std::vector<int> path{src};
  std::vector<char> visited(static_cast<size_t>(topo.num_nodes()), 0);
  visited[static_cast<size_t>(src)] = 1;
  dfs_paths(topo, src, dst, path, visited, 0.0, best);
  return best;
}

// ---- flow simulator reference -------------------------------------------------

namespace {

struct Reservation {
  double start, end, amount;
};

// usage sampled on a dt grid across [start, end); mirrors the engine's
// closed-open interval semantics without reusing its step profiles
bool fits(const std::vector<Reservation>& existing, double start, double end,
          double amount, double cap, double dt) {
  for (double t = start; t < end; t += dt) {
    double level = 0.0;
    for (const auto& r : existing)
      if (r.start <= t && t < r.end) level += r.amount;
    if (level + amount > cap + 1e-9) return false;
  }
  return true;
}

struct PendingEvent {
  double time;
  long flow_id;
  long insert_order;
  bool completion;
};

}  // namespace

OracleRunResult brute_force_simulate(const coord::topo::NetworkTopology& topo,
                                     const coord::traffic::ServiceChain& chain,
                                     const coord::sim::SchedulingTensor& x,
                                     const std::vector<coord::traffic::Flow>& flows,
                                     int num_windows, double mp, uint64_t seed,
                                     double dt) {
  const int v = topo.num_nodes();
  // per ordered pair: enumerated best path (node sequence)
  std::vector<std::vector<PathInfo>> paths(static_cast<size_t>(v),
                                           std::vector<PathInfo>(static_cast<size_t>(v)));
  for (int a = 0; a < v; ++a)
    for (int b = 0; b < v; ++b)
      if (a != b) paths[static_cast<size_t>(a)][static_cast<size_t>(b)] =
          best_path_by_enumeration(topo, a, b);

  std::vector<std::vector<Reservation>> node_res(static_cast<size_t>(v));
  std::map<std::pair<int, int>, std::vector<Reservation>> link_res;

  std::map<long, coord::traffic::Flow> state;
  std::vector<PendingEvent> pending;
  long insert_counter = 0;
  for (const auto& f : flows) {
    state[f.flow_id] = f;
    pending.push_back({f.arrival_time, f.flow_id, insert_counter++, false});
  }

  OracleRunResult result;
  result.windows.resize(static_cast<size_t>(num_windows));
  for (const auto& f : flows) {
    const int w = static_cast<int>(f.arrival_time / mp);
    if (w >= 0 && w < num_windows) ++result.windows[static_cast<size_t>(w)].arrived;
  }

  long in_flight = static_cast<long>(flows.size());

  for (int w = 0; w < num_windows; ++w) {
    const double window_end = (w + 1) * mp;
    for (double clock = w * mp; clock < window_end; clock += dt) {
      while (true) {
        // earliest due event, ties by flow id then insertion
        int best = -1;
        for (size_t i = 0; i < pending.size(); ++i) {
          if (pending[i].time >= std::min(clock + dt, window_end)) continue;
          if (best == -1) {
            best = static_cast<int>(i);
            continue;
          }
          const auto& a = pending[static_cast<size_t>(best)];
          const auto& b = pending[i];
          if (std::tie(b.time, b.flow_id, b.insert_order) <
              std::tie(a.time, a.flow_id, a.insert_order))
            best = static_cast<int>(i);
        }
        if (best == -1) break;
        PendingEvent ev = pending[static_cast<size_t>(best)];
        pending.erase(pending.begin() + best);
        auto& flow = state.at(ev.flow_id);

        if (ev.completion) {
          ++result.windows[static_cast<size_t>(w)].succ;
          --in_flight;
          continue;
        }

        const int i = flow.current_function;
        const int j = flow.current_node;
        double total = 0.0;
        for (int k = 0; k < v; ++k) total += x.at(i, j, k);
        if (total <= 0.0) {
          ++result.windows[static_cast<size_t>(w)].drop;
          --in_flight;
          continue;
        }
        const double u = keyed_uniform(seed, static_cast<uint64_t>(ev.flow_id),
                                       static_cast<uint64_t>(i));
        const double target = u * total;
        int dest = -1;
        double acc = 0.0;
        for (int k = 0; k < v; ++k) {
          if (x.at(i, j, k) <= 0.0) continue;
          acc += x.at(i, j, k);
          dest = k;
          if (acc > target) break;
        }

        bool ok = true;
        double transfer_delay = 0.0;
        if (dest != j) {
          const PathInfo& path = paths[static_cast<size_t>(j)][static_cast<size_t>(dest)];
          double offset = 0.0;
          for (size_t h = 0; ok && h + 1 < path.nodes.size(); ++h) {
            const int a = std::min(path.nodes[h], path.nodes[h + 1]);
            const int b = std::max(path.nodes[h], path.nodes[h + 1]);
            const int li = topo.link_index(a, b);
            const auto& spec = topo.links[static_cast<size_t>(li)];
            if (!fits(link_res[{a, b}], ev.time + offset, ev.time + offset + flow.duration,
                      flow.rate, spec.bandwidth, dt))
              ok = false;
            offset += spec.delay;
          }
          transfer_delay = path.delay;
        }
        const double arrive = ev.time + transfer_delay;
        const double demand =
            flow.rate * chain.functions[static_cast<size_t>(i)].resource_demand_factor;
        if (ok && !fits(node_res[static_cast<size_t>(dest)], arrive,
                        arrive + flow.duration, demand,
                        topo.nodes[static_cast<size_t>(dest)].capacity, dt))
          ok = false;

        if (!ok) {
          ++result.windows[static_cast<size_t>(w)].drop;
          --in_flight;
          continue;
        }

        if (dest != j) {
          const PathInfo& path = paths[static_cast<size_t>(j)][static_cast<size_t>(dest)];
          double offset = 0.0;
          for (size_t h = 0; h + 1 < path.nodes.size(); ++h) {
            const int a = std::min(path.nodes[h], path.nodes[h + 1]);
            const int b = std::max(path.nodes[h], path.nodes[h + 1]);
            link_res[{a, b}].push_back(
                {ev.time + offset, ev.time + offset + flow.duration, flow.rate});
            offset += topo.links[static_cast<size_t>(topo.link_index(a, b))].delay;
          }
        }
        node_res[static_cast<size_t>(dest)].push_back({arrive, arrive + flow.duration, demand});

        flow.current_node = dest;
        flow.current_function = i + 1;
        const double done_at =
            arrive + chain.functions[static_cast<size_t>(i)].processing_delay;
        pending.push_back(
            {done_at, ev.flow_id, insert_counter++, flow.current_function == chain.length()});
      }
    }
  }
  result.carryover = in_flight;
  return result;
}

// ---- shared fixtures -----------------------------------------------------------

coord::topo::NetworkTopology line_topology(int num_nodes, double capacity,
                                           double bandwidth, double delay) {
  coord::topo::NetworkTopology t;
  t.name = "line" + std::to_string(num_nodes);
  for (int i = 0; i < num_nodes; ++i) t.nodes.push_back({i, capacity, i == 0});
  for (int i = 0; i + 1 < num_nodes; ++i) t.links.push_back({i, i + 1, bandwidth, delay});
  coord::topo::validate_topology(t);
  return t;
}

coord::topo::NetworkTopology random_small_topology(Rng& rng, int max_nodes) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_nodes)));
  coord::topo::NetworkTopology t;
  t.name = "random" + std::to_string(n);
  auto q = [&](double lo, double hi) {  // multiples of 0.25 for exact sums
    const int steps = static_cast<int>((hi - lo) / 0.25);
    return lo + 0.25 * static_cast<double>(rng.below(static_cast<uint64_t>(steps) + 1));
  };
  for (int i = 0; i < n; ++i) t.nodes.push_back({i, q(0.5, 3.0), i == 0});
  // random spanning tree, then a few extra links
  for (int i = 1; i < n; ++i) {
    const int parent = static_cast<int>(rng.below(static_cast<uint64_t>(i)));
    t.links.push_back({std::min(parent, i), std::max(parent, i), q(0.5, 3.0), q(0.25, 2.0)});
  }
  for (int attempt = 0; attempt < n; ++attempt) {
    const int a = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    const int b = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    if (a == b || t.link_index(a, b) >= 0) continue;
    t.links.push_back({std::min(a, b), std::max(a, b), q(0.5, 3.0), q(0.25, 2.0)});
  }
  coord::topo::validate_topology(t);
  return t;
}

coord::sim::SchedulingTensor random_scheduling_tensor(Rng& rng, int n, int num_nodes,
                                                      int v_max) {
  if (num_nodes > v_max) throw coord::ContractViolation("num_nodes exceeds v_max");
  coord::sim::ActionTensor raw = coord::sim::ActionTensor::zeros(n, v_max);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < num_nodes; ++j)
      for (int k = 0; k < num_nodes; ++k) raw.at(i, j, k) = rng.uniform();
  coord::topo::ActionMask mask;
  mask.n = n;
  mask.v_max = v_max;
  mask.num_nodes = num_nodes;
  mask.valid.assign(static_cast<size_t>(n) * v_max * v_max, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < num_nodes; ++j)
      for (int k = 0; k < num_nodes; ++k) mask.valid[mask.idx(i, j, k)] = 1;
  return coord::agent::post_process(raw, mask, 0.1);
}

coord::env::Observation random_observation(Rng& rng, int num_nodes, int n, int v_max) {
  if (num_nodes > v_max) throw coord::ContractViolation("num_nodes exceeds v_max");
  coord::env::Observation obs;
  obs.num_nodes = num_nodes;
  obs.node_features.resize(static_cast<size_t>(num_nodes) *
                           coord::env::Observation::kNodeFeatures);
  for (auto& f : obs.node_features) f = rng.uniform(-1.0, 1.0);

  // random spanning tree in both directions
  std::vector<std::pair<int, int>> links;
  for (int i = 1; i < num_nodes; ++i)
    links.emplace_back(static_cast<int>(rng.below(static_cast<uint64_t>(i))), i);
  obs.num_dir_edges = static_cast<int>(links.size()) * 2;
  obs.edge_features.resize(static_cast<size_t>(obs.num_dir_edges) *
                           coord::env::Observation::kEdgeFeatures);
  for (auto& f : obs.edge_features) f = rng.uniform(-1.0, 1.0);
  for (auto [a, b] : links) {
    obs.adj_src.push_back(a);
    obs.adj_dst.push_back(b);
    obs.adj_src.push_back(b);
    obs.adj_dst.push_back(a);
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

}  // namespace oracles
