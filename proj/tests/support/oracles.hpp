#pragma once

// Independent reference implementations used only by tests. These share no
// code with the engine paths they check: the attention layer is evaluated
// with literal dense matrices, routing is brute-force path enumeration, and
// the flow simulator advances a fixed-step clock over explicit reservation
// lists.

#include <cstdint>
#include <vector>

#include "coord/environment.hpp"
#include "coord/simulator.hpp"
#include "coord/topology.hpp"
#include "coord/traffic.hpp"

namespace oracles {

using Matrix = std::vector<std::vector<double>>;

// ---- dense attention-layer reference ----------------------------------------

struct DenseGatParams {
  Matrix w_concat;             // hidden x (2 * node_dim + edge_dim)
  std::vector<double> attn;    // hidden
  Matrix w_out;                // hidden x node_dim
  double leaky_slope = 0.2;
};

struct DenseGatResult {
  Matrix next_states;                 // n x hidden
  std::vector<double> edge_alpha;     // one attention weight per input edge
};

// Literal evaluation of the attention message/aggregation/update equations
// over an edge list that must include one self-loop per node.
DenseGatResult dense_gat_reference(const Matrix& states, const Matrix& edge_features,
                                   const std::vector<int>& edge_src,
                                   const std::vector<int>& edge_dst,
                                   const DenseGatParams& params);

// ---- routing reference -------------------------------------------------------

struct PathInfo {
  std::vector<int> nodes;
  double delay = 0.0;
};

// All-simple-paths search (feasible for |V| <= 8): minimal total delay,
// ties broken toward the lexicographically smallest node sequence.
PathInfo best_path_by_enumeration(const coord::topo::NetworkTopology& topo, int src,
                                  int dst);

// ---- flow simulator reference -------------------------------------------------

struct OracleWindowCounts {
  long succ = 0;
  long drop = 0;
  long arrived = 0;
};

struct OracleRunResult {
  std::vector<OracleWindowCounts> windows;
  long carryover = 0;  // flows still in flight after the last window
};

// Fixed-step (dt) re-simulation of the hop-by-hop semantics; `flows` spans
// all windows, each window w covers [w * mp, (w+1) * mp).
OracleRunResult brute_force_simulate(const coord::topo::NetworkTopology& topo,
                                     const coord::traffic::ServiceChain& chain,
                                     const coord::sim::SchedulingTensor& x,
                                     const std::vector<coord::traffic::Flow>& flows,
                                     int num_windows, double mp, uint64_t seed,
                                     double dt = 0.01);

// ---- shared test fixtures ------------------------------------------------------

coord::topo::NetworkTopology line_topology(int num_nodes, double capacity,
                                           double bandwidth, double delay);

// Random connected topology with parameters quantized to 0.25 steps.
coord::topo::NetworkTopology random_small_topology(coord::Rng& rng, int max_nodes);

// Random scheduling tensor satisfying the row-stochastic invariants.
coord::sim::SchedulingTensor random_scheduling_tensor(coord::Rng& rng, int n,
                                                      int num_nodes, int v_max);

// Observation filled with random features over a random connected graph.
coord::env::Observation random_observation(coord::Rng& rng, int num_nodes, int n,
                                           int v_max);

}  // namespace oracles
