#pragma once

// Network graphs: loading (GraphML subset or YAML), parameter overrides,
// validation, delay-shortest routing, and the fixed-size action mask.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coord::topo {

inline constexpr int kMaxNodes = 64;  // hard |V| limit of the action space

struct NodeSpec {
  int id = 0;
  double capacity = 0.0;  // abstract compute units
  bool is_ingress = false;
};

struct LinkSpec {
  int a = 0, b = 0;  // normalized so a < b
  double bandwidth = 0.0;
  double delay = 1.0;
};

struct NetworkTopology {
  std::string name;
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  // index into links, or -1
  int link_index(int u, int v) const;
  // neighbors of u as (neighbor, link index), ascending neighbor id
  std::vector<std::pair<int, int>> neighbors(int u) const;
};

// Partial parameter assignment merged over file contents by node id / link
// endpoints. Defaults fill anything still missing afterwards.
struct ParameterOverrides {
  std::optional<double> default_capacity;
  std::optional<double> default_bandwidth;
  std::optional<double> default_delay;
  std::map<int, double> node_capacity;
  std::map<int, bool> node_ingress;
  std::map<std::pair<int, int>, double> link_bandwidth;  // key normalized a < b
  std::map<std::pair<int, int>, double> link_delay;

  static ParameterOverrides load(const std::string& path);  // YAML file
  void set_link_bandwidth(int u, int v, double bw);
  void set_link_delay(int u, int v, double d);
};

// Dispatches on extension: ".graphml" for the GraphML subset, anything else
// is parsed as the YAML topology document. Throws ParseError (with line),
// ValidationError (structure), or CapacityError (|V| > 64).
NetworkTopology load_topology(const std::string& path,
                              const ParameterOverrides& overrides = {});

// Validation used by load_topology; public for programmatically built graphs.
void validate_topology(const NetworkTopology& topo);

struct RoutingTable {
  int num_nodes = 0;
  std::vector<int> next_hop;                 // [src * V + dst]
  std::vector<double> path_delay;            // [src * V + dst]
  std::vector<std::vector<int>> path_links;  // link indices along the path

  int next(int src, int dst) const { return next_hop[idx(src, dst)]; }
  double delay(int src, int dst) const { return path_delay[idx(src, dst)]; }
  const std::vector<int>& links(int src, int dst) const { return path_links[idx(src, dst)]; }
  size_t idx(int src, int dst) const {
    return static_cast<size_t>(src) * num_nodes + dst;
  }
};

// Delay-minimal paths between all ordered pairs. Ties broken toward the
// lexicographically smallest node-id sequence, so the next hop is the lowest
// id among optimal choices.
RoutingTable shortest_paths(const NetworkTopology& topo);

struct ActionMask {
  int n = 0;          // chain length
  int v_max = 0;      // padded node count
  int num_nodes = 0;  // actual |V| of the masked topology
  std::vector<uint8_t> valid;  // n * v_max * v_max entries

  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(i) * v_max + j) * v_max + k;
  }
  bool at(int i, int j, int k) const { return valid[idx(i, j, k)] != 0; }
  size_t true_count() const;
};

// valid[i][j][k] = (j < |V| and k < |V|); throws CapacityError if |V| > v_max.
ActionMask build_mask(const NetworkTopology& topo, int chain_length, int v_max);

}  // namespace coord::topo
