#include "coord/topology.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <queue>

#include "coord/errors.hpp"

namespace coord::topo {

namespace graphml {  // implemented in graphml.cpp
struct RawNode {
  int id;
  std::optional<double> capacity;
  std::optional<bool> ingress;
};
struct RawLink {
  int a, b;
  std::optional<double> bandwidth;
  std::optional<double> delay;
};
struct RawGraph {
  std::string name;
  std::vector<RawNode> nodes;
  std::vector<RawLink> links;
};
RawGraph parse_file(const std::string& path);
}  // namespace graphml

namespace {

using graphml::RawGraph;
using graphml::RawLink;
using graphml::RawNode;

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RawGraph parse_yaml_topology(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw std::runtime_error("cannot open topology file: " + path);
  } catch (const YAML::ParserException& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  RawGraph g;
  try {
    g.name = doc["name"] ? doc["name"].as<std::string>() : std::string{};
    for (const auto& n : doc["nodes"]) {
      RawNode node{};
      node.id = n["id"].as<int>();
      if (n["capacity"]) node.capacity = n["capacity"].as<double>();
      if (n["ingress"]) node.ingress = n["ingress"].as<bool>();
      g.nodes.push_back(node);
    }
    for (const auto& l : doc["links"]) {
      RawLink link{};
      link.a = l["a"].as<int>();
      link.b = l["b"].as<int>();
      if (l["bandwidth"]) link.bandwidth = l["bandwidth"].as<double>();
      if (l["delay"]) link.delay = l["delay"].as<double>();
      g.links.push_back(link);
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  return g;
}

void check_connected(const NetworkTopology& topo) {
  const int v = topo.num_nodes();
  if (v == 0) throw ValidationError("topology has no nodes");
  std::vector<char> seen(v, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (auto [w, link] : topo.neighbors(u)) {
      (void)link;
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push(w);
      }
    }
  }
  if (count != v) throw ValidationError("topology is not connected");
}

}  // namespace

int NetworkTopology::link_index(int u, int v) const {
  const int lo = std::min(u, v), hi = std::max(u, v);
  for (int i = 0; i < num_links(); ++i)
    if (links[i].a == lo && links[i].b == hi) return i;
  return -1;
}

std::vector<std::pair<int, int>> NetworkTopology::neighbors(int u) const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < num_links(); ++i) {
    if (links[i].a == u) out.emplace_back(links[i].b, i);
    if (links[i].b == u) out.emplace_back(links[i].a, i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ParameterOverrides ParameterOverrides::load(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw std::runtime_error("cannot open overrides file: " + path);
  } catch (const YAML::ParserException& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  ParameterOverrides ov;
  try {
    if (doc["defaults"]) {
      const auto& d = doc["defaults"];
      if (d["capacity"]) ov.default_capacity = d["capacity"].as<double>();
      if (d["bandwidth"]) ov.default_bandwidth = d["bandwidth"].as<double>();
      if (d["delay"]) ov.default_delay = d["delay"].as<double>();
    }
    for (const auto& n : doc["nodes"]) {
      const int id = n["id"].as<int>();
      if (n["capacity"]) ov.node_capacity[id] = n["capacity"].as<double>();
      if (n["ingress"]) ov.node_ingress[id] = n["ingress"].as<bool>();
    }
    for (const auto& l : doc["links"]) {
      const int a = l["a"].as<int>(), b = l["b"].as<int>();
      if (l["bandwidth"]) ov.set_link_bandwidth(a, b, l["bandwidth"].as<double>());
      if (l["delay"]) ov.set_link_delay(a, b, l["delay"].as<double>());
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(path, e.mark.line + 1, e.msg);
  }
  return ov;
}

void ParameterOverrides::set_link_bandwidth(int u, int v, double bw) {
  link_bandwidth[{std::min(u, v), std::max(u, v)}] = bw;
}

void ParameterOverrides::set_link_delay(int u, int v, double d) {
  link_delay[{std::min(u, v), std::max(u, v)}] = d;
}

NetworkTopology load_topology(const std::string& path,
                              const ParameterOverrides& overrides) {
  RawGraph raw = has_suffix(path, ".graphml") ? graphml::parse_file(path)
                                              : parse_yaml_topology(path);

  NetworkTopology topo;
  topo.name = raw.name;
  for (const auto& rn : raw.nodes) {
    NodeSpec n;
    n.id = rn.id;
    std::optional<double> cap = rn.capacity;
    if (auto it = overrides.node_capacity.find(rn.id); it != overrides.node_capacity.end())
      cap = it->second;
    if (!cap) cap = overrides.default_capacity;
    if (!cap)
      throw ValidationError("node " + std::to_string(rn.id) +
                            " has no capacity in file or overrides");
    n.capacity = *cap;
    n.is_ingress = rn.ingress.value_or(false);
    if (auto it = overrides.node_ingress.find(rn.id); it != overrides.node_ingress.end())
      n.is_ingress = it->second;
    topo.nodes.push_back(n);
  }
  for (const auto& rl : raw.links) {
    LinkSpec l;
    l.a = std::min(rl.a, rl.b);
    l.b = std::max(rl.a, rl.b);
    const std::pair<int, int> key{l.a, l.b};
    std::optional<double> bw = rl.bandwidth;
    if (auto it = overrides.link_bandwidth.find(key); it != overrides.link_bandwidth.end())
      bw = it->second;
    if (!bw) bw = overrides.default_bandwidth;
    std::optional<double> delay = rl.delay;
    if (auto it = overrides.link_delay.find(key); it != overrides.link_delay.end())
      delay = it->second;
    if (!delay) delay = overrides.default_delay;
    if (!bw)
      throw ValidationError("link (" + std::to_string(l.a) + "," + std::to_string(l.b) +
                            ") has no bandwidth in file or overrides");
    if (!delay)
      throw ValidationError("link (" + std::to_string(l.a) + "," + std::to_string(l.b) +
                            ") has no delay in file or overrides");
    l.bandwidth = *bw;
    l.delay = *delay;
    topo.links.push_back(l);
  }

  validate_topology(topo);
  return topo;
}

void validate_topology(const NetworkTopology& topo) {
  const int v = topo.num_nodes();
  if (v == 0) throw ValidationError("topology has no nodes");
  if (v > kMaxNodes)
    throw CapacityError("topology has " + std::to_string(v) + " nodes, limit is " +
                        std::to_string(kMaxNodes));

  std::vector<char> seen(v, 0);
  for (const auto& n : topo.nodes) {
    if (n.id < 0 || n.id >= v)
      throw ValidationError("node ids must be dense in [0, |V|): got " +
                            std::to_string(n.id));
    if (seen[n.id]) throw ValidationError("duplicate node id " + std::to_string(n.id));
    seen[n.id] = 1;
    if (n.capacity < 0) throw ValidationError("negative capacity at node " + std::to_string(n.id));
  }
  // nodes must appear in id order so that row i describes node i
  for (int i = 0; i < v; ++i)
    if (topo.nodes[i].id != i)
      throw ValidationError("nodes must be listed in id order");

  std::vector<std::pair<int, int>> pairs;
  for (const auto& l : topo.links) {
    if (l.a == l.b) throw ValidationError("self-link at node " + std::to_string(l.a));
    if (l.a < 0 || l.b < 0 || l.a >= v || l.b >= v)
      throw ValidationError("link endpoint out of range");
    if (l.a > l.b) throw ValidationError("link endpoints not normalized");
    if (l.bandwidth < 0) throw ValidationError("negative bandwidth");
    if (l.delay <= 0) throw ValidationError("link delay must be positive");
    pairs.emplace_back(l.a, l.b);
  }
  std::sort(pairs.begin(), pairs.end());
  if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end())
    throw ValidationError("duplicate link between a node pair");

  check_connected(topo);
}

RoutingTable shortest_paths(const NetworkTopology& topo) {
  const int v = topo.num_nodes();
  RoutingTable rt;
  rt.num_nodes = v;
  rt.next_hop.assign(static_cast<size_t>(v) * v, -1);
  rt.path_delay.assign(static_cast<size_t>(v) * v, 0.0);
  rt.path_links.assign(static_cast<size_t>(v) * v, {});

  for (int src = 0; src < v; ++src) {
    // Dijkstra ordered by (delay, node-id path); the lexicographic component
    // makes equal-delay choices deterministic.
    std::vector<double> dist(v, std::numeric_limits<double>::infinity());
    std::vector<std::vector<int>> path(v);
    std::vector<char> done(v, 0);
    dist[src] = 0.0;
    path[src] = {src};
    for (int round = 0; round < v; ++round) {
      int u = -1;
      for (int i = 0; i < v; ++i) {
        if (done[i] || std::isinf(dist[i])) continue;
        if (u == -1 || dist[i] < dist[u] ||
            (dist[i] == dist[u] && path[i] < path[u]))
          u = i;
      }
      if (u == -1) break;
      done[u] = 1;
      for (auto [w, link] : topo.neighbors(u)) {
        if (done[w]) continue;
        const double nd = dist[u] + topo.links[link].delay;
        std::vector<int> np = path[u];
        np.push_back(w);
        if (nd < dist[w] || (nd == dist[w] && np < path[w])) {
          dist[w] = nd;
          path[w] = std::move(np);
        }
      }
    }
    for (int dst = 0; dst < v; ++dst) {
      const size_t at = rt.idx(src, dst);
      rt.path_delay[at] = dist[dst];
      if (dst == src) {
        rt.next_hop[at] = src;
        continue;
      }
      rt.next_hop[at] = path[dst].size() > 1 ? path[dst][1] : -1;
      std::vector<int> links;
      for (size_t i = 0; i + 1 < path[dst].size(); ++i)
        links.push_back(topo.link_index(path[dst][i], path[dst][i + 1]));
      rt.path_links[at] = std::move(links);
    }
  }
  return rt;
}

size_t ActionMask::true_count() const {
  size_t c = 0;
  for (uint8_t b : valid) c += b != 0;
  return c;
}

ActionMask build_mask(const NetworkTopology& topo, int chain_length, int v_max) {
  const int v = topo.num_nodes();
  if (v > v_max)
    throw CapacityError("topology with " + std::to_string(v) +
                        " nodes does not fit mask v_max=" + std::to_string(v_max));
  ActionMask mask;
  mask.n = chain_length;
  mask.v_max = v_max;
  mask.num_nodes = v;
  mask.valid.assign(static_cast<size_t>(chain_length) * v_max * v_max, 0);
  for (int i = 0; i < chain_length; ++i)
    for (int j = 0; j < v; ++j)
      for (int k = 0; k < v; ++k) mask.valid[mask.idx(i, j, k)] = 1;
  return mask;
}

}  // namespace coord::topo
