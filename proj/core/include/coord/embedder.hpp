#pragma once

// Graph embedder: GATv2 message passing in an encode-process-decode stack.
// One GATv2 layer lifts raw features to the hidden width, a second GATv2
// layer runs for a fixed number of iterations with shared weights, a dense
// decode layer produces node embeddings, and mean pooling yields one
// fixed-size vector per graph.

#include <string>
#include <vector>

#include "coord/diffcore.hpp"
#include "coord/environment.hpp"

namespace coord::gnn {

struct EmbedderConfig {
  int node_features = env::Observation::kNodeFeatures;
  int edge_features = env::Observation::kEdgeFeatures;
  int hidden_dim = 64;
  int processor_iterations = 4;
};

// One or more graphs stacked with node-index offsets; adjacency includes a
// self-loop per node (zero edge features) as message passing requires.
struct BatchedGraph {
  diff::Tensor node_features;  // N x node_features
  diff::Tensor edge_features;  // E x edge_features
  std::vector<int> edge_src, edge_dst;
  std::vector<int> node_sample;  // graph membership per node
  int num_samples = 1;

  int num_nodes() const { return node_features.dim(0); }
  int num_edges() const { return static_cast<int>(edge_src.size()); }

  static BatchedGraph from_observation(const env::Observation& obs);
  static BatchedGraph from_observations(const std::vector<const env::Observation*>& list);
};

struct GatLayerParams {
  diff::Tensor w_dst, w_src, w_edge;  // blocks of Eq. 6's W over [h_v || h_w || e]
  diff::Tensor attn;                  // attention vector a
  diff::Tensor w_out;                 // value transform of neighbor states
};

// Parameter names created under `prefix`: enc.{w_dst,w_src,w_edge,attn,w_out},
// proc.{...}, dec.{w,b}.
void init_embedder_params(diff::ParameterSet& ps, const std::string& prefix,
                          const EmbedderConfig& cfg, Rng& rng);
GatLayerParams layer_params(const diff::ParameterSet& ps, const std::string& prefix);

// Attention scores per edge (LeakyReLU slope 0.2), softmax over each
// destination's incoming edges (self-loop included), attention-weighted sum
// of transformed source states. Throws if any node lacks a self-loop.
// `alpha_out`, when given, receives the per-edge attention weights.
diff::Tensor gatv2_layer(const diff::Tensor& h, const diff::Tensor& edge_feat,
                         const std::vector<int>& edge_src,
                         const std::vector<int>& edge_dst,
                         const GatLayerParams& params,
                         diff::Tensor* alpha_out = nullptr);

struct EmbedResult {
  diff::Tensor node_embeddings;  // N x hidden
  diff::Tensor graph_embedding;  // num_samples x hidden (per-sample mean)
};

EmbedResult embed(const BatchedGraph& graph, const diff::ParameterSet& ps,
                  const std::string& prefix, const EmbedderConfig& cfg);

inline constexpr double kAttentionLeakySlope = 0.2;

}  // namespace coord::gnn
