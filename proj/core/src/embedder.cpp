#include "coord/embedder.hpp"

#include "coord/errors.hpp"

namespace coord::gnn {

BatchedGraph BatchedGraph::from_observation(const env::Observation& obs) {
  return from_observations({&obs});
}

BatchedGraph BatchedGraph::from_observations(
    const std::vector<const env::Observation*>& list) {
  if (list.empty()) throw ContractViolation("cannot batch zero observations");
  BatchedGraph g;
  g.num_samples = static_cast<int>(list.size());

  int total_nodes = 0, total_dir_edges = 0;
  for (const auto* obs : list) {
    total_nodes += obs->num_nodes;
    total_dir_edges += obs->num_dir_edges;
  }
  const int nf = env::Observation::kNodeFeatures;
  const int ef = env::Observation::kEdgeFeatures;
  const int total_edges = total_dir_edges + total_nodes;  // plus self-loops

  std::vector<double> nodes(static_cast<size_t>(total_nodes) * nf);
  std::vector<double> edges(static_cast<size_t>(total_edges) * ef, 0.0);
  g.edge_src.reserve(static_cast<size_t>(total_edges));
  g.edge_dst.reserve(static_cast<size_t>(total_edges));
  g.node_sample.reserve(static_cast<size_t>(total_nodes));

  int node_off = 0, edge_off = 0;
  for (int s = 0; s < g.num_samples; ++s) {
    const env::Observation& obs = *list[static_cast<size_t>(s)];
    std::copy(obs.node_features.begin(), obs.node_features.end(),
              nodes.begin() + static_cast<size_t>(node_off) * nf);
    std::copy(obs.edge_features.begin(), obs.edge_features.end(),
              edges.begin() + static_cast<size_t>(edge_off) * ef);
    for (int e = 0; e < obs.num_dir_edges; ++e) {
      g.edge_src.push_back(obs.adj_src[static_cast<size_t>(e)] + node_off);
      g.edge_dst.push_back(obs.adj_dst[static_cast<size_t>(e)] + node_off);
    }
    for (int v = 0; v < obs.num_nodes; ++v) g.node_sample.push_back(s);
    node_off += obs.num_nodes;
    edge_off += obs.num_dir_edges;
  }
  // self-loops last, zero edge features
  for (int v = 0; v < total_nodes; ++v) {
    g.edge_src.push_back(v);
    g.edge_dst.push_back(v);
  }

  g.node_features = diff::Tensor::from_values({total_nodes, nf}, std::move(nodes));
  g.edge_features = diff::Tensor::from_values({total_edges, ef}, std::move(edges));
  return g;
}

void init_embedder_params(diff::ParameterSet& ps, const std::string& prefix,
                          const EmbedderConfig& cfg, Rng& rng) {
  const int h = cfg.hidden_dim;
  auto gat = [&](const std::string& name, int in_dim) {
    const int fan = 2 * in_dim + cfg.edge_features;
    ps.create(prefix + name + ".w_dst", {in_dim, h}, fan, rng);
    ps.create(prefix + name + ".w_src", {in_dim, h}, fan, rng);
    ps.create(prefix + name + ".w_edge", {cfg.edge_features, h}, fan, rng);
    ps.create(prefix + name + ".attn", {h, 1}, h, rng);
    ps.create(prefix + name + ".w_out", {in_dim, h}, in_dim, rng);
  };
  gat("enc", cfg.node_features);
  gat("proc", h);
  ps.create(prefix + "dec.w", {h, h}, h, rng);
  ps.create_zeros(prefix + "dec.b", {h});
}

GatLayerParams layer_params(const diff::ParameterSet& ps, const std::string& prefix) {
  return GatLayerParams{ps.get(prefix + ".w_dst"), ps.get(prefix + ".w_src"),
                        ps.get(prefix + ".w_edge"), ps.get(prefix + ".attn"),
                        ps.get(prefix + ".w_out")};
}

diff::Tensor gatv2_layer(const diff::Tensor& h, const diff::Tensor& edge_feat,
                         const std::vector<int>& edge_src,
                         const std::vector<int>& edge_dst,
                         const GatLayerParams& params, diff::Tensor* alpha_out) {
  const int n = h.dim(0);
  if (edge_src.size() != edge_dst.size())
    throw ContractViolation("edge endpoint lists differ in length");
  if (static_cast<int>(edge_src.size()) != edge_feat.dim(0))
    throw ContractViolation("one feature row per edge required");

  std::vector<char> has_self(static_cast<size_t>(n), 0);
  for (size_t e = 0; e < edge_src.size(); ++e)
    if (edge_src[e] == edge_dst[e]) has_self[static_cast<size_t>(edge_src[e])] = 1;
  for (int v = 0; v < n; ++v)
    if (!has_self[static_cast<size_t>(v)])
      throw ContractViolation("adjacency must include a self-loop per node");

  // Block form of the score input W . [h_v || h_w || e_vw]
  diff::Tensor dst_part = matmul(h, params.w_dst);
  diff::Tensor src_part = matmul(h, params.w_src);
  diff::Tensor edge_part = matmul(edge_feat, params.w_edge);
  diff::Tensor pre = add(add(gather_rows(dst_part, edge_dst), gather_rows(src_part, edge_src)),
                         edge_part);
  diff::Tensor scores = matmul(leaky_relu(pre, kAttentionLeakySlope), params.attn);
  diff::Tensor alpha = softmax_segments(scores, edge_dst, n);
  if (alpha_out) *alpha_out = alpha;

  diff::Tensor transformed = matmul(h, params.w_out);
  diff::Tensor weighted = scale_rows(gather_rows(transformed, edge_src), alpha);
  return segment_aggregate(weighted, edge_dst, n, diff::Reduce::kSum);
}

EmbedResult embed(const BatchedGraph& graph, const diff::ParameterSet& ps,
                  const std::string& prefix, const EmbedderConfig& cfg) {
  diff::Tensor h = gatv2_layer(graph.node_features, graph.edge_features, graph.edge_src,
                               graph.edge_dst, layer_params(ps, prefix + "enc"));
  const GatLayerParams proc = layer_params(ps, prefix + "proc");
  for (int i = 0; i < cfg.processor_iterations; ++i)
    h = gatv2_layer(h, graph.edge_features, graph.edge_src, graph.edge_dst, proc);

  EmbedResult out;
  out.node_embeddings =
      relu(dense(h, ps.get(prefix + "dec.w"), ps.get(prefix + "dec.b")));
  out.graph_embedding = segment_aggregate(out.node_embeddings, graph.node_sample,
                                          graph.num_samples, diff::Reduce::kMean);
  return out;
}

}  // namespace coord::gnn
