#include "glot/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glot/error.hpp"

namespace glot {

void GraphConfig::validate() const {
  if (!std::isfinite(tau) || tau < -1.0 || tau > 1.0)
    throw InvalidArgument("GraphConfig: tau must lie in [-1, 1]");
}

void TokenGraph::validate() const {
  const std::size_t n = num_nodes();
  if (node_features.rows() != n) throw InvalidArgument("TokenGraph: feature rows != node count");
  std::size_t total = 0;
  for (std::size_t s : graph_sizes) total += s;
  if (total != n) throw InvalidArgument("TokenGraph: graph sizes do not sum to node count");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.src >= n || e.dst >= n) throw InvalidArgument("TokenGraph: edge endpoint out of range");
    if (batch_index[e.src] != batch_index[e.dst])
      throw InvalidArgument("TokenGraph: edge crosses graph boundary");
    if (i > 0 && !(edges[i - 1] < e)) throw InvalidArgument("TokenGraph: edges not sorted by (dst, src)");
  }
}

Matrix valid_rows(const Matrix& states, std::span<const std::uint8_t> mask) {
  if (mask.empty()) return states;
  if (mask.size() != states.rows()) throw InvalidArgument("valid_rows: mask length != rows");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) keep.push_back(i);
  return states.gather_rows(keep);
}

TokenGraph build_token_graph(const Matrix& valid_states, const GraphConfig& cfg) {
  cfg.validate();
  const std::size_t n = valid_states.rows();
  if (n == 0) throw InvalidArgument("build_token_graph: empty sentence (no valid tokens)");
  const Matrix s = cosine_similarity_matrix(valid_states);

  TokenGraph g;
  g.node_features = valid_states;
  g.batch_index.assign(n, 0);
  g.graph_sizes = {n};
  // dst-major, src-minor: the result is already in canonical order.
  for (std::size_t dst = 0; dst < n; ++dst) {
    for (std::size_t src = 0; src < n; ++src) {
      if (src == dst) {
        if (cfg.add_self_loops) g.edges.push_back({src, dst});
        continue;
      }
      if (!cfg.symmetric && src > dst) continue;
      if (s(src, dst) > cfg.tau) g.edges.push_back({src, dst});
    }
  }
  return g;
}

TokenGraph build_token_graph(const Matrix& states, std::span<const std::uint8_t> mask,
                             const GraphConfig& cfg) {
  return build_token_graph(valid_rows(states, mask), cfg);
}

TokenGraph batch_graphs(std::span<const TokenGraph* const> graphs) {
  if (graphs.empty()) throw InvalidArgument("batch_graphs: empty graph list");
  const std::size_t dim = graphs.front()->feature_dim();
  std::size_t nodes = 0, edges = 0;
  for (const TokenGraph* g : graphs) {
    if (g->feature_dim() != dim) throw InvalidArgument("batch_graphs: feature dims differ");
    nodes += g->num_nodes();
    edges += g->edges.size();
  }

  TokenGraph out;
  out.node_features = Matrix(nodes, dim);
  out.edges.reserve(edges);
  out.batch_index.reserve(nodes);
  std::size_t node_offset = 0, graph_offset = 0;
  auto dst_data = out.node_features.data();
  for (const TokenGraph* g : graphs) {
    const auto src = g->node_features.data();
    std::copy(src.begin(), src.end(), dst_data.begin() + static_cast<std::ptrdiff_t>(node_offset * dim));
    for (const Edge& e : g->edges) out.edges.push_back({e.src + node_offset, e.dst + node_offset});
    for (std::size_t b : g->batch_index) out.batch_index.push_back(b + graph_offset);
    out.graph_sizes.insert(out.graph_sizes.end(), g->graph_sizes.begin(), g->graph_sizes.end());
    node_offset += g->num_nodes();
    graph_offset += g->num_graphs();
  }
  return out;
}

TokenGraph batch_graphs(std::span<const TokenGraph> graphs) {
  std::vector<const TokenGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return batch_graphs(std::span<const TokenGraph* const>(ptrs));
}

std::vector<double> edge_density(const TokenGraph& g) {
  std::vector<double> non_loop(g.num_graphs(), 0.0);
  for (const Edge& e : g.edges)
    if (e.src != e.dst) non_loop[g.batch_index[e.dst]] += 1.0;
  std::vector<double> density(g.num_graphs(), 0.0);
  for (std::size_t k = 0; k < g.num_graphs(); ++k) {
    const double l = static_cast<double>(g.graph_sizes[k]);
    if (g.graph_sizes[k] > 1) density[k] = non_loop[k] / (l * (l - 1.0));
  }
  return density;
}

}  // namespace glot
