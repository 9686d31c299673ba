#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "glot/matrix.hpp"

namespace glot {

struct GraphConfig {
  /// Edge (i, j), i != j, exists iff cosine(x_i, x_j) > tau.
  double tau = 0.6;
  bool add_self_loops = true;
  /// When false only forward edges (src < dst) are kept.
  bool symmetric = true;

  void validate() const;
};

/// Directed edge src -> dst. Ordered by (dst, src), the traversal order of
/// every aggregation kernel.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge& a, const Edge& b) {
    if (auto c = a.dst <=> b.dst; c != 0) return c;
    return a.src <=> b.src;
  }
};

/// One or more token graphs stored block-diagonally.
struct TokenGraph {
  Matrix node_features;
  std::vector<Edge> edges;
  std::vector<std::size_t> batch_index;
  std::vector<std::size_t> graph_sizes;

  std::size_t num_nodes() const noexcept { return batch_index.size(); }
  std::size_t num_graphs() const noexcept { return graph_sizes.size(); }
  std::size_t feature_dim() const noexcept { return node_features.cols(); }

  /// Throws InvalidArgument if an edge is out of range, crosses graphs,
  /// or the edge list is not sorted by (dst, src).
  void validate() const;
};

/// Builds the threshold graph over already-unmasked token states.
TokenGraph build_token_graph(const Matrix& valid_states, const GraphConfig& cfg);
/// Drops rows whose mask entry is 0 and builds the graph over the rest.
TokenGraph build_token_graph(const Matrix& states, std::span<const std::uint8_t> mask,
                             const GraphConfig& cfg);

/// Stacks graphs into one block-diagonal batch.
TokenGraph batch_graphs(std::span<const TokenGraph> graphs);
TokenGraph batch_graphs(std::span<const TokenGraph* const> graphs);

/// Non-loop edge count over L·(L−1), per graph; 0 for single-node graphs.
std::vector<double> edge_density(const TokenGraph& g);

/// Rows of `states` whose mask entry is nonzero. An empty mask keeps all rows.
Matrix valid_rows(const Matrix& states, std::span<const std::uint8_t> mask);

}  // namespace glot
