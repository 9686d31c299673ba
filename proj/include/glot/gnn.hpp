#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glot/autograd.hpp"
#include "glot/graph.hpp"

namespace glot {

enum class GnnVariant { sage_concat, gat, gcn, gin };
enum class JkMode { cat, max, mean, none };
enum class Aggregate { mean, sum };

std::string_view to_string(GnnVariant v);
std::string_view to_string(JkMode m);
std::string_view to_string(Aggregate a);
GnnVariant parse_gnn_variant(std::string_view s);
JkMode parse_jk_mode(std::string_view s);
Aggregate parse_aggregate(std::string_view s);

struct GnnConfig {
  GnnVariant variant = GnnVariant::gat;
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 128;
  std::size_t input_dim = 0;
  JkMode jk = JkMode::cat;
  /// Used by sage_concat. GAT normalizes by attention, GCN by degree, GIN sums.
  Aggregate aggregate = Aggregate::mean;

  std::size_t fused_dim() const noexcept {
    return jk == JkMode::cat ? (num_layers + 1) * hidden_dim : hidden_dim;
  }
  void validate() const;
};

/// Per-layer weights. Only the members a variant uses are non-empty:
///   sage_concat  weight 2p×p
///   gcn          weight p×p
///   gat          weight p×p, attention 2p×1 (first half scores the target)
///   gin          weight p×p, bias 1×p, weight2 p×p, bias2 1×p, epsilon 1×1
struct GnnLayerParams {
  Parameter weight;
  Parameter attention;
  Parameter bias;
  Parameter weight2;
  Parameter bias2;
  Parameter epsilon;
};

struct GnnParams {
  Parameter w_in;
  std::vector<GnnLayerParams> layers;

  /// Non-empty parameters in a fixed order.
  std::vector<Parameter*> all();
};

GnnParams init_gnn_params(const GnnConfig& cfg, std::uint64_t seed);

/// Edge arrays derived from a TokenGraph, in (dst, src) order.
struct EdgeIndex {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<double> in_degree;
  std::size_t num_nodes = 0;

  explicit EdgeIndex(const TokenGraph& g);
};

Var input_projection(Var x_nodes, Var w_in);

/// h'_i = relu(concat(h_i, a_i) · W), a_i = AGGREGATE over in-neighbors.
Var sage_concat_layer(Var h, const EdgeIndex& edges, Var weight, Aggregate aggregate);
/// h'_i = relu(sum_j (h_j W) / sqrt(deg_i deg_j)).
Var gcn_layer(Var h, const EdgeIndex& edges, Var weight);
/// Single-head attention, LeakyReLU(0.2) logits, softmax over in-neighbors.
Var gat_layer(Var h, const EdgeIndex& edges, Var weight, Var attention);

struct GinVars {
  Var weight;
  Var bias;
  Var weight2;
  Var bias2;
  Var epsilon;
};
/// h'_i = MLP((1 + eps) h_i + sum over non-loop in-neighbors h_j), with
/// MLP(x) = relu(relu(x W1 + b1) W2 + b2).
Var gin_layer(Var h, const EdgeIndex& edges, const GinVars& mlp);

/// Fuses [H0 .. HK]; cat concatenates columns in layer order.
Var jumping_knowledge(std::span<const Var> layers, JkMode mode);

/// Projection, K layers of the configured variant, then fusion. When
/// `layers_out` is non-null it receives H0..HK.
Var token_gnn_forward(Tape& tape, Var x_nodes, const TokenGraph& g, const GnnConfig& cfg,
                      GnnParams& params, std::vector<Var>* layers_out = nullptr);

/// Same, binding the parameters to tape leaves that are not trained;
/// `w_in` may be a constant (e.g. a frozen identity).
Var token_gnn_forward(Tape& tape, Var x_nodes, Var w_in, const TokenGraph& g,
                      const GnnConfig& cfg, GnnParams& params,
                      std::vector<Var>* layers_out = nullptr);

}  // namespace glot
