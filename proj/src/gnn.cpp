#include "glot/gnn.hpp"

#include <cmath>

#include "glot/error.hpp"
#include "glot/init.hpp"

namespace glot {

std::string_view to_string(GnnVariant v) {
  switch (v) {
    case GnnVariant::sage_concat: return "sage";
    case GnnVariant::gat: return "gat";
    case GnnVariant::gcn: return "gcn";
    case GnnVariant::gin: return "gin";
  }
  return "?";
}

std::string_view to_string(JkMode m) {
  switch (m) {
    case JkMode::cat: return "cat";
    case JkMode::max: return "max";
    case JkMode::mean: return "mean";
    case JkMode::none: return "none";
  }
  return "?";
}

std::string_view to_string(Aggregate a) { return a == Aggregate::mean ? "mean" : "sum"; }

GnnVariant parse_gnn_variant(std::string_view s) {
  if (s == "sage" || s == "sage_concat") return GnnVariant::sage_concat;
  if (s == "gat") return GnnVariant::gat;
  if (s == "gcn") return GnnVariant::gcn;
  if (s == "gin") return GnnVariant::gin;
  throw InvalidArgument("unknown GNN variant '" + std::string(s) + "'");
}

JkMode parse_jk_mode(std::string_view s) {
  if (s == "cat") return JkMode::cat;
  if (s == "max") return JkMode::max;
  if (s == "mean") return JkMode::mean;
  if (s == "none") return JkMode::none;
  throw InvalidArgument("unknown jumping-knowledge mode '" + std::string(s) + "'");
}

Aggregate parse_aggregate(std::string_view s) {
  if (s == "mean") return Aggregate::mean;
  if (s == "sum") return Aggregate::sum;
  throw InvalidArgument("unknown aggregate '" + std::string(s) + "'");
}

void GnnConfig::validate() const {
  if (hidden_dim == 0) throw InvalidArgument("GnnConfig: hidden_dim must be >= 1");
  if (input_dim == 0) throw InvalidArgument("GnnConfig: input_dim must be >= 1");
}

std::vector<Parameter*> GnnParams::all() {
  std::vector<Parameter*> out{&w_in};
  for (auto& l : layers) {
    for (Parameter* p : {&l.weight, &l.attention, &l.bias, &l.weight2, &l.bias2, &l.epsilon})
      if (!p->value.empty()) out.push_back(p);
  }
  return out;
}

GnnParams init_gnn_params(const GnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t p = cfg.hidden_dim;
  GnnParams params;
  params.w_in = glorot_parameter("gnn.w_in", cfg.input_dim, p, seed);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string prefix = "gnn.layer" + std::to_string(l) + ".";
    GnnLayerParams layer;
    switch (cfg.variant) {
      case GnnVariant::sage_concat:
        layer.weight = glorot_parameter(prefix + "weight", 2 * p, p, seed);
        break;
      case GnnVariant::gcn:
        layer.weight = glorot_parameter(prefix + "weight", p, p, seed);
        break;
      case GnnVariant::gat:
        layer.weight = glorot_parameter(prefix + "weight", p, p, seed);
        layer.attention = glorot_parameter(prefix + "attention", 2 * p, 1, seed);
        break;
      case GnnVariant::gin:
        layer.weight = glorot_parameter(prefix + "weight", p, p, seed);
        layer.bias = zero_parameter(prefix + "bias", 1, p);
        layer.weight2 = glorot_parameter(prefix + "weight2", p, p, seed);
        layer.bias2 = zero_parameter(prefix + "bias2", 1, p);
        layer.epsilon = zero_parameter(prefix + "epsilon", 1, 1);
        break;
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

EdgeIndex::EdgeIndex(const TokenGraph& g) : num_nodes(g.num_nodes()) {
  src.reserve(g.edges.size());
  dst.reserve(g.edges.size());
  in_degree.assign(num_nodes, 0.0);
  for (const Edge& e : g.edges) {
    src.push_back(e.src);
    dst.push_back(e.dst);
    in_degree[e.dst] += 1.0;
  }
}

namespace {

Var constant_column(Tape& t, std::vector<double> values) {
  const std::size_t n = values.size();
  return t.constant(Matrix(n, 1, std::move(values)));
}

/// sum over in-edges of h[src], optionally divided by in-degree.
Var aggregate_neighbors(Var h, const EdgeIndex& edges, Aggregate aggregate) {
  Var summed = ad::scatter_add_rows(ad::gather_rows(h, edges.src), edges.dst, edges.num_nodes);
  if (aggregate == Aggregate::sum) return summed;
  std::vector<double> inv(edges.num_nodes, 0.0);
  for (std::size_t i = 0; i < inv.size(); ++i)
    if (edges.in_degree[i] > 0.0) inv[i] = 1.0 / edges.in_degree[i];
  return ad::scale_rows(summed, constant_column(*h.tape(), std::move(inv)));
}

}  // namespace

Var input_projection(Var x_nodes, Var w_in) {
  if (x_nodes.cols() != w_in.rows())
    throw InvalidArgument("input_projection: node features have " + std::to_string(x_nodes.cols()) +
                          " columns, W_in expects " + std::to_string(w_in.rows()));
  return ad::matmul(x_nodes, w_in);
}

Var sage_concat_layer(Var h, const EdgeIndex& edges, Var weight, Aggregate aggregate) {
  Var agg = aggregate_neighbors(h, edges, aggregate);
  const Var parts[] = {h, agg};
  return ad::relu(ad::matmul(ad::concat_cols(parts), weight));
}

Var gcn_layer(Var h, const EdgeIndex& edges, Var weight) {
  Var hw = ad::matmul(h, weight);
  std::vector<double> norm(edges.src.size());
  for (std::size_t e = 0; e < norm.size(); ++e)
    norm[e] = 1.0 / std::sqrt(edges.in_degree[edges.dst[e]] * edges.in_degree[edges.src[e]]);
  Var msg = ad::scale_rows(ad::gather_rows(hw, edges.src), constant_column(*h.tape(), std::move(norm)));
  return ad::relu(ad::scatter_add_rows(msg, edges.dst, edges.num_nodes));
}

Var gat_layer(Var h, const EdgeIndex& edges, Var weight, Var attention) {
  const std::size_t p = weight.cols();
  if (attention.rows() != 2 * p || attention.cols() != 1)
    throw InvalidArgument("gat_layer: attention vector must be 2p×1");
  Var wh = ad::matmul(h, weight);
  // a · [W h_i ; W h_j] splits into a target score and a source score.
  Var score_dst = ad::matmul(wh, ad::slice_rows(attention, 0, p));
  Var score_src = ad::matmul(wh, ad::slice_rows(attention, p, p));
  Var logits = ad::leaky_relu(
      ad::add(ad::gather_rows(score_dst, edges.dst), ad::gather_rows(score_src, edges.src)), 0.2);
  Var alpha = ad::segment_softmax(logits, edges.dst, edges.num_nodes);
  Var msg = ad::scale_rows(ad::gather_rows(wh, edges.src), alpha);
  return ad::relu(ad::scatter_add_rows(msg, edges.dst, edges.num_nodes));
}

Var gin_layer(Var h, const EdgeIndex& edges, const GinVars& mlp) {
  std::vector<std::size_t> src, dst;
  for (std::size_t e = 0; e < edges.src.size(); ++e) {
    if (edges.src[e] == edges.dst[e]) continue;
    src.push_back(edges.src[e]);
    dst.push_back(edges.dst[e]);
  }
  Var combined = ad::add(h, ad::scale_by(h, mlp.epsilon));
  if (!src.empty()) {
    combined = ad::add(combined,
                       ad::scatter_add_rows(ad::gather_rows(h, std::move(src)), std::move(dst),
                                            edges.num_nodes));
  }
  Var hidden = ad::relu(ad::add_row(ad::matmul(combined, mlp.weight), mlp.bias));
  return ad::relu(ad::add_row(ad::matmul(hidden, mlp.weight2), mlp.bias2));
}

Var jumping_knowledge(std::span<const Var> layers, JkMode mode) {
  if (layers.empty()) throw InvalidArgument("jumping_knowledge: empty layer list");
  for (const Var& v : layers)
    if (v.rows() != layers.front().rows())
      throw InvalidArgument("jumping_knowledge: layers differ in row count");
  switch (mode) {
    case JkMode::none: return layers.back();
    case JkMode::cat: return layers.size() == 1 ? layers.front() : ad::concat_cols(layers);
    case JkMode::max: return layers.size() == 1 ? layers.front() : ad::max_elementwise(layers);
    case JkMode::mean: {
      Var acc = layers.front();
      for (std::size_t k = 1; k < layers.size(); ++k) acc = ad::add(acc, layers[k]);
      return layers.size() == 1 ? acc : ad::scale(acc, 1.0 / static_cast<double>(layers.size()));
    }
  }
  throw InvalidArgument("jumping_knowledge: bad mode");
}

Var token_gnn_forward(Tape& tape, Var x_nodes, Var w_in, const TokenGraph& g,
                      const GnnConfig& cfg, GnnParams& params, std::vector<Var>* layers_out) {
  if (params.layers.size() != cfg.num_layers)
    throw InvalidArgument("token_gnn_forward: parameter layers != num_layers");
  if (x_nodes.rows() != g.num_nodes())
    throw InvalidArgument("token_gnn_forward: node feature rows != graph nodes");
  const EdgeIndex edges(g);
  std::vector<Var> layers{input_projection(x_nodes, w_in)};
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    GnnLayerParams& lp = params.layers[l];
    const Var h = layers.back();
    Var next;
    switch (cfg.variant) {
      case GnnVariant::sage_concat:
        next = sage_concat_layer(h, edges, tape.param(lp.weight), cfg.aggregate);
        break;
      case GnnVariant::gcn:
        next = gcn_layer(h, edges, tape.param(lp.weight));
        break;
      case GnnVariant::gat:
        next = gat_layer(h, edges, tape.param(lp.weight), tape.param(lp.attention));
        break;
      case GnnVariant::gin:
        next = gin_layer(h, edges,
                         GinVars{tape.param(lp.weight), tape.param(lp.bias), tape.param(lp.weight2),
                                 tape.param(lp.bias2), tape.param(lp.epsilon)});
        break;
    }
    layers.push_back(next);
  }
  if (layers_out) *layers_out = layers;
  return jumping_knowledge(layers, cfg.jk);
}

Var token_gnn_forward(Tape& tape, Var x_nodes, const TokenGraph& g, const GnnConfig& cfg,
                      GnnParams& params, std::vector<Var>* layers_out) {
  return token_gnn_forward(tape, x_nodes, tape.param(params.w_in), g, cfg, params, layers_out);
}

}  // namespace glot
