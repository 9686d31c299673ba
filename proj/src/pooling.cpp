#include "glot/pooling.hpp"

#include <ostream>
#include <string>

#include "glot/error.hpp"
#include "glot/init.hpp"

namespace glot {

std::vector<Parameter*> GlotParams::all() {
  auto out = gnn.all();
  for (Parameter* p : readout.all()) out.push_back(p);
  return out;
}

ReadoutParams init_readout_params(std::size_t fused_dim, std::size_t hidden, std::uint64_t seed) {
  if (hidden == 0) throw InvalidArgument("readout hidden width must be >= 1");
  return {glorot_parameter("readout.w_m", fused_dim, hidden, seed),
          zero_parameter("readout.b_m", 1, hidden),
          glorot_parameter("readout.v", hidden, 1, seed)};
}

AdaPoolParams init_adapool_params(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  if (hidden == 0) throw InvalidArgument("adapool hidden width must be >= 1");
  return {glorot_parameter("adapool.w1", input_dim, hidden, seed),
          zero_parameter("adapool.b1", 1, hidden),
          glorot_parameter("adapool.w2", hidden, 1, seed),
          zero_parameter("adapool.b2", 1, 1)};
}

GlotParams init_glot_params(const GnnConfig& cfg, std::size_t readout_hidden, std::uint64_t seed) {
  return {init_gnn_params(cfg, seed), init_readout_params(cfg.fused_dim(), readout_hidden, seed)};
}

StackedTokens stack_sentences(std::span<const Matrix* const> sentences) {
  if (sentences.empty()) throw InvalidArgument("stack_sentences: no sentences");
  StackedTokens out;
  std::vector<Matrix> parts;
  parts.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const Matrix& m = *sentences[s];
    if (m.rows() == 0) throw InvalidArgument("stack_sentences: sentence has no valid tokens");
    out.sizes.push_back(m.rows());
    out.segment.insert(out.segment.end(), m.rows(), s);
    parts.push_back(m);
  }
  out.rows = vconcat(parts);
  return out;
}

namespace {

std::vector<std::size_t> to_vec(std::span<const std::size_t> s) { return {s.begin(), s.end()}; }

/// z_s = sum of weights_i · rows_i over the rows of segment s.
Var weighted_segment_sum(Var rows, Var weights, std::span<const std::size_t> segment,
                         std::size_t segments) {
  return ad::scatter_add_rows(ad::scale_rows(rows, weights), to_vec(segment), segments);
}

}  // namespace

Var attention_readout(Var fused, std::span<const std::size_t> batch_index, std::size_t num_graphs,
                      Var w_m, Var b_m, Var v, Var* weights_out) {
  if (batch_index.size() != fused.rows())
    throw InvalidArgument("attention_readout: batch_index length != rows");
  Var scores = ad::matmul(ad::tanh(ad::add_row(ad::matmul(fused, w_m), b_m)), v);
  Var pi = ad::segment_softmax(scores, to_vec(batch_index), num_graphs);
  if (weights_out) *weights_out = pi;
  return weighted_segment_sum(fused, pi, batch_index, num_graphs);
}

Var mean_pool(Var rows, std::span<const std::size_t> segment, std::size_t segments) {
  return ad::segment_mean_rows(rows, to_vec(segment), segments);
}

Var max_pool(Var rows, std::span<const std::size_t> segment, std::size_t segments) {
  return ad::segment_max_rows(rows, to_vec(segment), segments);
}

Var boundary_token_pool(Var rows, std::span<const std::size_t> sizes, Boundary which) {
  std::vector<std::size_t> pick;
  std::size_t offset = 0;
  for (std::size_t n : sizes) {
    if (n == 0) throw InvalidArgument("boundary_token_pool: sentence has no valid tokens");
    pick.push_back(which == Boundary::first ? offset : offset + n - 1);
    offset += n;
  }
  return ad::gather_rows(rows, std::move(pick));
}

Var adapool(Var rows, std::span<const std::size_t> segment, std::size_t segments, Var w1, Var b1,
            Var w2, Var b2, Var* weights_out) {
  Var hidden = ad::tanh(ad::add_row(ad::matmul(rows, w1), b1));
  Var scores = ad::add_row(ad::matmul(hidden, w2), b2);
  Var weights = ad::segment_softmax(scores, to_vec(segment), segments);
  if (weights_out) *weights_out = weights;
  return weighted_segment_sum(rows, weights, segment, segments);
}

Var glot_pool(Tape& tape, const TokenGraph& batched, Var w_in, const GnnConfig& cfg,
              GlotParams& params, Var* weights_out) {
  Var x = tape.constant(batched.node_features);
  Var fused = token_gnn_forward(tape, x, w_in, batched, cfg, params.gnn);
  return attention_readout(fused, batched.batch_index, batched.num_graphs(),
                           tape.param(params.readout.w_m), tape.param(params.readout.b_m),
                           tape.param(params.readout.v), weights_out);
}

Var glot_pool(Tape& tape, const TokenGraph& batched, const GnnConfig& cfg, GlotParams& params,
              Var* weights_out) {
  return glot_pool(tape, batched, tape.param(params.gnn.w_in), cfg, params, weights_out);
}

namespace {

Matrix require_valid(const Matrix& states, std::span<const std::uint8_t> mask, const char* op) {
  Matrix valid = valid_rows(states, mask);
  if (valid.rows() == 0) throw InvalidArgument(std::string(op) + ": all tokens are masked");
  return valid;
}

}  // namespace

Matrix mean_pool(const Matrix& states, std::span<const std::uint8_t> mask) {
  const Matrix valid = require_valid(states, mask, "mean_pool");
  Tape t;
  const std::vector<std::size_t> seg(valid.rows(), 0);
  return mean_pool(t.constant(valid), seg, 1).value();
}

Matrix max_pool(const Matrix& states, std::span<const std::uint8_t> mask) {
  const Matrix valid = require_valid(states, mask, "max_pool");
  Tape t;
  const std::vector<std::size_t> seg(valid.rows(), 0);
  return max_pool(t.constant(valid), seg, 1).value();
}

Matrix boundary_token_pool(const Matrix& states, std::span<const std::uint8_t> mask,
                           Boundary which) {
  const Matrix valid = require_valid(states, mask, "boundary_token_pool");
  Tape t;
  const std::size_t sizes[] = {valid.rows()};
  return boundary_token_pool(t.constant(valid), sizes, which).value();
}

Matrix adapool(const Matrix& states, std::span<const std::uint8_t> mask, AdaPoolParams& params) {
  const Matrix valid = require_valid(states, mask, "adapool");
  Tape t;
  const std::vector<std::size_t> seg(valid.rows(), 0);
  return adapool(t.constant(valid), seg, 1, t.param(params.w1), t.param(params.b1),
                 t.param(params.w2), t.param(params.b2))
      .value();
}

GlotOutput glot_pool(std::span<const Matrix> states, std::span<const std::vector<std::uint8_t>> masks,
                     const GraphConfig& graph_cfg, const GnnConfig& gnn_cfg, GlotParams& params) {
  if (states.empty()) throw InvalidArgument("glot_pool: empty batch");
  if (!masks.empty() && masks.size() != states.size())
    throw InvalidArgument("glot_pool: one mask per sentence required");
  std::vector<TokenGraph> graphs;
  graphs.reserve(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    const std::span<const std::uint8_t> mask =
        masks.empty() ? std::span<const std::uint8_t>() : std::span<const std::uint8_t>(masks[s]);
    graphs.push_back(build_token_graph(states[s], mask, graph_cfg));
  }
  const TokenGraph batched = batch_graphs(graphs);
  Tape tape;
  Var weights;
  Var z = glot_pool(tape, batched, gnn_cfg, params, &weights);

  GlotOutput out;
  out.embeddings = z.value();
  std::size_t node = 0;
  for (std::size_t s = 0; s < states.size(); ++s) {
    std::vector<double> w(states[s].rows(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!masks.empty() && !masks[s].empty() && !masks[s][i]) continue;
      w[i] = weights.value()(node++, 0);
    }
    out.token_weights.push_back(std::move(w));
  }
  return out;
}

void write_token_weights_csv(const GlotOutput& out, std::ostream& os) {
  os << "sentence,token_index,weight\n";
  os.precision(17);
  for (std::size_t s = 0; s < out.token_weights.size(); ++s)
    for (std::size_t i = 0; i < out.token_weights[s].size(); ++i)
      os << s << ',' << i << ',' << out.token_weights[s][i] << '\n';
}

}  // namespace glot
