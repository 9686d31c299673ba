#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "glot/autograd.hpp"
#include "glot/gnn.hpp"
#include "glot/graph.hpp"

namespace glot {

/// m_i = v · tanh(W_m u_i + b_m).
struct ReadoutParams {
  Parameter w_m;  // fused_dim × r
  Parameter b_m;  // 1 × r
  Parameter v;    // r × 1

  std::vector<Parameter*> all() { return {&w_m, &b_m, &v}; }
};

/// s_i = tanh(h_i W1 + b1) W2 + b2.
struct AdaPoolParams {
  Parameter w1;  // d × r
  Parameter b1;  // 1 × r
  Parameter w2;  // r × 1
  Parameter b2;  // 1 × 1

  std::vector<Parameter*> all() { return {&w1, &b1, &w2, &b2}; }
};

struct GlotParams {
  GnnParams gnn;
  ReadoutParams readout;

  std::vector<Parameter*> all();
};

ReadoutParams init_readout_params(std::size_t fused_dim, std::size_t hidden, std::uint64_t seed);
AdaPoolParams init_adapool_params(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);
GlotParams init_glot_params(const GnnConfig& cfg, std::size_t readout_hidden, std::uint64_t seed);

/// Valid token rows of several sentences stacked, with the owning sentence
/// of each row.
struct StackedTokens {
  Matrix rows;
  std::vector<std::size_t> segment;
  std::vector<std::size_t> sizes;

  std::size_t num_sentences() const noexcept { return sizes.size(); }
};

/// Stacks sentences that already hold only valid rows. Throws on an
/// empty sentence.
StackedTokens stack_sentences(std::span<const Matrix* const> sentences);

enum class Boundary { first, last };

// Tape-level poolers over stacked rows. Each returns (num_sentences × dim).

Var attention_readout(Var fused, std::span<const std::size_t> batch_index, std::size_t num_graphs,
                      Var w_m, Var b_m, Var v, Var* weights_out = nullptr);
Var mean_pool(Var rows, std::span<const std::size_t> segment, std::size_t segments);
Var max_pool(Var rows, std::span<const std::size_t> segment, std::size_t segments);
Var boundary_token_pool(Var rows, std::span<const std::size_t> sizes, Boundary which);
Var adapool(Var rows, std::span<const std::size_t> segment, std::size_t segments, Var w1, Var b1,
            Var w2, Var b2, Var* weights_out = nullptr);

/// Builds graphs over the batched sentences, runs the Token-GNN and the
/// readout. `w_in` lets callers substitute a frozen projection.
Var glot_pool(Tape& tape, const TokenGraph& batched, const GnnConfig& cfg, GlotParams& params,
              Var* weights_out = nullptr);
Var glot_pool(Tape& tape, const TokenGraph& batched, Var w_in, const GnnConfig& cfg,
              GlotParams& params, Var* weights_out = nullptr);

// Value-level convenience for a single sentence (H with a validity mask,
// empty mask = all valid). Each returns a 1×d row.

Matrix mean_pool(const Matrix& states, std::span<const std::uint8_t> mask);
Matrix max_pool(const Matrix& states, std::span<const std::uint8_t> mask);
Matrix boundary_token_pool(const Matrix& states, std::span<const std::uint8_t> mask,
                           Boundary which);
Matrix adapool(const Matrix& states, std::span<const std::uint8_t> mask, AdaPoolParams& params);

struct GlotOutput {
  Matrix embeddings;    // sentences × fused_dim
  /// Readout weight of every input position, 0 for masked positions.
  std::vector<std::vector<double>> token_weights;
};

/// End-to-end GLOT over a batch of (possibly padded) sentences.
GlotOutput glot_pool(std::span<const Matrix> states, std::span<const std::vector<std::uint8_t>> masks,
                     const GraphConfig& graph_cfg, const GnnConfig& gnn_cfg, GlotParams& params);

/// CSV rows "sentence,token_index,weight" for weight inspection.
void write_token_weights_csv(const GlotOutput& out, std::ostream& os);

}  // namespace glot
