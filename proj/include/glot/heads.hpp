#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glot/autograd.hpp"

namespace glot {

/// Linear head: logits = z W + b. For pair tasks z is concat(z_a, z_b).
struct HeadParams {
  Parameter w;  // in_dim × num_outputs
  Parameter b;  // 1 × num_outputs

  std::size_t in_dim() const noexcept { return w.value.rows(); }
  std::size_t num_outputs() const noexcept { return w.value.cols(); }
  std::vector<Parameter*> all() { return {&w, &b}; }
};

HeadParams init_head_params(std::size_t in_dim, std::size_t num_outputs, std::uint64_t seed);

Var head_logits(Var z, Var w, Var b);

/// softmax(z W + b), row per sentence.
Matrix classify_single(const Matrix& z, HeadParams& head);
/// softmax(concat(z_a, z_b) W + b).
Matrix classify_pair(const Matrix& z_a, const Matrix& z_b, HeadParams& head);

/// Cosine of two vectors; 0 (with a logged warning) if either is zero.
double cosine_score(std::span<const double> a, std::span<const double> b);

/// mean_i -log(max(probs[i, label_i], 1e-12)).
Var cross_entropy_loss(Var probs, std::vector<std::size_t> labels);
/// mean of squared errors; pred and target share a shape.
Var mse_loss(Var pred, const Matrix& target);

/// Symmetric in-batch contrastive loss on cosine logits / temperature.
/// Row i of z_q is paired with row i of z_d.
Var symmetric_infonce(Var z_q, Var z_d, double temperature);

struct InfoNceTerms {
  double query_to_doc;
  double doc_to_query;
  double loss;
};
/// The two directional terms and their average, evaluated by value.
InfoNceTerms symmetric_infonce_terms(const Matrix& z_q, const Matrix& z_d, double temperature);

}  // namespace glot
