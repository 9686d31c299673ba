#include "glot/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "glot/error.hpp"
#include "glot/init.hpp"

namespace glot {

HeadParams init_head_params(std::size_t in_dim, std::size_t num_outputs, std::uint64_t seed) {
  if (num_outputs == 0) throw InvalidArgument("head: num_outputs must be >= 1");
  return {glorot_parameter("head.w", in_dim, num_outputs, seed),
          zero_parameter("head.b", 1, num_outputs)};
}

Var head_logits(Var z, Var w, Var b) {
  if (z.cols() != w.rows())
    throw InvalidArgument("head: embedding dim " + std::to_string(z.cols()) +
                          " != head input dim " + std::to_string(w.rows()));
  return ad::add_row(ad::matmul(z, w), b);
}

Matrix classify_single(const Matrix& z, HeadParams& head) {
  Tape t;
  return ad::row_softmax(head_logits(t.constant(z), t.param(head.w), t.param(head.b))).value();
}

Matrix classify_pair(const Matrix& z_a, const Matrix& z_b, HeadParams& head) {
  const Matrix parts[] = {z_a, z_b};
  return classify_single(hconcat(parts), head);
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine_score: length mismatch");
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (na < 1e-12 || nb < 1e-12) {
    spdlog::warn("cosine_score: zero vector, similarity defined as 0");
    return 0.0;
  }
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

Var cross_entropy_loss(Var probs, std::vector<std::size_t> labels) {
  if (labels.size() != probs.rows()) throw InvalidArgument("cross_entropy_loss: one label per row");
  return ad::scale(ad::mean_all(ad::log_clamped(ad::pick(probs, std::move(labels)), 1e-12)), -1.0);
}

Var mse_loss(Var pred, const Matrix& target) {
  if (!pred.value().same_shape(target)) throw InvalidArgument("mse_loss: shape mismatch");
  Var diff = ad::sub(pred, pred.tape()->constant(target));
  return ad::mean_all(ad::hadamard(diff, diff));
}

namespace {

void check_infonce(const Matrix& q, const Matrix& d, double temperature) {
  if (!q.same_shape(d)) throw InvalidArgument("symmetric_infonce: query/doc shapes differ");
  if (q.rows() < 2) throw InvalidArgument("symmetric_infonce: needs a batch of at least 2 pairs");
  if (!(temperature > 0.0)) throw InvalidArgument("symmetric_infonce: temperature must be > 0");
}

std::vector<std::size_t> diagonal(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

Var symmetric_infonce(Var z_q, Var z_d, double temperature) {
  check_infonce(z_q.value(), z_d.value(), temperature);
  const std::size_t n = z_q.rows();
  Var logits = ad::scale(ad::matmul(ad::normalize_rows(z_q), ad::transpose(ad::normalize_rows(z_d))),
                         1.0 / temperature);
  Var q_to_d = cross_entropy_loss(ad::row_softmax(logits), diagonal(n));
  Var d_to_q = cross_entropy_loss(ad::row_softmax(ad::transpose(logits)), diagonal(n));
  return ad::scale(ad::add(q_to_d, d_to_q), 0.5);
}

InfoNceTerms symmetric_infonce_terms(const Matrix& z_q, const Matrix& z_d, double temperature) {
  check_infonce(z_q, z_d, temperature);
  Tape t;
  const std::size_t n = z_q.rows();
  Var logits = ad::scale(ad::matmul(ad::normalize_rows(t.constant(z_q)),
                                    ad::transpose(ad::normalize_rows(t.constant(z_d)))),
                         1.0 / temperature);
  const double a = cross_entropy_loss(ad::row_softmax(logits), diagonal(n)).value()(0, 0);
  const double b =
      cross_entropy_loss(ad::row_softmax(ad::transpose(logits)), diagonal(n)).value()(0, 0);
  return {a, b, symmetric_infonce(t.constant(z_q), t.constant(z_d), temperature).value()(0, 0)};
}

}  // namespace glot
