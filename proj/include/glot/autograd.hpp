#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glot/matrix.hpp"

namespace glot {

/// A trainable tensor together with its gradient and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Matrix init);

  std::size_t scalar_count() const noexcept { return value.size(); }
  void zero_grad() noexcept { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) noexcept : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a forward computation and replays it in reverse to produce
/// gradients. Single-threaded; use one tape per concurrent forward pass.
class Tape {
 public:
  /// Propagates the gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to `p`; backward() accumulates into p.grad. `p` must outlive
  /// the call to backward().
  Var param(Parameter& p);

  /// Records an op result. A node that needs a gradient but was recorded
  /// without a backward function makes backward() throw.
  Var record(Matrix value, std::string_view op, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(Matrix value, std::string_view op, std::span<const Var> inputs,
             BackwardFn backward);

  /// Reverse pass from a 1x1 node.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient of a node after backward(); zero-shaped if none flowed.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }
  /// Gradient slot for accumulation, allocated on first use.
  Matrix& grad_slot(std::size_t id);
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    std::string op;
    bool requires_grad = false;
    bool leaf = false;
  };

  std::vector<Node> nodes_;
};

/// Differentiable ops. Every op here records a backward rule.
namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a (n×c) + bias (1×c) broadcast over rows.
Var add_row(Var a, Var bias);
Var scale(Var a, double alpha);
/// a · s for a 1×1 node s.
Var scale_by(Var a, Var s);
Var hadamard(Var a, Var b);
/// Row i of a (n×c) multiplied by w(i, 0) for w n×1.
Var scale_rows(Var a, Var w);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var transpose(Var a);

Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
/// log(max(a, floor)); gradient is zero where the floor is active.
Var log_clamped(Var a, double floor);
Var row_softmax(Var a);

/// n×1 node whose row i is a(i, index[i]).
Var pick(Var a, std::vector<std::size_t> index);
/// Output row i = a(index[i], :).
Var gather_rows(Var a, std::vector<std::size_t> index);
/// Output row index[i] += a(i, :), output has `out_rows` rows. Additions
/// happen in increasing i, so sorted index gives a canonical sum order.
Var scatter_add_rows(Var a, std::vector<std::size_t> index, std::size_t out_rows);
/// Softmax of the n×1 column `a` within each segment.
Var segment_softmax(Var a, std::vector<std::size_t> segment, std::size_t segments);
/// Column-wise mean of the rows in each segment.
Var segment_mean_rows(Var a, std::vector<std::size_t> segment, std::size_t segments);
/// Column-wise max of the rows in each segment; the subgradient goes to
/// the first maximal row in order.
Var segment_max_rows(Var a, std::vector<std::size_t> segment, std::size_t segments);
/// Elementwise max across same-shaped inputs; ties go to the earliest input.
Var max_elementwise(std::span<const Var> parts);
/// Rows scaled to unit L2 norm; rows with norm < 1e-12 map to zero.
Var normalize_rows(Var a);

Var sum_all(Var a);
Var mean_all(Var a);

}  // namespace ad

}  // namespace glot
