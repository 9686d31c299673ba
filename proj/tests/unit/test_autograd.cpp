#include <doctest.h>

#include <cmath>

#include "glot/autograd.hpp"
#include "glot/error.hpp"
#include "support/testing.hpp"

using namespace glot;
using glot::testing::gradcheck;
using glot::testing::random_matrix;
using glot::testing::random_projection;

namespace {

Parameter random_param(const char* name, std::size_t r, std::size_t c, std::uint64_t seed,
                       double scale = 1.0) {
  CounterRng rng(seed, name);
  return Parameter(name, random_matrix(r, c, rng, scale));
}

}  // namespace

TEST_CASE("x^2 at 3 has gradient 6") {
  Parameter x("x", Matrix{{3.0}});
  Tape t;
  Var v = t.param(x);
  t.backward(ad::hadamard(v, v));
  CHECK(x.grad(0, 0) == 6.0);
}

TEST_CASE("a node recorded without a backward rule fails loudly") {
  Parameter x("x", Matrix{{1.0, 2.0}});
  Tape t;
  Var v = t.param(x);
  Var bad = t.record(v.value(), "opaque", {v}, nullptr);
  CHECK_THROWS_AS(t.backward(ad::sum_all(bad)), Error);
}

TEST_CASE("backward requires a 1x1 loss on the same tape") {
  Tape t, other;
  Var a = t.constant(Matrix{{1.0, 2.0}});
  CHECK_THROWS_AS(t.backward(a), InvalidArgument);
  Var b = other.constant(Matrix{{1.0}});
  CHECK_THROWS_AS(t.backward(b), InvalidArgument);
}

TEST_CASE("gradients accumulate when a parameter is used twice") {
  Parameter x("x", Matrix{{2.0}});
  Tape t;
  Var a = t.param(x), b = t.param(x);
  t.backward(ad::add(a, ad::scale(b, 3.0)));
  CHECK(x.grad(0, 0) == 4.0);
}

TEST_CASE("finite-difference checks of every op") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    Parameter a = random_param("a", 3, 4, seed);
    Parameter b = random_param("b", 4, 2, seed);
    Parameter c = random_param("c", 3, 4, seed);
    Parameter row = random_param("row", 1, 4, seed);
    Parameter col = random_param("col", 3, 1, seed);
    Parameter s = random_param("s", 1, 1, seed);
    std::vector<Parameter*> all{&a, &b, &c, &row, &col, &s};

    auto check = [&](const char* name, auto body) {
      CAPTURE(name);
      const double err = gradcheck([&](Tape& t) { return random_projection(t, body(t), seed); }, all);
      CHECK(err < 1e-6);
    };
    check("matmul", [&](Tape& t) { return ad::matmul(t.param(a), t.param(b)); });
    check("add", [&](Tape& t) { return ad::add(t.param(a), t.param(c)); });
    check("sub", [&](Tape& t) { return ad::sub(t.param(a), t.param(c)); });
    check("add_row", [&](Tape& t) { return ad::add_row(t.param(a), t.param(row)); });
    check("scale", [&](Tape& t) { return ad::scale(t.param(a), -1.7); });
    check("scale_by", [&](Tape& t) { return ad::scale_by(t.param(a), t.param(s)); });
    check("hadamard", [&](Tape& t) { return ad::hadamard(t.param(a), t.param(c)); });
    check("scale_rows", [&](Tape& t) { return ad::scale_rows(t.param(a), t.param(col)); });
    check("concat_cols", [&](Tape& t) {
      const Var parts[] = {t.param(a), t.param(col), t.param(c)};
      return ad::concat_cols(parts);
    });
    check("slice_rows", [&](Tape& t) { return ad::slice_rows(t.param(a), 1, 2); });
    check("transpose", [&](Tape& t) { return ad::transpose(t.param(a)); });
    check("tanh", [&](Tape& t) { return ad::tanh(t.param(a)); });
    check("relu", [&](Tape& t) { return ad::relu(t.param(a)); });
    check("leaky_relu", [&](Tape& t) { return ad::leaky_relu(t.param(a), 0.2); });
    check("log_clamped", [&](Tape& t) {
      return ad::log_clamped(ad::add(ad::hadamard(t.param(a), t.param(a)), t.constant(Matrix(3, 4, 0.1))), 1e-12);
    });
    check("row_softmax", [&](Tape& t) { return ad::row_softmax(t.param(a)); });
    check("pick", [&](Tape& t) { return ad::pick(t.param(a), {3, 0, 2}); });
    check("gather_rows", [&](Tape& t) { return ad::gather_rows(t.param(a), {2, 0, 2, 1}); });
    check("scatter_add_rows", [&](Tape& t) { return ad::scatter_add_rows(t.param(a), {1, 1, 0}, 3); });
    check("segment_softmax", [&](Tape& t) { return ad::segment_softmax(t.param(col), {0, 1, 0}, 2); });
    check("segment_mean_rows", [&](Tape& t) { return ad::segment_mean_rows(t.param(a), {1, 0, 1}, 2); });
    check("segment_max_rows", [&](Tape& t) { return ad::segment_max_rows(t.param(a), {0, 0, 1}, 2); });
    check("max_elementwise", [&](Tape& t) {
      const Var parts[] = {t.param(a), t.param(c)};
      return ad::max_elementwise(parts);
    });
    check("normalize_rows", [&](Tape& t) { return ad::normalize_rows(t.param(a)); });
    check("sum_all", [&](Tape& t) { return ad::scale(t.param(a), 1.0); });
    check("mean_all", [&](Tape& t) {
      return ad::add_row(t.constant(Matrix(1, 1)), ad::mean_all(t.param(a)));
    });
  }
}

TEST_CASE("segment ops reject empty segments and bad indices") {
  Tape t;
  Var a = t.constant(Matrix{{1.0}, {2.0}});
  CHECK_THROWS_AS(ad::segment_mean_rows(a, {0, 0}, 2), InvalidArgument);
  CHECK_THROWS_AS(ad::gather_rows(a, {5}), InvalidArgument);
  CHECK_THROWS_AS(ad::pick(a, {1, 0}), InvalidArgument);
}

TEST_CASE("segment softmax sums to one per segment") {
  CounterRng rng(3, "segsoft");
  Tape t;
  Var a = t.constant(random_matrix(7, 1, rng, 5.0));
  const std::vector<std::size_t> seg{0, 1, 1, 2, 0, 2, 2};
  const Matrix p = ad::segment_softmax(a, seg, 3).value();
  double sums[3] = {0, 0, 0};
  for (std::size_t i = 0; i < seg.size(); ++i) sums[seg[i]] += p(i, 0);
  for (double s : sums) CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("tanh'(0) = 1") {
  Parameter x("x", Matrix{{0.0}});
  Tape t;
  t.backward(ad::tanh(t.param(x)));
  CHECK(x.grad(0, 0) == 1.0);
}

TEST_CASE("softmax + cross-entropy gradient equals probs - one_hot") {
  CounterRng rng(11, "ce");
  Parameter z("z", random_matrix(1, 5, rng));
  Tape t;
  Var p = ad::row_softmax(t.param(z));
  t.backward(ad::scale(ad::log_clamped(ad::pick(p, {2}), 1e-300), -1.0));
  const Matrix probs = row_softmax(z.value);
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(std::abs(z.grad(0, c) - (probs(0, c) - (c == 2 ? 1.0 : 0.0))) < 1e-12);
}
