#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "glot/error.hpp"
#include "glot/matrix.hpp"
#include "support/testing.hpp"

using namespace glot;
using glot::testing::random_matrix;

TEST_CASE("construction rejects non-finite entries") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Matrix(1, 2, nan), NumericError);
  CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1.0, inf}), NumericError);
  CHECK_THROWS_AS((Matrix{{1.0, nan}}), NumericError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}), InvalidArgument);
  CHECK_THROWS_AS((Matrix{{1.0, 2.0}, {3.0}}), InvalidArgument);
}

TEST_CASE("matmul variants agree with a naive triple loop") {
  CounterRng rng(7, "matmul");
  const Matrix a = random_matrix(5, 4, rng), b = random_matrix(4, 3, rng);
  Matrix naive(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) naive(i, j) += a(i, k) * b(k, j);
  CHECK(max_abs_diff(matmul(a, b), naive) < 1e-14);
  CHECK(max_abs_diff(matmul_tn(a.transpose(), b), naive) < 1e-14);
  CHECK(max_abs_diff(matmul_nt(a, b.transpose()), naive) < 1e-14);
  CHECK_THROWS_AS(matmul(a, a), InvalidArgument);
}

TEST_CASE("matmul rows permute bit-for-bit with their inputs") {
  CounterRng rng(8, "perm");
  const Matrix a = random_matrix(6, 9, rng), b = random_matrix(9, 4, rng);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  CHECK(matmul(a.gather_rows(perm), b) == matmul(a, b).gather_rows(perm));
}

TEST_CASE("cosine similarity examples") {
  SUBCASE("identical unit rows give all ones") {
    const Matrix s = cosine_similarity_matrix(Matrix{{0.6, 0.8}, {0.6, 0.8}});
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("standard basis gives the identity") {
    CHECK(cosine_similarity_matrix(Matrix::identity(3)) == Matrix::identity(3));
  }
  SUBCASE("[[3,4],[4,3]] -> 24/25") {
    const Matrix s = cosine_similarity_matrix(Matrix{{3.0, 4.0}, {4.0, 3.0}});
    CHECK(std::abs(s(0, 1) - 24.0 / 25.0) < 1e-15);
    CHECK(s(0, 0) == 1.0);
  }
  SUBCASE("zero rows have similarity 0 with everything") {
    const Matrix s = cosine_similarity_matrix(Matrix{{0.0, 0.0}, {1.0, 2.0}, {1e-13, 0.0}});
    CHECK(s(0, 0) == 0.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(2, 2) == 0.0);
    CHECK(s(1, 1) == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cosine_similarity_matrix(Matrix()), InvalidArgument);
  }
}

TEST_CASE("cosine similarity properties on random inputs") {
  CounterRng rng(9, "cos");
  for (std::size_t n : {1u, 3u, 4u, 5u, 9u, 17u}) {
    const Matrix x = random_matrix(n, 7, rng);
    const Matrix s = cosine_similarity_matrix(x);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s(i, i) == 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(s(i, j) == s(j, i));
        CHECK(s(i, j) <= 1.0);
        CHECK(s(i, j) >= -1.0);
        double dot = 0, ni = 0, nj = 0;
        for (std::size_t k = 0; k < 7; ++k) {
          dot += x(i, k) * x(j, k);
          ni += x(i, k) * x(i, k);
          nj += x(j, k) * x(j, k);
        }
        CHECK(std::abs(s(i, j) - dot / std::sqrt(ni * nj)) < 1e-12);
      }
    }
    // Permuting tokens permutes S exactly.
    std::vector<std::size_t> perm(n);
    std::iota(perm.rbegin(), perm.rend(), std::size_t{0});
    const Matrix sp = cosine_similarity_matrix(x.gather_rows(perm));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(sp(i, j) == s(perm[i], perm[j]));
  }
}

TEST_CASE("row softmax examples and properties") {
  const Matrix u = row_softmax(Matrix{{2.0, 2.0, 2.0}});
  for (double v : u.data()) CHECK(std::abs(v - 1.0 / 3.0) < 1e-15);

  const Matrix p = row_softmax(Matrix{{0.0, std::log(3.0)}});
  CHECK(std::abs(p(0, 0) - 0.25) < 1e-15);
  CHECK(std::abs(p(0, 1) - 0.75) < 1e-15);

  CounterRng rng(10, "softmax");
  const Matrix x = random_matrix(4, 6, rng, 30.0);
  Matrix shifted = x;
  for (double& v : shifted.data()) v += 1000.0;
  const Matrix a = row_softmax(x), b = row_softmax(shifted);
  CHECK(max_abs_diff(a, b) < 1e-12);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double sum = 0.0;
    for (double v : a.row(r)) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  CHECK(row_softmax(Matrix{{1e308, -1e308}}).all_finite());
}

TEST_CASE("concatenation and helpers") {
  const Matrix a{{1, 2}}, b{{3}};
  const Matrix parts[] = {a, b};
  CHECK(hconcat(parts) == Matrix{{1, 2, 3}});
  const Matrix rows[] = {Matrix{{1, 2}}, Matrix{{3, 4}}};
  CHECK(vconcat(rows) == Matrix{{1, 2}, {3, 4}});
  CHECK(frobenius_norm(Matrix{{3, 4}}) == 5.0);
  CHECK(Matrix{{1, 2}, {3, 4}}.transpose() == Matrix{{1, 3}, {2, 4}});
  CHECK(Matrix{{1, 2}, {3, 4}, {5, 6}}.row_block(1, 2) == Matrix{{3, 4}, {5, 6}});
}
