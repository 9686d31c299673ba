#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace glot {

/// Dense row-major matrix of doubles.
///
/// Public constructors that take data reject non-finite entries. Results of
/// arithmetic are not re-validated; the trainer checks losses instead.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);
  static Matrix column_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  void fill(double v) noexcept;
  bool all_finite() const noexcept;

  Matrix transpose() const;
  /// Rows [begin, begin + count).
  Matrix row_block(std::size_t begin, std::size_t count) const;
  /// Rows picked by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  struct Unchecked {};
  Matrix(Unchecked, std::size_t rows, std::size_t cols, std::vector<double> data) noexcept
      : rows_(rows), cols_(cols), data_(std::move(data)) {}

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Kernels. Each output row depends only on the matching input row and is
// accumulated in a fixed order over the inner dimension, so permuting the
// rows of `a` permutes the rows of the result bit-for-bit.

/// a · b
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// out += a · b, shapes must already agree.
void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out);

/// x += y (same shape).
void add_inplace(Matrix& x, const Matrix& y);
/// x += alpha · y (same shape).
void axpy_inplace(Matrix& x, double alpha, const Matrix& y);

double frobenius_norm(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Pairwise cosine similarity of the rows of x. Zero-norm rows (< 1e-12)
/// have similarity 0 with everything, including themselves.
Matrix cosine_similarity_matrix(const Matrix& x);

/// Softmax of each row with per-row max subtraction.
Matrix row_softmax(const Matrix& m);

/// Horizontal concatenation.
Matrix hconcat(std::span<const Matrix> parts);
/// Vertical concatenation.
Matrix vconcat(std::span<const Matrix> parts);

}  // namespace glot
