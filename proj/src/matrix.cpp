#include "glot/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glot/error.hpp"

namespace glot {

namespace {

void require_finite(std::span<const double> data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError("Matrix: non-finite entry rejected");
  }
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw NumericError("Matrix: non-finite fill value");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InvalidArgument("Matrix: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  require_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InvalidArgument("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::column_vector(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transpose() const {
  std::vector<double> out(data_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[c * rows_ + r] = data_[r * cols_ + c];
  return Matrix(Unchecked{}, cols_, rows_, std::move(out));
}

Matrix Matrix::row_block(std::size_t begin, std::size_t count) const {
  if (begin + count > rows_) throw InvalidArgument("row_block: range exceeds rows");
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols_));
  return Matrix(Unchecked{}, count, cols_, std::move(out));
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out(indices.size() * cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw InvalidArgument("gather_rows: index out of range");
    std::copy_n(data_.data() + indices[i] * cols_, cols_, out.data() + i * cols_);
  }
  return Matrix(Unchecked{}, indices.size(), cols_, std::move(out));
}

void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
    throw InvalidArgument("matmul: shape mismatch " + shape_str(a) + " * " + shape_str(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* __restrict ap = a.data().data();
  const double* __restrict bp = b.data().data();
  double* __restrict cp = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* __restrict crow = cp + i * m;
    const double* arow = ap + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* __restrict brow = bp + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw InvalidArgument("matmul_tn: shape mismatch " + shape_str(a) + "^T * " + shape_str(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* __restrict ap = a.data().data();
  const double* __restrict bp = b.data().data();
  double* __restrict cp = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = ap + i * k;
    const double* __restrict brow = bp + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* __restrict crow = cp + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw InvalidArgument("matmul_nt: shape mismatch " + shape_str(a) + " * " + shape_str(b) +
                          "^T");
  }
  // Transposing b turns the inner loop into a contiguous axpy.
  const Matrix bt = b.transpose();
  matmul_accumulate(a, bt, out);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  matmul_accumulate(a, b, out);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  matmul_tn_accumulate(a, b, out);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  matmul_nt_accumulate(a, b, out);
  return out;
}

void add_inplace(Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw InvalidArgument("add: shape mismatch");
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) xd[i] += yd[i];
}

void axpy_inplace(Matrix& x, double alpha, const Matrix& y) {
  if (!x.same_shape(y)) throw InvalidArgument("axpy: shape mismatch");
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) xd[i] += alpha * yd[i];
}

double frobenius_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw InvalidArgument("max_abs_diff: shape mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::abs(a.data()[i] - b.data()[i]));
  return best;
}

Matrix cosine_similarity_matrix(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw InvalidArgument("cosine_similarity_matrix: need L >= 1 and d >= 1");
  }
  if (!x.all_finite()) throw NumericError("cosine_similarity_matrix: non-finite input");
  const std::size_t n = x.rows(), d = x.cols();

  // Unit rows packed in panels of four (panel-major, then k, then row) and
  // zero-padded, feeding a 4x4 register-blocked sweep over the upper
  // triangle. Each S_ij accumulates over k in increasing order, whichever
  // block it lands in.
  constexpr std::size_t kb = 4;
  const std::size_t np = (n + kb - 1) / kb * kb;
  std::vector<bool> nonzero(n, false);
  std::vector<double> ut(d * np, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) continue;
    nonzero[i] = true;
    double* panel = ut.data() + (i / kb) * d * kb + i % kb;
    for (std::size_t k = 0; k < d; ++k) panel[k * kb] = x(i, k) / norm;
  }

  Matrix s(n, n);
  for (std::size_t i0 = 0; i0 < np; i0 += kb) {
    for (std::size_t j0 = i0; j0 < np; j0 += kb) {
      double acc[kb][kb] = {};
      const double* __restrict a = ut.data() + i0 * d;
      const double* __restrict b = ut.data() + j0 * d;
      for (std::size_t k = 0; k < d; ++k, a += kb, b += kb) {
        for (std::size_t ii = 0; ii < kb; ++ii)
          for (std::size_t jj = 0; jj < kb; ++jj) acc[ii][jj] += a[ii] * b[jj];
      }
      for (std::size_t ii = 0; ii < kb && i0 + ii < n; ++ii)
        for (std::size_t jj = 0; jj < kb && j0 + jj < n; ++jj)
          if (j0 + jj > i0 + ii) s(i0 + ii, j0 + jj) = acc[ii][jj];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (nonzero[i]) s(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::clamp(s(i, j), -1.0, 1.0);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

Matrix hconcat(std::span<const Matrix> parts) {
  if (parts.empty()) throw InvalidArgument("hconcat: no parts");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw InvalidArgument("hconcat: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.row(r).begin(), p.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p.cols();
    }
  }
  return out;
}

Matrix vconcat(std::span<const Matrix> parts) {
  if (parts.empty()) throw InvalidArgument("vconcat: no parts");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw InvalidArgument("vconcat: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
  }
  return out;
}

}  // namespace glot
