#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace esnmt {

using Vector = std::vector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  // Contiguous rows [first, first + count).
  std::span<double> rows_span(std::size_t first, std::size_t count) {
    return {data_.data() + first * cols_, count * cols_};
  }
  std::span<const double> rows_span(std::size_t first, std::size_t count) const {
    return {data_.data() + first * cols_, count * cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double value);
  void scale(double factor);
  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SparseEntry {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

// Coordinate-format matrix; entries are kept sorted row-major with no
// duplicate coordinates.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<SparseEntry> entries);

  static SparseMatrix from_dense(const Matrix& dense);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return entries_.size(); }
  double density() const;
  const std::vector<SparseEntry>& entries() const { return entries_; }

  Matrix to_dense() const;
  SparseMatrix scaled(double factor) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<SparseEntry> entries_;
};

// Each output element is accumulated left to right over the inner index,
// starting from 0.0, so results are bit-identical to the textbook loop.
Vector matvec(const Matrix& m, std::span<const double> v);
Vector matvec(const SparseMatrix& m, std::span<const double> v);

// y = m^T v with the same per-element ordering guarantee.
Vector matvec_transposed(const Matrix& m, std::span<const double> v);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);

// C(m x n) += A(m x k) * B(k x n); all operands row-major and contiguous.
// Every C element receives its k terms in increasing k order.
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n);

// Row-block helpers used by the sequence kernels.
Matrix hstack(const Matrix& left, const Matrix& right);
void split_columns(const Matrix& joined, Matrix& left, Matrix& right);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

bool bit_equal(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace esnmt
