#include "esnmt/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace esnmt {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    std::ostringstream msg;
    msg << "matrix data length " << data_.size() << " does not match shape " << rows_ << "x"
        << cols_;
    throw DimensionError(msg.str());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Matrix::scale(double factor) {
  for (double& x : data_) x *= factor;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<SparseEntry> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.row >= rows_ || e.col >= cols_) throw DimensionError("sparse entry outside matrix");
    if (!std::isfinite(e.value)) throw std::invalid_argument("sparse entry is not finite");
    if (i > 0 && entries_[i - 1].row == e.row && entries_[i - 1].col == e.col) {
      throw std::invalid_argument("duplicate sparse coordinate (" + std::to_string(e.row) + ", " +
                                  std::to_string(e.col) + ")");
    }
  }
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<SparseEntry> entries;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      const double v = dense(r, c);
      if (v != 0.0) {
        entries.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), v});
      }
    }
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(entries));
}

double SparseMatrix::density() const {
  if (rows_ == 0 || cols_ == 0) return 0.0;
  return static_cast<double>(entries_.size()) / static_cast<double>(rows_ * cols_);
}

Matrix SparseMatrix::to_dense() const {
  Matrix m(rows_, cols_);
  for (const auto& e : entries_) m(e.row, e.col) = e.value;
  return m;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix out = *this;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

namespace {

[[noreturn]] void throw_mismatch(const char* op, std::size_t mr, std::size_t mc, std::size_t n) {
  std::ostringstream msg;
  msg << op << ": matrix is " << mr << "x" << mc << " but vector has length " << n;
  throw DimensionError(msg.str());
}

}  // namespace

Vector matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols() != v.size()) throw_mismatch("matvec", m.rows(), m.cols(), v.size());
  Vector y(m.rows(), 0.0);
  const std::size_t n = m.cols();
  const double* w = m.data();
  std::size_t i = 0;
  // Four independent row accumulators; each one still sums in column order.
  for (; i + 4 <= m.rows(); i += 4) {
    const double* r0 = w + i * n;
    const double* r1 = r0 + n;
    const double* r2 = r1 + n;
    const double* r3 = r2 + n;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = v[k];
      s0 += r0[k] * x;
      s1 += r1[k] * x;
      s2 += r2[k] * x;
      s3 += r3[k] * x;
    }
    y[i] = s0;
    y[i + 1] = s1;
    y[i + 2] = s2;
    y[i + 3] = s3;
  }
  for (; i < m.rows(); ++i) {
    const double* r = w + i * n;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += r[k] * v[k];
    y[i] = s;
  }
  return y;
}

Vector matvec(const SparseMatrix& m, std::span<const double> v) {
  if (m.cols() != v.size()) throw_mismatch("matvec", m.rows(), m.cols(), v.size());
  Vector y(m.rows(), 0.0);
  for (const auto& e : m.entries()) y[e.row] += e.value * v[e.col];
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> v) {
  if (m.rows() != v.size()) throw_mismatch("matvec_transposed", m.rows(), m.cols(), v.size());
  Vector y(m.cols(), 0.0);
  gemm_acc(v.data(), m.data(), y.data(), 1, m.rows(), m.cols());
  return y;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < m.rows(); r0 += kBlock) {
    const std::size_t r1 = std::min(m.rows(), r0 + kBlock);
    for (std::size_t c0 = 0; c0 < m.cols(); c0 += kBlock) {
      const std::size_t c1 = std::min(m.cols(), c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) t(c, r) = m(r, c);
      }
    }
  }
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " times " + b.shape_string());
  }
  Matrix c(a.rows(), b.cols());
  gemm_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

namespace {

constexpr std::size_t kLanes = 8;
typedef double Lane __attribute__((vector_size(kLanes * sizeof(double))));

inline Lane load_lane(const double* p) {
  Lane v;
  std::memcpy(&v, p, sizeof(Lane));
  return v;
}

inline void store_lane(double* p, Lane v) { std::memcpy(p, &v, sizeof(Lane)); }

inline Lane broadcast(double x) { return Lane{x, x, x, x, x, x, x, x}; }

// Register tile of MR rows by NV*kLanes columns.
template <std::size_t MR, std::size_t NV>
inline void tile(const double* a, const double* b, double* c, std::size_t k, std::size_t lda,
                 std::size_t ldb, std::size_t ldc) {
  Lane acc[MR][NV];
  for (std::size_t r = 0; r < MR; ++r) {
    for (std::size_t v = 0; v < NV; ++v) acc[r][v] = load_lane(c + r * ldc + v * kLanes);
  }
  for (std::size_t p = 0; p < k; ++p) {
    Lane bv[NV];
    for (std::size_t v = 0; v < NV; ++v) bv[v] = load_lane(b + p * ldb + v * kLanes);
    for (std::size_t r = 0; r < MR; ++r) {
      const Lane av = broadcast(a[r * lda + p]);
      for (std::size_t v = 0; v < NV; ++v) acc[r][v] += av * bv[v];
    }
  }
  for (std::size_t r = 0; r < MR; ++r) {
    for (std::size_t v = 0; v < NV; ++v) store_lane(c + r * ldc + v * kLanes, acc[r][v]);
  }
}

inline void scalar_tile(const double* a, const double* b, double* c, std::size_t mr,
                        std::size_t nc, std::size_t k, std::size_t lda, std::size_t ldb,
                        std::size_t ldc) {
  for (std::size_t r = 0; r < mr; ++r) {
    for (std::size_t j = 0; j < nc; ++j) {
      double s = c[r * ldc + j];
      for (std::size_t p = 0; p < k; ++p) s += a[r * lda + p] * b[p * ldb + j];
      c[r * ldc + j] = s;
    }
  }
}

}  // namespace

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  if (m == 0 || n == 0 || k == 0) return;
  constexpr std::size_t kMr = 8;
  constexpr std::size_t kNv = 2;
  constexpr std::size_t kNr = kNv * kLanes;
  constexpr std::size_t kMb = 64;
  // Row blocks outermost, then column panels, so both the A block and a
  // k x kNr slice of B stay cache resident.
  const std::size_t n_main = n - n % kNr;
  const std::size_t n_lane = n - n % kLanes;
  for (std::size_t i0 = 0; i0 < m; i0 += kMb) {
    const std::size_t i1 = std::min(m, i0 + kMb);
    for (std::size_t j = 0; j < n_main; j += kNr) {
      std::size_t i = i0;
      for (; i + kMr <= i1; i += kMr) tile<kMr, kNv>(a + i * k, b + j, c + i * n + j, k, k, n, n);
      for (; i < i1; ++i) tile<1, kNv>(a + i * k, b + j, c + i * n + j, k, k, n, n);
    }
    for (std::size_t j = n_main; j < n_lane; j += kLanes) {
      std::size_t i = i0;
      for (; i + kMr <= i1; i += kMr) tile<kMr, 1>(a + i * k, b + j, c + i * n + j, k, k, n, n);
      for (; i < i1; ++i) tile<1, 1>(a + i * k, b + j, c + i * n + j, k, k, n, n);
    }
  }
  const std::size_t j = n_lane;
  if (j < n) scalar_tile(a, b + j, c + j, m, n - j, k, k, n, n);
}

Matrix hstack(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw DimensionError("hstack: " + left.shape_string() + " with " + right.shape_string());
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + left.cols());
  }
  return out;
}

void split_columns(const Matrix& joined, Matrix& left, Matrix& right) {
  if (joined.rows() != left.rows() || joined.rows() != right.rows() ||
      joined.cols() != left.cols() + right.cols()) {
    throw DimensionError("split_columns: " + joined.shape_string() + " into " +
                         left.shape_string() + " and " + right.shape_string());
  }
  for (std::size_t r = 0; r < joined.rows(); ++r) {
    auto src = joined.row(r);
    std::copy(src.begin(), src.begin() + left.cols(), left.row(r).begin());
    std::copy(src.begin() + left.cols(), src.end(), right.row(r).begin());
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) {
      return false;
    }
  }
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                         b.shape_string() + " differ");
  }
}

}  // namespace esnmt
