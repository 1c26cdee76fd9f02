#include "esnmt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "esnmt/rng.hpp"

namespace esnmt {

std::vector<std::complex<double>> hessenberg_eigenvalues(const Matrix& h) {
  if (h.rows() != h.cols()) throw DimensionError("hessenberg_eigenvalues: non-square input");
  const int n = static_cast<int>(h.rows());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  // 1-based working copy keeps the classic index arithmetic readable.
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 1; i <= n; ++i) {
    for (int j = std::max(i - 1, 1); j <= n; ++j) a[i][j] = h(i - 1, j - 1);
  }
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);
  auto sign = [](double mag, double s) { return s >= 0.0 ? std::abs(mag) : -std::abs(mag); };

  double anorm = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);
  }
  int nn = n;
  int l = 1;
  double t = 0.0;
  while (nn >= 1) {
    int its = 0;
    do {
      for (l = nn; l >= 2; --l) {
        double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      double x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        double y = a[nn - 1][nn - 1];
        double w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (its == 60) throw std::runtime_error("hessenberg_eigenvalues: no convergence");
          if (its == 10 || its == 20) {
            t += x;
            for (int i = 1; i <= nn; ++i) a[i][i] -= x;
            const double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) +
                                            std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a[k][k - 1] = -a[k][k - 1];
              } else {
                a[k][k - 1] = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a[k][j] + q * a[k + 1][j];
                if (k != nn - 1) {
                  p += r * a[k + 2][j];
                  a[k + 2][j] -= p * z;
                }
                a[k + 1][j] -= p * y;
                a[k][j] -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a[i][k] + y * a[i][k + 1];
                if (k != nn - 1) {
                  p += z * a[i][k + 2];
                  a[i][k + 2] -= p * r;
                }
                a[i][k + 1] -= p * q;
                a[i][k] -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  for (int i = 1; i <= n; ++i) out[i - 1] = {wr[i], wi[i]};
  return out;
}

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <class Mat>
SpectralEstimate power_iterate(const Mat& m, const SpectralOptions& opt) {
  const std::size_t n = m.rows();
  SpectralEstimate est;
  const std::size_t order = std::clamp<std::size_t>(opt.order, 1, n);

  Rng rng(0x5eed5eedULL, "spectral_radius/start");
  Vector x(n);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  double norm = std::sqrt(squared_norm(x));
  for (double& v : x) v /= norm;

  std::vector<Vector> basis;
  double previous = -1.0;
  std::size_t stable = 0;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    est.iterations = it;
    // Arnoldi block started from the current power iterate.
    basis.assign(1, x);
    Matrix hbar(order + 1, order);
    std::size_t k = 0;
    for (; k < order; ++k) {
      Vector w = matvec(m, basis[k]);
      const double wnorm = std::sqrt(squared_norm(w));
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i <= k; ++i) {
          const double c = dot(basis[i], w);
          hbar(i, k) += c;
          axpy(-c, basis[i], w);
        }
      }
      const double beta = std::sqrt(squared_norm(w));
      hbar(k + 1, k) = beta;
      if (beta <= 1e-13 * std::max(wnorm, 1e-300)) {
        ++k;  // invariant subspace: the block is exact
        break;
      }
      for (double& v : w) v /= beta;
      basis.push_back(std::move(w));
    }
    const std::size_t dim = k;
    Matrix h(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) h(i, j) = hbar(i, j);
    }
    double r = 0.0;
    for (const auto& ev : hessenberg_eigenvalues(h)) r = std::max(r, std::abs(ev));
    est.radius = r;
    if (basis.size() == dim) {
      // Hit an invariant subspace on the first block.
      est.converged = true;
      return est;
    }
    if (previous >= 0.0 && std::abs(r - previous) < opt.tol * std::max(1.0, r)) {
      if (++stable >= 2) {
        est.converged = true;
        return est;
      }
    } else {
      stable = 0;
    }
    previous = r;

    // Next iterate is A^order x, expressed in the Arnoldi basis.
    Vector coeff(dim + 1, 0.0), next(dim + 1, 0.0);
    coeff[0] = 1.0;
    for (std::size_t step = 0; step < dim; ++step) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t j = 0; j <= step; ++j) {
        for (std::size_t i = 0; i <= j + 1; ++i) next[i] += hbar(i, j) * coeff[j];
      }
      coeff.swap(next);
    }
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) axpy(coeff[i], basis[i], x);
    norm = std::sqrt(squared_norm(x));
    if (norm == 0.0) {
      est.radius = 0.0;
      est.converged = true;
      return est;
    }
    for (double& v : x) v /= norm;
  }
  return est;
}

bool is_zero(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return v == 0.0; });
}

bool is_zero(const SparseMatrix& m) {
  return std::all_of(m.entries().begin(), m.entries().end(),
                     [](const SparseEntry& e) { return e.value == 0.0; });
}

template <class Mat>
SpectralEstimate estimate(const Mat& m, const SpectralOptions& opt) {
  if (m.rows() != m.cols()) {
    throw DimensionError("spectral_radius: matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!(opt.tol > 0.0)) throw std::invalid_argument("spectral_radius: tol must be positive");
  if (m.rows() == 0 || is_zero(m)) return {0.0, 0, true};
  return power_iterate(m, opt);
}

}  // namespace

SpectralEstimate spectral_radius(const Matrix& m, const SpectralOptions& options) {
  return estimate(m, options);
}

SpectralEstimate spectral_radius(const SparseMatrix& m, const SpectralOptions& options) {
  return estimate(m, options);
}

SpectralEstimate spectral_radius(const Matrix& m, double tol, std::size_t max_iters) {
  SpectralOptions opt;
  opt.tol = tol;
  opt.max_iters = max_iters;
  return estimate(m, opt);
}

SpectralEstimate spectral_radius(const SparseMatrix& m, double tol, std::size_t max_iters) {
  SpectralOptions opt;
  opt.tol = tol;
  opt.max_iters = max_iters;
  return estimate(m, opt);
}

}  // namespace esnmt
