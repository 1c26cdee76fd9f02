#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "esnmt/tensor.hpp"

namespace esnmt {

struct SpectralEstimate {
  double radius = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct SpectralOptions {
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  // Krylov order of the growth-ratio fit. Order 2 fits A^2 x ~ a Ax + b x,
  // which already resolves a dominant complex pair; larger orders also
  // separate several eigenvalues of nearly equal modulus.
  std::size_t order = 16;
};

// Largest |eigenvalue| by power iteration. Each iteration advances the
// iterate by `order` products and extracts the dominant modulus from the
// monic polynomial p minimising |p(A) x| (the Ritz values of the Krylov
// block). Returns the last estimate with converged = false when successive
// estimates never settle within tol.
SpectralEstimate spectral_radius(const Matrix& m, const SpectralOptions& options = {});
SpectralEstimate spectral_radius(const SparseMatrix& m, const SpectralOptions& options = {});
SpectralEstimate spectral_radius(const Matrix& m, double tol, std::size_t max_iters);
SpectralEstimate spectral_radius(const SparseMatrix& m, double tol, std::size_t max_iters);

// Eigenvalues of a small upper Hessenberg matrix (entries below the first
// subdiagonal are ignored) by the shifted double-step QR iteration.
std::vector<std::complex<double>> hessenberg_eigenvalues(const Matrix& h);

}  // namespace esnmt
