#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rforge::spectral {

// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL with
// Wilkinson-style shifts. `diag` has n entries, `offdiag` n-1. Eigenvalues
// come back in ascending order. When `vectors` is non-null it receives the
// row-major n x n matrix whose column k is the eigenvector of value k.
std::vector<double> tridiagonal_eigen(std::vector<double> diag,
                                      std::vector<double> offdiag,
                                      std::vector<double>* vectors = nullptr);

// All eigenvalues (ascending) of a dense symmetric row-major n x n matrix:
// Householder reduction to tridiagonal form followed by implicit QL.
std::vector<double> symmetric_eigenvalues(std::vector<double> matrix, std::size_t n);

using MatVec = std::function<void(std::span<const double> x, std::span<double> y)>;

// Extreme eigenvalue of a symmetric operator via Lanczos with full
// reorthogonalization. `deflate` holds orthonormal vectors whose span is
// projected out (the search runs on its orthogonal complement).
double lanczos_extreme(std::size_t n, const MatVec& apply, bool largest,
                       std::span<const std::vector<double>> deflate = {},
                       double tolerance = 1e-11);

}  // namespace rforge::spectral
