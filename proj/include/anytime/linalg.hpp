#pragma once

#include <Eigen/Dense>

#include "anytime/error.hpp"

namespace anytime {

/// Column-major dense storage used throughout the library.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct LinalgTolerances {
  double pivot = 1e-12;     // smallest admissible Cholesky pivot
  double symmetry = 1e-10;  // max |a(i,j) - a(j,i)| accepted as symmetric
};

/// Lower-triangular Cholesky factor L with a = L Lᵀ.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}

  Index dim() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }
  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

 private:
  Matrix lower_;
};

/// Unpivoted Cholesky. Throws NotPositiveDefinite when a pivot falls at or
/// below tol.pivot, DimensionMismatch for non-square input and InvalidInput
/// for asymmetric or non-finite input.
SpdFactor spd_factorize(const Matrix& a, const LinalgTolerances& tol = {});

/// Solves a x = b for every column of b using the stored factor.
Matrix spd_solve(const SpdFactor& f, const Matrix& b);

/// a⁻¹ from the factor.
Matrix spd_inverse(const SpdFactor& f);

/// Inverse of [[A, cross], [crossᵀ, corner]] given inv_old = A⁻¹, through the
/// Schur complement corner − crossᵀ A⁻¹ cross. Cost O(K²m + Km² + m³).
Matrix block_inverse_update(const Matrix& inv_old, const Matrix& cross, const Matrix& corner,
                            const LinalgTolerances& tol = {});

/// corner − crossᵀ inv_old cross, symmetrized.
Matrix schur_complement(const Matrix& inv_old, const Matrix& cross, const Matrix& corner);

struct EigenOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  Index jacobi_max_dim = 64;
};

/// Smallest eigenvalue of a symmetric matrix. Cyclic Jacobi sweeps up to
/// jacobi_max_dim; above that, inverse power iteration with zero shift, which
/// requires a to be positive definite.
double min_eigenvalue(const Matrix& a, const EigenOptions& opts = {});

/// All eigenvalues of a symmetric matrix by cyclic Jacobi, ascending.
Vector jacobi_eigenvalues(const Matrix& a, const EigenOptions& opts = {});

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double max_eigenvalue_power(const Matrix& a, double tol = 1e-10, int max_iter = 10000);

}  // namespace anytime
