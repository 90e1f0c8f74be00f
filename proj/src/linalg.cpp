#include "anytime/linalg.hpp"

#include <cmath>
#include <string>

namespace anytime {

namespace {

// Deterministic start vector with no special alignment to coordinate axes.
Vector start_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.25 * std::sin(1.7 * static_cast<double>(i + 1));
  return v.normalized();
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " expects a square matrix, got " + std::to_string(a.rows()) +
                    "x" + std::to_string(a.cols()));
  }
}

void require_symmetric_finite(const Matrix& a, double tol) {
  if (!a.allFinite()) throw Error(ErrorKind::InvalidInput, "matrix has non-finite entries");
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = j + 1; i < a.rows(); ++i) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        throw Error(ErrorKind::InvalidInput, "matrix is not symmetric at (" + std::to_string(i) +
                                                 ", " + std::to_string(j) + ")");
      }
    }
  }
}

// Raw Cholesky on the lower triangle; returns the failing pivot index or -1.
Index cholesky_in_place(Matrix& l, double pivot_tol) {
  const Index n = l.rows();
  for (Index j = 0; j < n; ++j) {
    double d = l(j, j);
    for (Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_tol)) return j;
    const double djj = std::sqrt(d);
    l(j, j) = djj;
    for (Index i = j + 1; i < n; ++i) {
      double s = l(i, j);
      for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / djj;
    }
  }
  l.triangularView<Eigen::StrictlyUpper>().setZero();
  return -1;
}

}  // namespace

SpdFactor spd_factorize(const Matrix& a, const LinalgTolerances& tol) {
  require_square(a, "spd_factorize");
  require_symmetric_finite(a, tol.symmetry);
  Matrix l = a;
  if (const Index bad = cholesky_in_place(l, tol.pivot); bad >= 0) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "pivot " + std::to_string(bad) + " is not above " + std::to_string(tol.pivot));
  }
  return SpdFactor(std::move(l));
}

Matrix spd_solve(const SpdFactor& f, const Matrix& b) {
  if (b.rows() != f.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "right-hand side has " + std::to_string(b.rows()) +
                                                  " rows, factor has dim " +
                                                  std::to_string(f.dim()));
  }
  Matrix x = f.lower().triangularView<Eigen::Lower>().solve(b);
  f.lower().transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Matrix spd_inverse(const SpdFactor& f) {
  Matrix inv = spd_solve(f, Matrix::Identity(f.dim(), f.dim()));
  return 0.5 * (inv + inv.transpose());
}

Matrix schur_complement(const Matrix& inv_old, const Matrix& cross, const Matrix& corner) {
  Matrix s = corner;
  if (inv_old.rows() > 0) s.noalias() -= cross.transpose() * (inv_old * cross);
  return 0.5 * (s + s.transpose());
}

Matrix block_inverse_update(const Matrix& inv_old, const Matrix& cross, const Matrix& corner,
                            const LinalgTolerances& tol) {
  const Index k = inv_old.rows();
  const Index m = corner.rows();
  require_square(inv_old, "block_inverse_update");
  require_square(corner, "block_inverse_update");
  if (cross.rows() != k || cross.cols() != m) {
    throw Error(ErrorKind::DimensionMismatch, "cross block must be " + std::to_string(k) + "x" +
                                                  std::to_string(m));
  }

  Matrix schur = schur_complement(inv_old, cross, corner);
  Matrix l = schur;
  if (cholesky_in_place(l, tol.pivot) >= 0) {
    throw Error(ErrorKind::SingularSchurComplement, "Schur complement is not positive definite");
  }
  const Matrix schur_inv = spd_inverse(SpdFactor(std::move(l)));

  Matrix out(k + m, k + m);
  if (k > 0) {
    const Matrix proj = inv_old * cross;  // A⁻¹B, k×m
    const Matrix off = -proj * schur_inv;
    out.topLeftCorner(k, k) = inv_old - off * proj.transpose();
    out.topRightCorner(k, m) = off;
    out.bottomLeftCorner(m, k) = off.transpose();
  }
  out.bottomRightCorner(m, m) = schur_inv;
  return out;
}

Vector jacobi_eigenvalues(const Matrix& a_in, const EigenOptions& opts) {
  require_square(a_in, "jacobi_eigenvalues");
  require_symmetric_finite(a_in, LinalgTolerances{}.symmetry);
  Matrix a = 0.5 * (a_in + a_in.transpose());
  const Index n = a.rows();
  const double scale = std::max(a.norm(), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < opts.max_iter && off_norm() > opts.tol * scale; ++sweep) {
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  if (off_norm() > opts.tol * scale) {
    throw Error(ErrorKind::NoConvergence,
                "Jacobi sweeps did not converge after " + std::to_string(sweep) + " sweeps");
  }
  Vector eig = a.diagonal();
  std::sort(eig.data(), eig.data() + eig.size());
  return eig;
}

double min_eigenvalue(const Matrix& a, const EigenOptions& opts) {
  require_square(a, "min_eigenvalue");
  if (!(opts.tol > 0)) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
  if (a.rows() == 0) throw Error(ErrorKind::DimensionMismatch, "empty matrix");
  if (a.rows() <= opts.jacobi_max_dim) return jacobi_eigenvalues(a, opts)(0);

  // Inverse iteration: the dominant eigenvalue of a⁻¹ is 1/λ_min for SPD a.
  const SpdFactor f = spd_factorize(a);
  Vector v = start_vector(a.rows());
  double estimate = v.dot(a * v);
  for (int it = 0; it < opts.max_iter; ++it) {
    Vector w = spd_solve(f, v);
    v = w.normalized();
    const double next = v.dot(a * v);
    if (std::abs(next - estimate) <= opts.tol * std::abs(next)) return next;
    estimate = next;
  }
  throw Error(ErrorKind::NoConvergence,
              "inverse power iteration did not converge in " + std::to_string(opts.max_iter) +
                  " iterations");
}

double max_eigenvalue_power(const Matrix& a, double tol, int max_iter) {
  require_square(a, "max_eigenvalue_power");
  if (a.rows() == 0) return 0.0;
  Vector v = start_vector(a.rows());
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(a * v);
    if (std::abs(next - estimate) <= tol * std::abs(next)) return next;
    estimate = next;
  }
  return estimate;
}

}  // namespace anytime
