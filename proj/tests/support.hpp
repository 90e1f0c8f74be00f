#pragma once

// Shared fixtures and independent reference computations for the test suites.
// Nothing here calls into the library's solvers: oracles use Eigen's own
// decompositions, plain elimination or finite differences.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "anytime/dataset.hpp"

namespace testing {

using anytime::Dataset;
using anytime::FeatureGroup;
using anytime::GroupStructure;
using anytime::Index;
using anytime::Matrix;
using anytime::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_spd(Index n, std::uint64_t seed) {
  const Matrix a = random_matrix(n, n, seed);
  return a.transpose() * a + 0.5 * Matrix::Identity(n, n);
}

inline Matrix random_symmetric(Index n, std::uint64_t seed) {
  const Matrix a = random_matrix(n, n, seed);
  return 0.5 * (a + a.transpose());
}

// Partial-pivot Gaussian elimination on a copy.
inline Vector gaussian_solve(Matrix a, Vector b) {
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    Index p = k;
    for (Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    a.row(k).swap(a.row(p));
    std::swap(b(k), b(p));
    for (Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a.row(i) -= f * a.row(k);
      b(i) -= f * b(k);
    }
  }
  Vector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    double s = b(i);
    for (Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j);
    x(i) = s / a(i, i);
  }
  return x;
}

// Smallest real root of the characteristic polynomial, found from the
// companion matrix. Coefficients by Faddeev-LeVerrier.
inline double min_eigenvalue_by_polynomial(const Matrix& a) {
  const Index n = a.rows();
  std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);  // c[k] multiplies λ^(n-k)
  c[0] = 1.0;
  Matrix m = Matrix::Zero(n, n);
  for (Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(k - 1)] * Matrix::Identity(n, n);
    c[static_cast<std::size_t>(k)] = -(a * m).trace() / static_cast<double>(k);
  }
  Matrix companion = Matrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (Index i = 0; i < n; ++i) companion(i, n - 1) = -c[static_cast<std::size_t>(n - i)];
  Eigen::EigenSolver<Matrix> solver(companion);
  double best = INFINITY;
  for (Index i = 0; i < n; ++i) best = std::min(best, solver.eigenvalues()(i).real());
  return best;
}

// Ridge weights ((1/n)XᵀX + λI)⁻¹(1/n)XᵀY and the risk, by Eigen's LDLT.
struct DenseRidge {
  Matrix weights;
  double risk = 0.0;
};

inline DenseRidge dense_ridge(const Matrix& x, const Matrix& y, double lambda) {
  const double n = static_cast<double>(y.rows());
  DenseRidge out;
  if (x.cols() == 0) {
    out.weights = Matrix(0, y.cols());
    out.risk = y.squaredNorm() / (2.0 * n);
    return out;
  }
  const Matrix gram = x.transpose() * x / n + lambda * Matrix::Identity(x.cols(), x.cols());
  out.weights = gram.ldlt().solve(x.transpose() * y / n);
  out.risk = (y - x * out.weights).squaredNorm() / (2.0 * n) + 0.5 * lambda * out.weights.squaredNorm();
  return out;
}

inline Matrix select_columns(const Matrix& x, const std::vector<Index>& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = x.col(cols[j]);
  return out;
}

// Random grouped regression instance with heterogeneous costs.
struct InstanceShape {
  Index groups = 4;
  Index n = 60;
  Index max_group_size = 3;
  double correlation = 0.3;
  Index responses = 1;
};

inline Dataset random_dataset(std::uint64_t seed, const InstanceShape& shape) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> size_dist(1, shape.max_group_size);
  std::uniform_real_distribution<double> cost_dist(0.5, 5.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FeatureGroup> groups;
  Index d = 0;
  for (Index g = 0; g < shape.groups; ++g) {
    FeatureGroup fg;
    fg.name = "g" + std::to_string(g + 1);
    const Index size = size_dist(rng);
    for (Index k = 0; k < size; ++k) fg.columns.push_back(d++);
    fg.cost = std::round(cost_dist(rng) * 4.0) / 4.0;
    groups.push_back(fg);
  }
  Matrix x(shape.n, d);
  const Vector common = [&] {
    Vector v(shape.n);
    for (Index i = 0; i < shape.n; ++i) v(i) = normal(rng);
    return v;
  }();
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < shape.n; ++i)
      x(i, j) = std::sqrt(shape.correlation) * common(i) + std::sqrt(1.0 - shape.correlation) * normal(rng);
  Matrix w(d, shape.responses);
  for (Index j = 0; j < d; ++j)
    for (Index p = 0; p < shape.responses; ++p) w(j, p) = normal(rng);
  Matrix y = x * w;
  for (Index i = 0; i < y.rows(); ++i)
    for (Index p = 0; p < y.cols(); ++p) y(i, p) += 0.5 * normal(rng);
  return anytime::make_dataset(std::move(x), std::move(y), GroupStructure(groups, d));
}

inline Dataset centered_whitened(std::uint64_t seed, const InstanceShape& shape) {
  return anytime::whiten_groups(anytime::center_responses(random_dataset(seed, shape)), 0.0).first;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("anytime_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing
