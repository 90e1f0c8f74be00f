#pragma once

#include <vector>

#include "anytime/dataset.hpp"
#include "anytime/sequencer.hpp"

namespace anytime {

/// Block soft-threshold: w·max(0, 1 − threshold/‖w‖₂).
Vector group_prox(const Vector& w, double threshold);

struct LassoOptions {
  double tol = 1e-6;        // blockwise KKT residual at which FISTA stops
  int max_iter = 200000;
  int check_every = 10;     // iterations between KKT evaluations
};

struct LassoSolution {
  Vector weights;
  int iterations = 0;
  double kkt_violation = 0.0;
  std::vector<double> objective_trace;  // objective after every iteration
};

/// ½‖Y − Xw‖² + λ Σ_g c(g)‖w_g‖₂ for the first response column.
double group_lasso_objective(const Dataset& d, const Vector& w, double lambda);

/// Smallest λ at which w = 0 is optimal: max_g ‖X_gᵀY‖₂ / c(g).
double group_lasso_lambda_max(const Dataset& d);

/// Largest blockwise KKT residual: for zero blocks max(0, ‖X_gᵀr‖ − λc(g));
/// for nonzero blocks ‖X_gᵀr − λc(g) w_g/‖w_g‖‖.
double group_lasso_kkt_violation(const Dataset& d, const Vector& w, double lambda);

/// FISTA with step 1/L (L from power iteration on XᵀX) and restart whenever
/// the objective would increase. Throws NoConvergence after max_iter.
LassoSolution solve_weighted_group_lasso(const Dataset& d, double lambda, const LassoOptions& opts = {},
                                         const Vector* warm_start = nullptr);

struct LassoPath {
  std::vector<double> lambdas;           // strictly decreasing
  std::vector<Vector> solutions;
  std::vector<double> active_costs;      // Σ c(g) over nonzero blocks
  std::vector<double> objectives;        // F of a ridge refit on the active set
  std::vector<double> raw_objectives;    // F evaluated at the lasso weights
  std::vector<std::vector<Index>> active_groups;
  std::vector<double> kkt_violations;
};

/// Geometric grid from λ_max down to λ_max·1e-4, warm-started.
LassoPath lasso_path(const Dataset& d, Index n_points, double refit_lambda, const LassoOptions& opts = {});

/// Turns a path into a result whose prefixes are the ridge refits at each
/// strictly larger active cost, so it can be evaluated like a sequencing.
/// order lists groups in the order they first became active.
SequencingResult sequencing_from_path(const LassoPath& path, const Dataset& d, double refit_lambda);

}  // namespace anytime
