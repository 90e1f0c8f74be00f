#include "anytime/grouplasso.hpp"

#include <cmath>
#include <sstream>

#include "anytime/sequencer.hpp"

namespace anytime {

namespace {

void require_single_response(const Dataset& d) {
  if (d.responses() != 1) throw Error(ErrorKind::InvalidInput, "group lasso expects one response column");
}

Vector block(const Vector& w, const FeatureGroup& g) {
  Vector b(static_cast<Index>(g.columns.size()));
  for (std::size_t j = 0; j < g.columns.size(); ++j) b(static_cast<Index>(j)) = w(g.columns[j]);
  return b;
}

double penalty(const Dataset& d, const Vector& w) {
  double s = 0.0;
  for (const auto& g : d.structure.groups()) s += g.cost * block(w, g).norm();
  return s;
}

Vector prox_all(const Dataset& d, const Vector& v, double step_threshold) {
  Vector out(v.size());
  for (const auto& g : d.structure.groups()) {
    const Vector b = group_prox(block(v, g), step_threshold * g.cost);
    for (std::size_t j = 0; j < g.columns.size(); ++j) out(g.columns[j]) = b(static_cast<Index>(j));
  }
  return out;
}

std::vector<Index> active_groups_of(const Dataset& d, const Vector& w) {
  std::vector<Index> active;
  for (Index g = 0; g < d.num_groups(); ++g)
    if (block(w, d.structure[g]).squaredNorm() > 0.0) active.push_back(g);
  return active;
}

}  // namespace

Vector group_prox(const Vector& w, double threshold) {
  const double norm = w.norm();
  if (norm <= threshold) return Vector::Zero(w.size());
  return w * (1.0 - threshold / norm);
}

double group_lasso_objective(const Dataset& d, const Vector& w, double lambda) {
  return 0.5 * (d.y.col(0) - d.x * w).squaredNorm() + lambda * penalty(d, w);
}

double group_lasso_lambda_max(const Dataset& d) {
  require_single_response(d);
  const Vector xty = d.x.transpose() * d.y.col(0);
  double best = 0.0;
  for (const auto& g : d.structure.groups()) best = std::max(best, block(xty, g).norm() / g.cost);
  return best;
}

double group_lasso_kkt_violation(const Dataset& d, const Vector& w, double lambda) {
  require_single_response(d);
  const Vector corr = d.x.transpose() * (d.y.col(0) - d.x * w);
  double worst = 0.0;
  for (const auto& g : d.structure.groups()) {
    const Vector wg = block(w, g);
    const Vector cg = block(corr, g);
    const double norm = wg.norm();
    const double v = norm == 0.0 ? std::max(0.0, cg.norm() - lambda * g.cost)
                                 : (cg - lambda * g.cost * wg / norm).norm();
    worst = std::max(worst, v);
  }
  return worst;
}

LassoSolution solve_weighted_group_lasso(const Dataset& d, double lambda, const LassoOptions& opts,
                                         const Vector* warm_start) {
  require_single_response(d);
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidInput, "group lasso lambda must be positive");
  const Index dim = d.dim();
  LassoSolution sol;
  if (lambda >= group_lasso_lambda_max(d)) {
    sol.weights = Vector::Zero(dim);
    sol.kkt_violation = group_lasso_kkt_violation(d, sol.weights, lambda);
    sol.objective_trace.push_back(group_lasso_objective(d, sol.weights, lambda));
    return sol;
  }

  const Matrix gram = d.x.transpose() * d.x;
  const Vector xty = d.x.transpose() * d.y.col(0);
  const double lipschitz = 1.01 * max_eigenvalue_power(gram, 1e-12, 100000) + 1e-300;
  auto objective = [&](const Vector& w) { return group_lasso_objective(d, w, lambda); };
  auto prox_step = [&](const Vector& from) {
    return prox_all(d, from - (gram * from - xty) / lipschitz, lambda / lipschitz);
  };

  Vector x = warm_start != nullptr ? *warm_start : Vector::Zero(dim);
  if (x.size() != dim) throw Error(ErrorKind::DimensionMismatch, "warm start has wrong length");
  Vector y = x;
  double t = 1.0;
  double fx = objective(x);
  sol.objective_trace.push_back(fx);

  for (int it = 1; it <= opts.max_iter; ++it) {
    Vector next = prox_step(y);
    double fnext = objective(next);
    if (fnext > fx) {
      // Restart momentum: a plain proximal step from x cannot increase F.
      t = 1.0;
      next = prox_step(x);
      fnext = objective(next);
      // A plain step cannot increase F beyond rounding; only reject real rises.
      if (fnext > fx + 1e-13 * std::max(1.0, std::abs(fx))) {
        next = x;
        fnext = fx;
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    t = t_next;
    x = std::move(next);
    fx = fnext;
    sol.objective_trace.push_back(fx);
    sol.iterations = it;
    if (it % opts.check_every == 0) {
      sol.kkt_violation = group_lasso_kkt_violation(d, x, lambda);
      if (sol.kkt_violation <= opts.tol) {
        sol.weights = std::move(x);
        return sol;
      }
    }
  }
  std::ostringstream msg;
  msg << "FISTA stopped after " << opts.max_iter << " iterations with KKT violation "
      << group_lasso_kkt_violation(d, x, lambda);
  throw Error(ErrorKind::NoConvergence, msg.str());
}

LassoPath lasso_path(const Dataset& d, Index n_points, double refit_lambda, const LassoOptions& opts) {
  require_single_response(d);
  if (n_points < 2) throw Error(ErrorKind::InvalidInput, "lasso path needs at least two points");
  const double lambda_max = group_lasso_lambda_max(d);
  if (!(lambda_max > 0.0)) throw Error(ErrorKind::InvalidInput, "responses are orthogonal to every group");

  LassoPath path;
  const double empty = empty_risk(d);
  Vector warm = Vector::Zero(d.dim());
  for (Index k = 0; k < n_points; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_points - 1);
    const double lambda = lambda_max * std::pow(1e-4, frac);
    LassoSolution sol = solve_weighted_group_lasso(d, lambda, opts, &warm);
    warm = sol.weights;

    const std::vector<Index> active = active_groups_of(d, sol.weights);
    double cost = 0.0;
    for (Index g : active) cost += d.structure[g].cost;
    const std::vector<Index> cols = d.structure.columns_of(active);

    PrefixModel raw{cols, Matrix(static_cast<Index>(cols.size()), 1)};
    for (std::size_t j = 0; j < cols.size(); ++j) raw.weights(static_cast<Index>(j), 0) = sol.weights(cols[j]);

    path.lambdas.push_back(lambda);
    path.active_costs.push_back(cost);
    path.objectives.push_back(explained_variance(d, cols, refit_lambda));
    path.raw_objectives.push_back(empty - model_risk(d, raw, refit_lambda));
    path.active_groups.push_back(active);
    path.kkt_violations.push_back(sol.kkt_violation);
    path.solutions.push_back(std::move(sol.weights));
  }
  return path;
}

SequencingResult sequencing_from_path(const LassoPath& path, const Dataset& d, double refit_lambda) {
  SequencingResult r;
  r.method = "sparse";
  r.lambda = refit_lambda;
  r.n_features = d.dim();
  r.n_responses = d.responses();
  std::vector<bool> seen(static_cast<std::size_t>(d.num_groups()), false);
  double last_cost = 0.0;
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    for (Index g : path.active_groups[k]) {
      if (!seen[static_cast<std::size_t>(g)]) {
        seen[static_cast<std::size_t>(g)] = true;
        r.order.push_back(g);
        r.order_names.push_back(d.structure[g].name);
      }
    }
    if (!(path.active_costs[k] > last_cost)) continue;
    last_cost = path.active_costs[k];
    const std::vector<Index> cols = d.structure.columns_of(path.active_groups[k]);
    const RidgeFit fit = ridge_risk(d, cols, refit_lambda);
    r.prefix_costs.push_back(path.active_costs[k]);
    r.prefix_objectives.push_back(empty_risk(d) - fit.risk);
    r.prefix_models.push_back({cols, fit.weights});
  }
  return r;
}

}  // namespace anytime
