#include "anytime/sequencer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "anytime/parallel.hpp"

namespace anytime {

std::string_view to_string(SelectionRule rule) noexcept {
  switch (rule) {
    case SelectionRule::CostSensitiveL2: return "CostSensitiveL2";
    case SelectionRule::CostSensitiveLInf: return "CostSensitiveLInf";
    case SelectionRule::CostInsensitiveL2: return "CostInsensitiveL2";
    case SelectionRule::CostSensitiveMahalanobis: return "CostSensitiveMahalanobis";
  }
  return "Unknown";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix regularized_gram(const Matrix& xs, double lambda) {
  const double inv_n = 1.0 / static_cast<double>(xs.rows());
  Matrix a = xs.transpose() * xs * inv_n;
  a = 0.5 * (a + a.transpose());
  a.diagonal().array() += lambda;
  return a;
}

void require_centered(const Dataset& d) {
  if (d.n() == 0) throw Error(ErrorKind::InvalidInput, "dataset has no samples");
  const double scale = 1.0 + d.y.cwiseAbs().maxCoeff();
  const Vector mean = d.y.colwise().mean();
  if (mean.size() > 0 && mean.cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error(ErrorKind::InvalidInput, "responses must be centered (run center_responses)");
  }
}

void require_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidInput, "lambda must be a finite nonnegative number");
  }
}

double trace_quadratic(const SpdFactor& f, const Matrix& b) {
  return (b.transpose() * spd_solve(f, b)).trace();
}

double mahalanobis_score(const SpdFactor& reg_gram, const Matrix& b, double cost) {
  if (!(cost > 0.0)) throw Error(ErrorKind::NonpositiveCost, "group cost must be positive");
  return trace_quadratic(reg_gram, b) / cost;
}

double clock_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Index argmin_lowest_index(const std::vector<double>& scores) {
  Index best = -1;
  for (std::size_t g = 0; g < scores.size(); ++g) {
    if (std::isnan(scores[g])) continue;
    if (best < 0 || scores[g] < scores[static_cast<std::size_t>(best)]) best = static_cast<Index>(g);
  }
  return best;
}

// Shared bookkeeping for the greedy loops.
void record_step(SequencingResult& r, const Dataset& d, Index pick, const RidgeModel& model,
                 double empty, std::vector<double> scores, double seconds) {
  const FeatureGroup& grp = d.structure[pick];
  r.order.push_back(pick);
  r.order_names.push_back(grp.name);
  r.prefix_costs.push_back((r.prefix_costs.empty() ? 0.0 : r.prefix_costs.back()) + grp.cost);
  r.prefix_objectives.push_back(empty - model.risk());
  r.prefix_models.push_back(model.snapshot());
  r.selection_scores.push_back(std::move(scores));
  r.step_seconds.push_back(seconds);
}

SequencingResult start_result(const Dataset& d, double lambda, std::string method) {
  SequencingResult r;
  r.method = std::move(method);
  r.lambda = lambda;
  r.n_features = d.dim();
  r.n_responses = d.responses();
  return r;
}

}  // namespace

Index argmax_lowest_index(const std::vector<double>& scores) {
  Index best = -1;
  for (std::size_t g = 0; g < scores.size(); ++g) {
    if (std::isnan(scores[g])) continue;
    if (best < 0 || scores[g] > scores[static_cast<std::size_t>(best)]) best = static_cast<Index>(g);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Direct solves

double empty_risk(const Dataset& d) {
  if (d.n() == 0) return 0.0;
  return d.y.squaredNorm() / (2.0 * static_cast<double>(d.n()));
}

RidgeFit ridge_risk(const Dataset& d, const std::vector<Index>& columns, double lambda) {
  require_lambda(lambda);
  for (Index c : columns) {
    if (c < 0 || c >= d.dim()) throw Error(ErrorKind::InvalidInput, "column index out of range");
  }
  if (columns.empty()) return {empty_risk(d), Matrix(0, d.responses())};
  const Matrix xs = d.columns_x(columns);
  const double inv_n = 1.0 / static_cast<double>(d.n());
  SpdFactor f;
  try {
    f = spd_factorize(regularized_gram(xs, lambda));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    throw Error(ErrorKind::SingularSystem, "restricted Gram matrix is singular; use lambda > 0");
  }
  RidgeFit fit;
  fit.weights = spd_solve(f, xs.transpose() * d.y * inv_n);
  const Matrix resid = d.y - xs * fit.weights;
  fit.risk = 0.5 * inv_n * resid.squaredNorm() + 0.5 * lambda * fit.weights.squaredNorm();
  return fit;
}

double explained_variance(const Dataset& d, const std::vector<Index>& columns, double lambda) {
  if (columns.empty()) return 0.0;
  return empty_risk(d) - ridge_risk(d, columns, lambda).risk;
}

double model_risk(const Dataset& d, const PrefixModel& model, double lambda) {
  if (d.n() == 0) return 0.0;
  Matrix resid = d.y;
  for (std::size_t j = 0; j < model.columns.size(); ++j) {
    const Index c = model.columns[j];
    if (c < 0 || c >= d.dim()) throw Error(ErrorKind::ColumnMismatch, "model column out of range");
    resid.noalias() -= d.x.col(c) * model.weights.row(static_cast<Index>(j));
  }
  return 0.5 * resid.squaredNorm() / static_cast<double>(d.n()) +
         0.5 * lambda * model.weights.squaredNorm();
}

// ---------------------------------------------------------------------------
// RidgeModel

RidgeModel::RidgeModel(const Dataset& d, double lambda)
    : data_(&d),
      lambda_(lambda),
      position_(static_cast<std::size_t>(d.dim()), -1),
      inv_gram_(0, 0),
      xty_(0, d.responses()),
      weights_(0, d.responses()),
      residual_(d.y) {
  require_lambda(lambda);
}

void RidgeModel::add_columns(const std::vector<Index>& columns) {
  const Dataset& d = *data_;
  const double inv_n = 1.0 / static_cast<double>(d.n());
  for (Index c : columns) {
    if (c < 0 || c >= d.dim()) throw Error(ErrorKind::InvalidInput, "column index out of range");
    if (position_[static_cast<std::size_t>(c)] >= 0) {
      throw Error(ErrorKind::InvalidInput, "column " + std::to_string(c) + " already selected");
    }
  }
  const Index k = static_cast<Index>(columns_.size());
  const Index m = static_cast<Index>(columns.size());
  const Matrix xnew = d.columns_x(columns);

  Matrix cross(k, m);
  for (Index i = 0; i < k; ++i) cross.row(i) = d.x.col(columns_[static_cast<std::size_t>(i)]).transpose() * xnew * inv_n;
  inv_gram_ = block_inverse_update(inv_gram_, cross, regularized_gram(xnew, lambda_));

  xty_.conservativeResize(k + m, Eigen::NoChange);
  xty_.bottomRows(m) = xnew.transpose() * d.y * inv_n;
  for (Index j = 0; j < m; ++j) {
    position_[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])] = k + j;
    columns_.push_back(columns[static_cast<std::size_t>(j)]);
  }

  weights_ = inv_gram_ * xty_;
  residual_ = d.y;
  for (Index j = 0; j < k + m; ++j) residual_.noalias() -= d.x.col(columns_[static_cast<std::size_t>(j)]) * weights_.row(j);
}

Eigen::RowVectorXd RidgeModel::column_weights(Index column) const {
  const Index pos = position_[static_cast<std::size_t>(column)];
  if (pos < 0) return Eigen::RowVectorXd::Zero(data_->responses());
  return weights_.row(pos);
}

double RidgeModel::risk() const {
  return 0.5 * residual_.squaredNorm() / static_cast<double>(data_->n()) +
         0.5 * lambda_ * weights_.squaredNorm();
}

// ---------------------------------------------------------------------------
// Gradients and scores

Matrix group_gradient(const Dataset& d, const RidgeModel& model, Index g) {
  const auto& cols = d.structure[g].columns;
  const double inv_n = 1.0 / static_cast<double>(d.n());
  Matrix b(static_cast<Index>(cols.size()), d.responses());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    b.row(static_cast<Index>(j)) = d.x.col(cols[j]).transpose() * model.residual() * inv_n -
                                   model.lambda() * model.column_weights(cols[j]);
  }
  return b;
}

double score_group(SelectionRule rule, const Matrix& b, const Matrix& reg_gram, double cost) {
  if (!(cost > 0.0)) throw Error(ErrorKind::NonpositiveCost, "group cost must be positive");
  switch (rule) {
    case SelectionRule::CostSensitiveL2: return b.squaredNorm() / cost;
    case SelectionRule::CostSensitiveLInf: {
      const double m = b.size() == 0 ? 0.0 : b.cwiseAbs().maxCoeff();
      return m * m / cost;
    }
    case SelectionRule::CostInsensitiveL2: return b.squaredNorm();
    case SelectionRule::CostSensitiveMahalanobis:
      return mahalanobis_score(spd_factorize(reg_gram), b, cost);
  }
  return kNaN;
}

// ---------------------------------------------------------------------------
// Sequencers

SequencingResult sequence_omp(const Dataset& d, double lambda, SelectionRule rule,
                              const SequencerOptions& opts) {
  require_lambda(lambda);
  require_centered(d);
  const bool mahalanobis = rule == SelectionRule::CostSensitiveMahalanobis;
  if (!mahalanobis && !d.whitened) {
    throw Error(ErrorKind::InvalidInput,
                std::string(to_string(rule)) + " requires group-whitened data");
  }
  const Index groups = d.num_groups();

  // Per-group factors of (1/n)X_gᵀX_g + λI for the Mahalanobis score.
  std::vector<SpdFactor> group_factors;
  if (mahalanobis) {
    group_factors.resize(static_cast<std::size_t>(groups));
    for (Index g = 0; g < groups; ++g) {
      Matrix a = group_gram(d, g);
      a.diagonal().array() += lambda;
      try {
        group_factors[static_cast<std::size_t>(g)] = spd_factorize(a);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
        throw Error(ErrorKind::RankDeficientGroup,
                    "group '" + d.structure[g].name + "' Gram matrix is singular; use lambda > 0");
      }
    }
  }

  SequencingResult result = start_result(d, lambda, "omp:" + std::string(to_string(rule)));
  RidgeModel model(d, lambda);
  const double empty = empty_risk(d);
  std::vector<bool> selected(static_cast<std::size_t>(groups), false);

  for (Index step = 0; step < groups; ++step) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> scores(static_cast<std::size_t>(groups), kNaN);
    parallel_for(static_cast<std::size_t>(groups), [&](std::size_t g) {
      if (selected[g]) return;
      const Index gi = static_cast<Index>(g);
      const Matrix b = group_gradient(d, model, gi);
      const double cost = d.structure[gi].cost;
      scores[g] = mahalanobis ? mahalanobis_score(group_factors[g], b, cost)
                              : score_group(rule, b, Matrix(), cost);
    });
    const Index pick = opts.invert_selection ? argmin_lowest_index(scores) : argmax_lowest_index(scores);
    selected[static_cast<std::size_t>(pick)] = true;
    model.add_columns(d.structure[pick].columns);
    record_step(result, d, pick, model, empty, std::move(scores), clock_seconds(start));
  }
  return result;
}

SequencingResult sequence_fr(const Dataset& d, double lambda, bool cost_sensitive,
                             const SequencerOptions& opts) {
  require_lambda(lambda);
  require_centered(d);
  const Index groups = d.num_groups();
  const double inv_n = 1.0 / static_cast<double>(d.n());

  SequencingResult result = start_result(d, lambda, cost_sensitive ? "fr:cost-sensitive" : "fr:cost-insensitive");
  RidgeModel model(d, lambda);
  const double empty = empty_risk(d);
  std::vector<bool> selected(static_cast<std::size_t>(groups), false);

  for (Index step = 0; step < groups; ++step) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> scores(static_cast<std::size_t>(groups), kNaN);
    const auto& chosen = model.selected_columns();
    parallel_for(static_cast<std::size_t>(groups), [&](std::size_t g) {
      if (selected[g]) return;
      const Index gi = static_cast<Index>(g);
      const Matrix xg = d.group_x(gi);
      Matrix cross(static_cast<Index>(chosen.size()), xg.cols());
      for (std::size_t i = 0; i < chosen.size(); ++i)
        cross.row(static_cast<Index>(i)) = d.x.col(chosen[i]).transpose() * xg * inv_n;
      // Exact gain of adding g: ½ tr(bᵀ S⁻¹ b) with S the Schur complement of
      // the enlarged regularized Gram matrix.
      const Matrix schur = schur_complement(model.inv_gram(), cross, regularized_gram(xg, lambda));
      double gain = 0.0;
      try {
        gain = 0.5 * trace_quadratic(spd_factorize(schur), group_gradient(d, model, gi));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
      }
      scores[g] = cost_sensitive ? gain / d.structure[gi].cost : gain;
    });
    const Index pick = opts.invert_selection ? argmin_lowest_index(scores) : argmax_lowest_index(scores);
    selected[static_cast<std::size_t>(pick)] = true;
    model.add_columns(d.structure[pick].columns);
    record_step(result, d, pick, model, empty, std::move(scores), clock_seconds(start));
  }
  return result;
}

}  // namespace anytime
