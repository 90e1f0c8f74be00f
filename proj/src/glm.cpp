#include "anytime/glm.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "anytime/parallel.hpp"

namespace anytime {

namespace {

constexpr double kLogitFloor = -500.0;

// Row-wise mean function applied to the n × P linear predictor.
Matrix apply_mean(const GlmSpec& spec, const Matrix& z) {
  if (spec.mean_fn == MeanFunction::Identity) return z;
  Matrix m(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) m.row(i) = mean_fn_eval(spec, z.row(i).transpose()).transpose();
  return m;
}

Matrix restricted_x(const Dataset& d, const std::vector<Index>& columns) {
  for (Index c : columns) {
    if (c < 0 || c >= d.dim()) throw Error(ErrorKind::InvalidInput, "column index out of range");
  }
  return d.columns_x(columns);
}

double loss_on(const Dataset& d, const Matrix& xs, const Matrix& w, const GlmSpec& spec) {
  const Index n = d.n();
  if (n == 0) return 0.5 * spec.lambda * w.squaredNorm();
  const Matrix z = xs.cols() == 0 ? Matrix::Zero(n, spec.p) : Matrix(xs * w.transpose());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    total += log_partition(spec, z.row(i).transpose()) - d.y.row(i).dot(z.row(i));
  }
  return total / static_cast<double>(n) + 0.5 * spec.lambda * w.squaredNorm();
}

// P × k gradient on the restricted support.
Matrix gradient_on(const Dataset& d, const Matrix& xs, const Matrix& w, const GlmSpec& spec) {
  const Matrix z = xs * w.transpose();
  const Matrix resid = apply_mean(spec, z) - d.y;
  return resid.transpose() * xs / static_cast<double>(d.n()) + spec.lambda * w;
}

// Hessian over vec(W) with index p·k + j.
Matrix hessian_on(const Dataset& d, const Matrix& xs, const Matrix& w, const GlmSpec& spec) {
  const Index k = xs.cols();
  const Index p = spec.p;
  const double inv_n = 1.0 / static_cast<double>(d.n());
  Matrix h = Matrix::Zero(p * k, p * k);
  if (spec.mean_fn == MeanFunction::Identity) {
    const Matrix gram = xs.transpose() * xs * inv_n;
    for (Index q = 0; q < p; ++q) h.block(q * k, q * k, k, k) = gram;
  } else {
    const Matrix m = apply_mean(spec, xs * w.transpose());
    for (Index a = 0; a < p; ++a) {
      for (Index b = a; b < p; ++b) {
        Vector v = -m.col(a).cwiseProduct(m.col(b));
        if (a == b) v += m.col(a);
        const Matrix block = xs.transpose() * v.asDiagonal() * xs * inv_n;
        h.block(a * k, b * k, k, k) = block;
        if (a != b) h.block(b * k, a * k, k, k) = block.transpose();
      }
    }
  }
  h.diagonal().array() += spec.lambda;
  return 0.5 * (h + h.transpose());
}

Vector flatten(const Matrix& w) {
  // vec index p·k + j  ↔  w(p, j)
  Vector v(w.size());
  for (Index p = 0; p < w.rows(); ++p)
    for (Index j = 0; j < w.cols(); ++j) v(p * w.cols() + j) = w(p, j);
  return v;
}

Matrix unflatten(const Vector& v, Index p, Index k) {
  Matrix w(p, k);
  for (Index a = 0; a < p; ++a)
    for (Index j = 0; j < k; ++j) w(a, j) = v(a * k + j);
  return w;
}

// Newton direction, falling back to increasing diagonal damping and then to
// steepest descent when the Hessian cannot be factored.
Vector descent_direction(const Matrix& h, const Vector& g) {
  const double scale = 1.0 + h.diagonal().cwiseAbs().maxCoeff();
  for (double damping : {0.0, 1e-10, 1e-8, 1e-6, 1e-4}) {
    Matrix hd = h;
    hd.diagonal().array() += damping * scale;
    try {
      Vector dir = -spd_solve(spd_factorize(hd), g);
      if (dir.dot(g) < 0.0) return dir;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    }
  }
  return -g;
}

}  // namespace

void validate(const GlmSpec& spec) {
  if (spec.p < 1) throw Error(ErrorKind::InvalidConfig, "GLM response dimension must be at least 1");
  if (!(spec.lambda >= 0.0)) throw Error(ErrorKind::InvalidConfig, "GLM lambda must be nonnegative");
  if (!(spec.newton_tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "newton_tol must be positive");
  if (spec.newton_max_iter < 1) throw Error(ErrorKind::InvalidConfig, "newton_max_iter must be positive");
}

Vector mean_fn_eval(const GlmSpec& spec, const Vector& z) {
  if (spec.mean_fn == MeanFunction::Identity) return z;
  if (z.size() == 0) return z;
  const double top = z.maxCoeff();
  Vector e = (z.array() - top).max(kLogitFloor).exp().matrix();
  return e / e.sum();
}

double log_partition(const GlmSpec& spec, const Vector& z) {
  if (spec.mean_fn == MeanFunction::Identity) return 0.5 * z.squaredNorm();
  const double top = z.maxCoeff();
  return top + std::log((z.array() - top).max(kLogitFloor).exp().sum());
}

double glm_loss(const Dataset& d, const GlmModel& model) {
  const Matrix xs = restricted_x(d, model.selected_columns);
  return loss_on(d, xs, model.w, model.spec);
}

Matrix glm_gradient(const Dataset& d, const GlmModel& model) {
  const GlmSpec& spec = model.spec;
  const Matrix xs = restricted_x(d, model.selected_columns);
  const Matrix z = xs.cols() == 0 ? Matrix::Zero(d.n(), spec.p) : Matrix(xs * model.w.transpose());
  const Matrix resid = apply_mean(spec, z) - d.y;
  Matrix grad = resid.transpose() * d.x / static_cast<double>(d.n());
  for (std::size_t j = 0; j < model.selected_columns.size(); ++j) {
    grad.col(model.selected_columns[j]) += spec.lambda * model.w.col(static_cast<Index>(j));
  }
  return grad;
}

GlmModel glm_fit(const Dataset& d, const std::vector<Index>& columns, const GlmSpec& spec,
                 const GlmModel* warm_start) {
  validate(spec);
  if (spec.p != d.responses()) {
    throw Error(ErrorKind::DimensionMismatch, "GLM spec has p = " + std::to_string(spec.p) +
                                                  " but dataset has " + std::to_string(d.responses()) +
                                                  " responses");
  }
  const Index k = static_cast<Index>(columns.size());
  GlmModel model{columns, Matrix::Zero(spec.p, k), spec};
  if (k == 0) return model;
  if (warm_start != nullptr) {
    // Carry over coefficients of columns the warm start already had.
    for (std::size_t a = 0; a < warm_start->selected_columns.size(); ++a) {
      for (Index j = 0; j < k; ++j) {
        if (columns[static_cast<std::size_t>(j)] == warm_start->selected_columns[a]) {
          model.w.col(j) = warm_start->w.col(static_cast<Index>(a));
        }
      }
    }
  }

  const Matrix xs = restricted_x(d, columns);
  double loss = loss_on(d, xs, model.w, spec);
  double grad_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < spec.newton_max_iter; ++it) {
    const Matrix grad = gradient_on(d, xs, model.w, spec);
    grad_norm = grad.norm();
    if (grad_norm <= spec.newton_tol) return model;

    const Vector g = flatten(grad);
    const Vector dir = descent_direction(hessian_on(d, xs, model.w, spec), g);
    const double slope = g.dot(dir);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const Matrix trial = model.w + step * unflatten(dir, spec.p, k);
      const double trial_loss = loss_on(d, xs, trial, spec);
      const bool armijo = trial_loss <= loss + 1e-4 * step * slope;
      // Near the optimum the Armijo decrease is below rounding; accept a step
      // that does not raise the loss and shrinks the gradient.
      const bool flat = trial_loss <= loss + 1e-14 * (1.0 + std::abs(loss)) &&
                        gradient_on(d, xs, trial, spec).norm() < grad_norm;
      if (armijo || flat) {
        model.w = trial;
        loss = trial_loss;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  grad_norm = gradient_on(d, xs, model.w, spec).norm();
  if (grad_norm <= spec.newton_tol) return model;
  std::ostringstream msg;
  msg << "GLM fit stopped with gradient norm " << grad_norm << " > " << spec.newton_tol;
  throw Error(ErrorKind::NoConvergence, msg.str());
}

PrefixModel to_prefix_model(const GlmModel& model) {
  return {model.selected_columns, model.w.transpose()};
}

GlmModel from_prefix_model(const PrefixModel& model, const GlmSpec& spec) {
  return {model.columns, model.weights.transpose(), spec};
}

SequencingResult sequence_omp_glm(const Dataset& d, const GlmSpec& spec) {
  validate(spec);
  if (!d.whitened) throw Error(ErrorKind::InvalidInput, "GLM group selection requires group-whitened data");
  if (spec.p != d.responses()) {
    throw Error(ErrorKind::DimensionMismatch, "GLM spec p does not match response columns");
  }
  const Index groups = d.num_groups();
  SequencingResult result;
  result.method = spec.mean_fn == MeanFunction::Softmax ? "glm-omp:softmax" : "glm-omp:identity";
  result.lambda = spec.lambda;
  result.mean_fn = spec.mean_fn;
  result.n_features = d.dim();
  result.n_responses = d.responses();

  GlmModel model{{}, Matrix::Zero(spec.p, 0), spec};
  const double zero_loss = glm_loss(d, model);
  std::vector<bool> selected(static_cast<std::size_t>(groups), false);
  std::vector<Index> columns;

  for (Index step = 0; step < groups; ++step) {
    const auto start = std::chrono::steady_clock::now();
    const Matrix grad = glm_gradient(d, model);
    std::vector<double> scores(static_cast<std::size_t>(groups), std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(groups), [&](std::size_t g) {
      if (selected[g]) return;
      const FeatureGroup& grp = d.structure[static_cast<Index>(g)];
      double sq = 0.0;
      for (Index c : grp.columns) sq += grad.col(c).squaredNorm();
      scores[g] = sq / grp.cost;
    });
    const Index pick = argmax_lowest_index(scores);
    selected[static_cast<std::size_t>(pick)] = true;
    const FeatureGroup& grp = d.structure[pick];
    columns.insert(columns.end(), grp.columns.begin(), grp.columns.end());
    model = glm_fit(d, columns, spec, &model);

    result.order.push_back(pick);
    result.order_names.push_back(grp.name);
    result.prefix_costs.push_back((result.prefix_costs.empty() ? 0.0 : result.prefix_costs.back()) + grp.cost);
    result.prefix_objectives.push_back(zero_loss - glm_loss(d, model));
    result.prefix_models.push_back(to_prefix_model(model));
    result.selection_scores.push_back(std::move(scores));
    result.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return result;
}

}  // namespace anytime
