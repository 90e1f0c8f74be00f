#pragma once

#include <vector>

#include "anytime/dataset.hpp"
#include "anytime/sequencer.hpp"

namespace anytime {

struct GlmSpec {
  Index p = 1;  // response dimension
  MeanFunction mean_fn = MeanFunction::Identity;
  double lambda = 0.0;
  double newton_tol = 1e-8;
  int newton_max_iter = 100;
};

/// Validates p ≥ 1, lambda ≥ 0, newton_tol > 0; throws InvalidConfig.
void validate(const GlmSpec& spec);

struct GlmModel {
  std::vector<Index> selected_columns;
  Matrix w;  // P × |S|
  GlmSpec spec;
};

/// ∇φ(z): identity, or a max-shifted softmax.
Vector mean_fn_eval(const GlmSpec& spec, const Vector& z);

/// φ(z): ½‖z‖² for Identity, log-sum-exp for Softmax (so φ(0) = log P).
double log_partition(const GlmSpec& spec, const Vector& z);

/// r(W) = (1/n) Σ (φ(W x_i) − y_iᵀ W x_i) + (λ/2)‖W‖_F².
double glm_loss(const Dataset& d, const GlmModel& model);

/// Full P × D gradient; unselected columns use zero coefficients.
Matrix glm_gradient(const Dataset& d, const GlmModel& model);

/// Damped Newton with Armijo backtracking on the restricted problem.
/// Throws NoConvergence (with the final gradient norm) after newton_max_iter.
GlmModel glm_fit(const Dataset& d, const std::vector<Index>& columns, const GlmSpec& spec,
                 const GlmModel* warm_start = nullptr);

/// Greedy group selection by ‖∇r(W)_g‖_F² / c(g); F(G_j) = r(0) − r(W_j).
SequencingResult sequence_omp_glm(const Dataset& d, const GlmSpec& spec);

/// Converts between the GLM's P × |S| layout and the |S| × P prefix layout.
PrefixModel to_prefix_model(const GlmModel& model);
GlmModel from_prefix_model(const PrefixModel& model, const GlmSpec& spec);

}  // namespace anytime
