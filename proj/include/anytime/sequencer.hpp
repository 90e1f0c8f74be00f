#pragma once

#include <string>
#include <vector>

#include "anytime/dataset.hpp"

namespace anytime {

enum class SelectionRule {
  CostSensitiveL2,           // ‖b‖₂² / c
  CostSensitiveLInf,         // ‖b‖∞² / c   ("Single")
  CostInsensitiveL2,         // ‖b‖₂²
  CostSensitiveMahalanobis,  // bᵀ((1/n)X_gᵀX_g + λI)⁻¹ b / c, for raw data
};

std::string_view to_string(SelectionRule rule) noexcept;

enum class MeanFunction { Identity, Softmax };

/// A fitted linear model over a subset of columns; weights are |S| × P.
struct PrefixModel {
  std::vector<Index> columns;
  Matrix weights;
};

struct SequencingResult {
  std::string method;
  std::vector<Index> order;               // group indices g₁ … g_J
  std::vector<std::string> order_names;   // matching group names
  std::vector<double> prefix_costs;       // Σ_{i≤j} c(g_i)
  std::vector<double> prefix_objectives;  // F(G_j)
  std::vector<PrefixModel> prefix_models;
  /// selection_scores[j][g]: score of group g at step j; NaN once g is selected.
  std::vector<std::vector<double>> selection_scores;
  std::vector<double> step_seconds;
  double lambda = 0.0;
  MeanFunction mean_fn = MeanFunction::Identity;
  Index n_features = 0;
  Index n_responses = 1;
};

struct RidgeFit {
  double risk = 0.0;
  Matrix weights;  // |S| × P
};

/// R(S) = (1/2n)Σ‖wᵀx_S − y‖² + (λ/2)‖w‖² at its minimizer, by a dense solve.
RidgeFit ridge_risk(const Dataset& d, const std::vector<Index>& columns, double lambda);

/// R(∅) = (1/2n)Σ‖y‖².
double empty_risk(const Dataset& d);

/// F(S) = R(∅) − R(S).
double explained_variance(const Dataset& d, const std::vector<Index>& columns, double lambda);

/// Regularized risk of an arbitrary model (not necessarily optimal).
double model_risk(const Dataset& d, const PrefixModel& model, double lambda);

/// Ridge model on an ordered set of columns with a maintained inverse Gram
/// matrix ((1/n)X_SᵀX_S + λI)⁻¹, grown by block updates.
class RidgeModel {
 public:
  RidgeModel(const Dataset& d, double lambda);

  void add_columns(const std::vector<Index>& columns);

  const std::vector<Index>& selected_columns() const noexcept { return columns_; }
  const Matrix& weights() const noexcept { return weights_; }  // |S| × P
  const Matrix& inv_gram() const noexcept { return inv_gram_; }
  const Matrix& residual() const noexcept { return residual_; }  // Y − X_S W
  double lambda() const noexcept { return lambda_; }
  /// Coefficients of one column; zero when not selected.
  Eigen::RowVectorXd column_weights(Index column) const;
  double risk() const;
  PrefixModel snapshot() const { return {columns_, weights_}; }

 private:
  const Dataset* data_;
  double lambda_;
  std::vector<Index> columns_;
  std::vector<Index> position_;  // column → row in weights_, or -1
  Matrix inv_gram_;
  Matrix xty_;  // (1/n) X_Sᵀ Y
  Matrix weights_;
  Matrix residual_;
};

/// b_g = (1/n)X_gᵀ(Y − X_G w(G)) − λ w(G)_g, the gradient of F with respect to
/// the group's coefficients. D_g × P.
Matrix group_gradient(const Dataset& d, const RidgeModel& model, Index g);

/// reg_gram is (1/n)X_gᵀX_g + λI and is only read for the Mahalanobis rule.
double score_group(SelectionRule rule, const Matrix& b, const Matrix& reg_gram, double cost);

struct SequencerOptions {
  /// Test fixture: pick the lowest-scoring group instead of the highest.
  bool invert_selection = false;
};

/// Greedy group OMP run to exhaustion of groups.
SequencingResult sequence_omp(const Dataset& d, double lambda, SelectionRule rule,
                              const SequencerOptions& opts = {});

/// Greedy forward regression: exact marginal gain (per unit cost if cost_sensitive).
SequencingResult sequence_fr(const Dataset& d, double lambda, bool cost_sensitive,
                             const SequencerOptions& opts = {});

/// Index of the maximal score, ties broken towards the lowest index; NaN
/// entries are skipped. -1 if none.
Index argmax_lowest_index(const std::vector<double>& scores);

}  // namespace anytime
