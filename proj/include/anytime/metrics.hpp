#pragma once

#include <vector>

#include "anytime/dataset.hpp"
#include "anytime/sequencer.hpp"

namespace anytime {

struct CurvePoint {
  double cost = 0.0;
  double value = 0.0;
};

/// Objective-vs-cost curve starting at (0, 0) with strictly increasing costs,
/// linearly interpolated between points and flat after the last one.
class PerformanceCurve {
 public:
  PerformanceCurve() : points_{{0.0, 0.0}} {}
  /// Throws InvalidInput unless the first point is (0, 0) and costs strictly increase.
  explicit PerformanceCurve(std::vector<CurvePoint> points);
  /// Prepends (0, 0) to the given prefix costs and values.
  static PerformanceCurve from_prefixes(const std::vector<double>& costs, const std::vector<double>& values);

  const std::vector<CurvePoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double final_cost() const noexcept { return points_.back().cost; }
  double final_value() const noexcept { return points_.back().value; }

  double value_at(double cost) const;
  /// Trapezoidal area under the interpolated curve on [0, up_to].
  double area(double up_to) const;

 private:
  std::vector<CurvePoint> points_;
};

/// Explained variance (or GLM loss reduction) of every prefix model on d_eval,
/// paired with the prefix cost; starts at (0, 0).
PerformanceCurve curve_from_result(const SequencingResult& r, const Dataset& d_eval, double lambda);

/// Smallest cost at which the interpolated curve reaches alpha × final value.
double alpha_stopping_cost(const PerformanceCurve& train_curve, double alpha);

/// area(stop_cost) / (stop_cost × normalizer).
double timeliness(const PerformanceCurve& curve, double stop_cost, double normalizer);

/// alpha-timeliness with the stopping cost and normalizer taken from a
/// reference training curve; 0 when alpha = 0.
double alpha_timeliness(const PerformanceCurve& curve, const PerformanceCurve& reference_train, double alpha);

/// The α at which a curve reaches its plateau: the first point holding ≥ 95%
/// of the final value whose next 1% needs more than 20% of total cost; 1 if none.
double plateau_alpha(const PerformanceCurve& curve);

/// Reorders the selected groups by marginal gain per unit cost (descending,
/// stable) and rebuilds prefix costs and objectives from the fixed marginals.
SequencingResult oracle_reorder(const SequencingResult& r);

/// P > 1: row argmax against 1-based class labels. P = 1: the prediction is
/// rounded to the nearest value in label_set before comparing.
double accuracy(const Matrix& predictions, const std::vector<double>& labels,
                const std::vector<double>& label_set = {});

/// 1-based class index of each one-hot row.
std::vector<double> labels_from_one_hot(const Matrix& y);

/// Mean NDCG@k over queries with gain 2^rel − 1 and discount 1/log₂(i + 1);
/// queries whose relevances are all zero score 1.
double ndcg_at_k(const std::vector<std::vector<double>>& scores,
                 const std::vector<std::vector<int>>& relevances, Index k);

}  // namespace anytime
