#include "anytime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anytime/glm.hpp"
#include "anytime/parallel.hpp"

namespace anytime {

PerformanceCurve::PerformanceCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
  if (points_.empty() || points_.front().cost != 0.0 || points_.front().value != 0.0) {
    throw Error(ErrorKind::InvalidInput, "curve must start at (0, 0)");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].cost > points_[i - 1].cost)) {
      throw Error(ErrorKind::InvalidInput, "curve costs must be strictly increasing");
    }
  }
}

PerformanceCurve PerformanceCurve::from_prefixes(const std::vector<double>& costs,
                                                 const std::vector<double>& values) {
  if (costs.size() != values.size()) throw Error(ErrorKind::LengthMismatch, "costs and values differ in length");
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  for (std::size_t i = 0; i < costs.size(); ++i) pts.push_back({costs[i], values[i]});
  return PerformanceCurve(std::move(pts));
}

double PerformanceCurve::value_at(double cost) const {
  if (cost <= 0.0) return points_.front().value;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (cost <= points_[i].cost) {
      const CurvePoint& a = points_[i - 1];
      const CurvePoint& b = points_[i];
      return a.value + (cost - a.cost) / (b.cost - a.cost) * (b.value - a.value);
    }
  }
  return points_.back().value;
}

double PerformanceCurve::area(double up_to) const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const CurvePoint& a = points_[i - 1];
    if (up_to <= a.cost) return total;
    const CurvePoint& b = points_[i];
    const double end = std::min(up_to, b.cost);
    const double v_end = end == b.cost ? b.value : value_at(end);
    total += 0.5 * (a.value + v_end) * (end - a.cost);
  }
  if (up_to > points_.back().cost) total += points_.back().value * (up_to - points_.back().cost);
  return total;
}

PerformanceCurve curve_from_result(const SequencingResult& r, const Dataset& d_eval, double lambda) {
  if (d_eval.dim() != r.n_features || d_eval.responses() != r.n_responses) {
    throw Error(ErrorKind::ColumnMismatch, "evaluation data has " + std::to_string(d_eval.dim()) +
                                               " features and " + std::to_string(d_eval.responses()) +
                                               " responses; result expects " + std::to_string(r.n_features) +
                                               " and " + std::to_string(r.n_responses));
  }
  std::vector<double> values(r.prefix_models.size());
  if (r.mean_fn == MeanFunction::Identity) {
    const double empty = empty_risk(d_eval);
    parallel_for(values.size(), [&](std::size_t j) {
      values[j] = empty - model_risk(d_eval, r.prefix_models[j], lambda);
    });
  } else {
    GlmSpec spec;
    spec.p = r.n_responses;
    spec.mean_fn = r.mean_fn;
    spec.lambda = lambda;
    const double zero = glm_loss(d_eval, GlmModel{{}, Matrix::Zero(spec.p, 0), spec});
    parallel_for(values.size(), [&](std::size_t j) {
      values[j] = zero - glm_loss(d_eval, from_prefix_model(r.prefix_models[j], spec));
    });
  }
  std::vector<double> costs(r.prefix_costs.begin(), r.prefix_costs.begin() + static_cast<std::ptrdiff_t>(values.size()));
  return PerformanceCurve::from_prefixes(costs, values);
}

double alpha_stopping_cost(const PerformanceCurve& train_curve, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in [0, 1]");
  const auto& pts = train_curve.points();
  if (pts.size() < 2 || !(train_curve.final_value() > 0.0)) {
    throw Error(ErrorKind::EmptyCurve, "stopping cost needs at least two points and a positive final value");
  }
  if (alpha == 0.0) return 0.0;
  const double target = alpha * train_curve.final_value();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].value >= target) {
      const CurvePoint& a = pts[i - 1];
      const CurvePoint& b = pts[i];
      if (a.value >= target) return a.cost;
      return a.cost + (target - a.value) / (b.value - a.value) * (b.cost - a.cost);
    }
  }
  return train_curve.final_cost();
}

double timeliness(const PerformanceCurve& curve, double stop_cost, double normalizer) {
  if (!(stop_cost > 0.0) || !std::isfinite(stop_cost)) {
    throw Error(ErrorKind::InvalidStopCost, "stop cost must be positive and finite");
  }
  if (!(normalizer > 0.0)) throw Error(ErrorKind::InvalidInput, "normalizer must be positive");
  return curve.area(stop_cost) / (stop_cost * normalizer);
}

double alpha_timeliness(const PerformanceCurve& curve, const PerformanceCurve& reference_train, double alpha) {
  const double stop = alpha_stopping_cost(reference_train, alpha);
  if (stop == 0.0) return 0.0;
  return timeliness(curve, stop, reference_train.final_value());
}

double plateau_alpha(const PerformanceCurve& curve) {
  const auto& pts = curve.points();
  const double final_value = curve.final_value();
  if (pts.size() < 2 || !(final_value > 0.0)) return 1.0;
  const double total_cost = curve.final_cost();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].value < 0.95 * final_value) continue;
    const double goal = pts[i].value + 0.01 * final_value;
    double reach = std::numeric_limits<double>::infinity();
    for (std::size_t k = i + 1; k < pts.size(); ++k) {
      if (pts[k].value >= goal) {
        const CurvePoint& a = pts[k - 1];
        const CurvePoint& b = pts[k];
        reach = a.value >= goal ? a.cost : a.cost + (goal - a.value) / (b.value - a.value) * (b.cost - a.cost);
        break;
      }
    }
    if (reach - pts[i].cost > 0.2 * total_cost) return std::min(1.0, pts[i].value / final_value);
  }
  return 1.0;
}

SequencingResult oracle_reorder(const SequencingResult& r) {
  const std::size_t steps = r.order.size();
  std::vector<double> marginal(steps), cost(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    marginal[j] = r.prefix_objectives[j] - (j == 0 ? 0.0 : r.prefix_objectives[j - 1]);
    cost[j] = r.prefix_costs[j] - (j == 0 ? 0.0 : r.prefix_costs[j - 1]);
  }
  std::vector<std::size_t> perm(steps);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return marginal[a] / cost[a] > marginal[b] / cost[b];
  });

  SequencingResult out;
  out.method = r.method + "+oracle";
  out.lambda = r.lambda;
  out.mean_fn = r.mean_fn;
  out.n_features = r.n_features;
  out.n_responses = r.n_responses;
  double c = 0.0, f = 0.0;
  for (std::size_t j : perm) {
    c += cost[j];
    f += marginal[j];
    out.order.push_back(r.order[j]);
    if (j < r.order_names.size()) out.order_names.push_back(r.order_names[j]);
    out.prefix_costs.push_back(c);
    out.prefix_objectives.push_back(f);
  }
  return out;
}

std::vector<double> labels_from_one_hot(const Matrix& y) {
  std::vector<double> labels(static_cast<std::size_t>(y.rows()));
  for (Index i = 0; i < y.rows(); ++i) {
    Index best = 0;
    y.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<double>(best + 1);
  }
  return labels;
}

double accuracy(const Matrix& predictions, const std::vector<double>& labels,
                const std::vector<double>& label_set) {
  if (static_cast<std::size_t>(predictions.rows()) != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (Index i = 0; i < predictions.rows(); ++i) {
    double predicted = 0.0;
    if (predictions.cols() > 1) {
      Index best = 0;
      predictions.row(i).maxCoeff(&best);
      predicted = static_cast<double>(best + 1);
    } else {
      if (label_set.empty()) throw Error(ErrorKind::InvalidInput, "single-column accuracy needs a label set");
      const double p = predictions(i, 0);
      predicted = *std::min_element(label_set.begin(), label_set.end(), [p](double a, double b) {
        return std::abs(a - p) < std::abs(b - p);
      });
    }
    if (predicted == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double ndcg_at_k(const std::vector<std::vector<double>>& scores,
                 const std::vector<std::vector<int>>& relevances, Index k) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "k must be at least 1");
  if (scores.size() != relevances.size()) throw Error(ErrorKind::LengthMismatch, "query counts differ");
  if (scores.empty()) throw Error(ErrorKind::EmptyQuery, "no queries");
  std::vector<double> per_query(scores.size());
  for (std::size_t q = 0; q < scores.size(); ++q) {
    const auto& s = scores[q];
    const auto& rel = relevances[q];
    if (s.empty()) throw Error(ErrorKind::EmptyQuery, "query " + std::to_string(q) + " has no documents");
    if (s.size() != rel.size()) {
      throw Error(ErrorKind::LengthMismatch, "query " + std::to_string(q) + " has mismatched scores and relevances");
    }
    std::vector<std::size_t> ranked(s.size());
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    std::vector<int> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), s.size());
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
      dcg += (std::exp2(rel[ranked[i]]) - 1.0) * discount;
      idcg += (std::exp2(ideal[i]) - 1.0) * discount;
    }
    per_query[q] = idcg == 0.0 ? 1.0 : dcg / idcg;
  }
  return std::accumulate(per_query.begin(), per_query.end(), 0.0) / static_cast<double>(per_query.size());
}

}  // namespace anytime
