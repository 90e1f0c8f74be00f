#pragma once

#include <cstdint>
#include <vector>

#include "anytime/dataset.hpp"
#include "anytime/sequencer.hpp"

namespace anytime {

/// γ = λ_min(C) / (1 + λ) with C = (1/n) XᵀX + λI.
double compute_gamma(const Dataset& d, double lambda);

/// F of every group subset (bitmask over group indices) with its total cost.
struct SubsetTable {
  std::vector<double> value;
  std::vector<double> cost;
  // Subsets sorted by cost with the running best value and its mask.
  std::vector<double> sorted_cost;
  std::vector<double> running_best;
  std::vector<std::uint32_t> running_mask;

  /// Best subset with total cost ≤ budget; (0, 0) when nothing fits.
  std::pair<std::uint32_t, double> best_within(double budget) const;
};

inline constexpr Index kMaxEnumeratedGroups = 20;

/// Exhaustive enumeration; throws TooManyGroups above kMaxEnumeratedGroups.
SubsetTable enumerate_subsets(const Dataset& d, double lambda);

struct Competitor {
  std::vector<Index> groups;
  double value = 0.0;
};

/// argmax F(S) over subsets with Σc ≤ budget.
Competitor best_competitor(const Dataset& d, double lambda, double budget);

struct BoundRecord {
  Index prefix = 0;          // L, number of greedy groups
  double budget = 0.0;       // B
  double competitor_cost = 0.0;  // K
  double f_greedy = 0.0;
  double f_best_competitor = 0.0;
  double bound = 0.0;        // (1 − e^{−γB/K}) F_best
  bool satisfied = true;
  double slack = 0.0;        // f_greedy − bound
};

/// F(S_K) − F(G_{j−1}) ≤ (K/γ)(F(G_j) − F(G_{j−1}))/c(g_j) at step j.
struct StepRecord {
  Index step = 0;
  double competitor_cost = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
  double slack = 0.0;  // rhs − lhs
};

struct BoundReport {
  double gamma = 0.0;
  double lambda = 0.0;
  std::vector<Index> order;
  std::vector<BoundRecord> records;
  std::vector<StepRecord> step_records;

  bool all_satisfied() const;
  std::size_t violations() const;
};

inline constexpr double kBoundSlackTolerance = 1e-10;

/// Runs the greedy sequencer and checks the approximation bound (and the
/// per-step inequality it rests on) against exhaustive competitors for every
/// prefix budget and every realizable competitor cost.
BoundReport check_theorem_bound(const Dataset& d, double lambda,
                                SelectionRule rule = SelectionRule::CostSensitiveL2,
                                const SequencerOptions& opts = {});

}  // namespace anytime
