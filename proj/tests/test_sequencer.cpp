#include <doctest.h>

#include <numeric>

#include "anytime/parallel.hpp"
#include "anytime/sequencer.hpp"
#include "support.hpp"

using namespace anytime;
using testing::dense_ridge;
using testing::select_columns;

namespace {

Dataset tiny(const Matrix& x, const Matrix& y, std::vector<FeatureGroup> groups) {
  return make_dataset(x, y, GroupStructure(std::move(groups), x.cols()));
}

// Two orthogonal, whitened single-feature groups with Y = 0.9 x₁ + 0.1 x₂.
Dataset two_feature(double c1, double c2) {
  Matrix x(4, 2);
  x << 1, 1, 1, -1, -1, 1, -1, -1;
  const Matrix y = 0.9 * x.col(0) + 0.1 * x.col(1);
  return whiten_groups(center_responses(tiny(x, y, {{"g1", {0}, c1}, {"g2", {1}, c2}})), 0.0).first;
}

// Groups spanning mutually orthogonal columns with (1/n)XᵀX = I.
Dataset orthogonal_whitened(std::uint64_t seed, Index groups, Index n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> size(1, 3);
  std::vector<FeatureGroup> gs;
  Index d = 0;
  for (Index g = 0; g < groups; ++g) {
    FeatureGroup fg{"g" + std::to_string(g), {}, 1.0};
    for (Index k = size(rng); k > 0; --k) fg.columns.push_back(d++);
    gs.push_back(fg);
  }
  Matrix centered = testing::random_matrix(n, d, seed + 1);
  centered.rowwise() -= centered.colwise().mean();
  const Matrix q = Eigen::HouseholderQR<Matrix>(centered).householderQ() * Matrix::Identity(n, d);
  const Matrix x = q * std::sqrt(static_cast<double>(n));
  Matrix y = testing::random_matrix(n, 1, seed + 2);
  return whiten_groups(center_responses(tiny(x, y, gs)), 0.0).first;
}

double direct_risk(const Dataset& d, const std::vector<Index>& cols, const Matrix& w, double lambda) {
  const Matrix xs = select_columns(d.x, cols);
  const double n = static_cast<double>(d.n());
  return (d.y - xs * w).squaredNorm() / (2.0 * n) + 0.5 * lambda * w.squaredNorm();
}

// Greedy OMP in which every prefix is refit from scratch.
std::vector<Index> refit_omp_order(const Dataset& d, double lambda, bool cost_sensitive) {
  std::vector<Index> order;
  std::vector<bool> used(static_cast<std::size_t>(d.num_groups()), false);
  const double n = static_cast<double>(d.n());
  for (Index step = 0; step < d.num_groups(); ++step) {
    const std::vector<Index> cols = d.structure.columns_of(order);
    const auto fit = dense_ridge(select_columns(d.x, cols), d.y, lambda);
    const Matrix resid = d.y - select_columns(d.x, cols) * fit.weights;
    Index best = -1;
    double best_score = -1.0;
    for (Index g = 0; g < d.num_groups(); ++g) {
      if (used[static_cast<std::size_t>(g)]) continue;
      const Matrix b = d.group_x(g).transpose() * resid / n;
      const double s = b.squaredNorm() / (cost_sensitive ? d.structure[g].cost : 1.0);
      if (s > best_score) {
        best_score = s;
        best = g;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
  }
  return order;
}

std::vector<Index> refit_fr_order(const Dataset& d, double lambda, bool cost_sensitive) {
  std::vector<Index> order;
  std::vector<bool> used(static_cast<std::size_t>(d.num_groups()), false);
  for (Index step = 0; step < d.num_groups(); ++step) {
    const double base = dense_ridge(select_columns(d.x, d.structure.columns_of(order)), d.y, lambda).risk;
    Index best = -1;
    double best_gain = -INFINITY;
    for (Index g = 0; g < d.num_groups(); ++g) {
      if (used[static_cast<std::size_t>(g)]) continue;
      std::vector<Index> cand = order;
      cand.push_back(g);
      const double r = dense_ridge(select_columns(d.x, d.structure.columns_of(cand)), d.y, lambda).risk;
      const double gain = (base - r) / (cost_sensitive ? d.structure[g].cost : 1.0);
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best = g;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
  }
  return order;
}

bool is_permutation_of_groups(const std::vector<Index>& order, Index j) {
  std::vector<Index> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Index> expect(static_cast<std::size_t>(j));
  std::iota(expect.begin(), expect.end(), 0);
  return sorted == expect;
}

}  // namespace

TEST_CASE("ridge risk fixtures") {
  Matrix x(2, 1);
  x << 1, -1;
  Matrix y(2, 1);
  y << 1, -1;
  const Dataset d = tiny(x, y, {{"g", {0}, 1.0}});
  CHECK(ridge_risk(d, {}, 0.0).risk == doctest::Approx(0.25 * (1.0 + 1.0)));
  CHECK(ridge_risk(d, {}, 0.0).weights.size() == 0);
  CHECK(empty_risk(d) == doctest::Approx(0.5));
  const RidgeFit fit = ridge_risk(d, {0}, 0.0);
  CHECK(fit.weights(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(fit.risk) < 1e-15);

  const Dataset r = testing::random_dataset(4, {});
  std::vector<Index> all(static_cast<std::size_t>(r.dim()));
  std::iota(all.begin(), all.end(), 0);
  CHECK(std::abs(ridge_risk(r, all, 1e6).risk - empty_risk(r)) < 1e-3);
}

TEST_CASE("explained variance fixtures and oracle") {
  const Dataset r = testing::random_dataset(5, {});
  CHECK(explained_variance(r, {}, 0.1) == 0.0);

  SyntheticConfig cfg;
  cfg.noise_sd = 0.0;
  cfg.sparsity = 5;
  const Dataset noiseless = generate_synthetic(cfg);
  std::vector<Index> all(static_cast<std::size_t>(noiseless.dim()));
  std::iota(all.begin(), all.end(), 0);
  CHECK(std::abs(explained_variance(noiseless, all, 0.0) - empty_risk(noiseless)) < 1e-8);

  testing::InstanceShape shape;
  shape.groups = 3;
  const Dataset three = testing::random_dataset(6, shape);
  for (const std::vector<Index>& gs : {std::vector<Index>{0}, {1, 2}, {0, 1, 2}}) {
    const auto cols = three.structure.columns_of(gs);
    const auto oracle = dense_ridge(select_columns(three.x, cols), three.y, 0.3);
    const double f_oracle = three.y.squaredNorm() / (2.0 * three.n()) - oracle.risk;
    CHECK(explained_variance(three, cols, 0.3) == doctest::Approx(f_oracle).epsilon(1e-12));
    CHECK(explained_variance(three, cols, 0.3) >= 0.0);
  }
}

TEST_CASE("singular systems are reported") {
  Matrix x(3, 2);
  x << 1, 1, 2, 2, 3, 3;
  const Dataset d = tiny(x, Matrix::Ones(3, 1), {{"g", {0, 1}, 1.0}});
  try {
    ridge_risk(d, {0, 1}, 0.0);
    FAIL("expected SingularSystem");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularSystem);
  }
}

TEST_CASE("group gradient fixtures") {
  const Dataset d = center_responses(testing::random_dataset(7, {}));
  RidgeModel empty(d, 0.2);
  for (Index g = 0; g < d.num_groups(); ++g) {
    const Matrix expect = d.group_x(g).transpose() * d.y / static_cast<double>(d.n());
    CHECK((group_gradient(d, empty, g) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  RidgeModel m(d, 0.2);
  m.add_columns(d.structure.columns_of({1, 3}));
  CHECK(group_gradient(d, m, 1).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(group_gradient(d, m, 3).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("group gradient matches finite differences of F") {
  const double lambda = 0.15;
  const double h = 1e-5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = center_responses(testing::random_dataset(20 + seed, {}));
    RidgeModel m(d, lambda);
    m.add_columns(d.structure.columns_of({0}));
    std::vector<Index> all(static_cast<std::size_t>(d.dim()));
    std::iota(all.begin(), all.end(), 0);
    Matrix w = Matrix::Zero(d.dim(), 1);
    for (Index c : m.selected_columns()) w.row(c) = m.column_weights(c);
    for (Index g = 0; g < d.num_groups(); ++g) {
      const Matrix b = group_gradient(d, m, g);
      for (std::size_t k = 0; k < d.structure[g].columns.size(); ++k) {
        const Index c = d.structure[g].columns[k];
        Matrix wp = w, wm = w;
        wp(c, 0) += h;
        wm(c, 0) -= h;
        const double fd = -(direct_risk(d, all, wp, lambda) - direct_risk(d, all, wm, lambda)) / (2.0 * h);
        CHECK(std::abs(fd - b(static_cast<Index>(k), 0)) < 1e-4);
      }
    }
  }
}

TEST_CASE("score rules") {
  Vector b(2);
  b << 3, 4;
  CHECK(score_group(SelectionRule::CostSensitiveL2, b, Matrix(), 5.0) == doctest::Approx(5.0));
  CHECK(score_group(SelectionRule::CostSensitiveLInf, b, Matrix(), 2.0) == doctest::Approx(8.0));
  CHECK(score_group(SelectionRule::CostInsensitiveL2, b, Matrix(), 7.0) == doctest::Approx(25.0));
  const double lambda = 0.25;
  const Matrix reg = (1.0 + lambda) * Matrix::Identity(2, 2);
  const double oracle = b.dot(reg.ldlt().solve(b)) / 5.0;
  CHECK(score_group(SelectionRule::CostSensitiveMahalanobis, b, reg, 5.0) == doctest::Approx(oracle));
  CHECK(oracle == doctest::Approx(5.0 / (1.0 + lambda)));
  try {
    score_group(SelectionRule::CostSensitiveL2, b, Matrix(), 0.0);
    FAIL("expected NonpositiveCost");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonpositiveCost);
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax_lowest_index({1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(argmax_lowest_index({std::nan(""), 0.5, 0.5}) == 1);
  CHECK(argmax_lowest_index({std::nan("")}) == -1);
  CHECK(argmax_lowest_index({}) == -1);
}

TEST_CASE("dominant feature and cost-flipped orders") {
  CHECK(sequence_omp(two_feature(1, 1), 0.0, SelectionRule::CostSensitiveL2).order == std::vector<Index>{0, 1});
  // Step-1 scores: 0.81/100 vs 0.01/1 under the cost-sensitive rule.
  CHECK(sequence_omp(two_feature(100, 1), 0.0, SelectionRule::CostSensitiveL2).order == std::vector<Index>{1, 0});
  CHECK(sequence_omp(two_feature(100, 1), 0.0, SelectionRule::CostInsensitiveL2).order == std::vector<Index>{0, 1});
}

TEST_CASE("OMP agrees with from-scratch refitting") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    testing::InstanceShape shape;
    shape.groups = 6;
    shape.correlation = 0.5;
    const Dataset d = testing::centered_whitened(300 + seed, shape);
    const double lambda = 0.05;
    const SequencingResult r = sequence_omp(d, lambda, SelectionRule::CostSensitiveL2);
    CHECK(r.order == refit_omp_order(d, lambda, true));
    const SequencingResult g = sequence_omp(d, lambda, SelectionRule::CostInsensitiveL2);
    CHECK(g.order == refit_omp_order(d, lambda, false));
    for (std::size_t j = 0; j < r.order.size(); ++j) {
      const std::vector<Index> prefix(r.order.begin(), r.order.begin() + static_cast<long>(j) + 1);
      const auto cols = d.structure.columns_of(prefix);
      const auto fit = dense_ridge(select_columns(d.x, cols), d.y, lambda);
      CHECK(r.prefix_objectives[j] == doctest::Approx(empty_risk(d) - fit.risk).epsilon(1e-10));
    }
  }
}

TEST_CASE("sequencing result invariants") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::InstanceShape shape;
    shape.groups = 7;
    const Dataset d = testing::centered_whitened(400 + seed, shape);
    for (SelectionRule rule : {SelectionRule::CostSensitiveL2, SelectionRule::CostSensitiveLInf,
                               SelectionRule::CostInsensitiveL2, SelectionRule::CostSensitiveMahalanobis}) {
      const SequencingResult r = sequence_omp(d, 0.1, rule);
      CHECK(is_permutation_of_groups(r.order, d.num_groups()));
      CHECK(r.prefix_models.size() == r.order.size());
      CHECK(r.selection_scores.size() == r.order.size());
      for (std::size_t j = 1; j < r.order.size(); ++j) {
        CHECK(r.prefix_costs[j] > r.prefix_costs[j - 1]);
        CHECK(r.prefix_objectives[j] >= r.prefix_objectives[j - 1] - 1e-12);
      }
      for (std::size_t j = 0; j < r.order.size(); ++j) {
        CHECK(r.order_names[j] == d.structure[r.order[j]].name);
        for (std::size_t k = 0; k < j; ++k) CHECK(std::isnan(r.selection_scores[j][static_cast<std::size_t>(r.order[k])]));
      }
    }
  }
}

TEST_CASE("selected groups stay first-order optimal") {
  const Dataset d = testing::centered_whitened(500, {6, 80, 3, 0.4, 1});
  RidgeModel m(d, 0.05);
  const SequencingResult r = sequence_omp(d, 0.05, SelectionRule::CostSensitiveL2);
  for (std::size_t j = 0; j < r.order.size(); ++j) {
    m.add_columns(d.structure[r.order[j]].columns);
    for (std::size_t k = 0; k <= j; ++k) CHECK(group_gradient(d, m, r.order[k]).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("ridge model maintains its inverse and weights") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    testing::InstanceShape shape;
    shape.groups = 2 + static_cast<Index>(seed % 7);
    shape.n = 40 + static_cast<Index>(seed * 3 % 160);
    const Dataset d = center_responses(testing::random_dataset(600 + seed, shape));
    const double lambda = seed % 2 == 0 ? 0.01 : 0.5;
    RidgeModel m(d, lambda);
    std::vector<Index> cols;
    for (Index g = 0; g < d.num_groups(); ++g) {
      m.add_columns(d.structure[g].columns);
      cols.insert(cols.end(), d.structure[g].columns.begin(), d.structure[g].columns.end());
      const Matrix xs = select_columns(d.x, cols);
      const double n = static_cast<double>(d.n());
      const Matrix gram = xs.transpose() * xs / n + lambda * Matrix::Identity(xs.cols(), xs.cols());
      CHECK((m.inv_gram() * gram - Matrix::Identity(xs.cols(), xs.cols())).cwiseAbs().maxCoeff() < 1e-7);
      const auto oracle = dense_ridge(xs, d.y, lambda);
      CHECK((m.weights() - oracle.weights).cwiseAbs().maxCoeff() < 1e-7);
      CHECK((m.weights() - m.inv_gram() * xs.transpose() * d.y / n).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(m.risk() == doctest::Approx(oracle.risk).epsilon(1e-9));
    }
  }
}

TEST_CASE("forward regression fixtures") {
  Matrix x(5, 2);
  x << 1, 0, 2, 1, 3, 0, 4, 1, 5, 0;
  Matrix y(5, 1);
  y << 1, 2, 2, 4, 5;
  const Dataset single = center_responses(tiny(x, y, {{"only", {0, 1}, 3.0}}));
  const SequencingResult r = sequence_fr(single, 0.1, true);
  CHECK(r.order == std::vector<Index>{0});
  CHECK(r.prefix_costs == std::vector<double>{3.0});

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::InstanceShape shape;
    shape.groups = 3;
    const Dataset d = center_responses(testing::random_dataset(700 + seed, shape));
    CHECK(sequence_fr(d, 0.1, true).order == refit_fr_order(d, 0.1, true));
    CHECK(sequence_fr(d, 0.1, false).order == refit_fr_order(d, 0.1, false));
  }
}

TEST_CASE("forward regression and OMP coincide on orthogonal whitened groups") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = orthogonal_whitened(800 + seed, 6, 50);
    const SequencingResult fr = sequence_fr(d, 0.0, true);
    const SequencingResult omp = sequence_omp(d, 0.0, SelectionRule::CostSensitiveL2);
    CHECK(fr.order == omp.order);
    // Marginal gain equals ‖b‖²/2 at λ = 0.
    CHECK(fr.selection_scores[0][static_cast<std::size_t>(fr.order[0])] ==
          doctest::Approx(0.5 * omp.selection_scores[0][static_cast<std::size_t>(omp.order[0])]));
  }
}

TEST_CASE("cost-sensitive and cost-insensitive rules separate") {
  // g1 correlates strongly but is expensive; g2 is cheap and weaker.
  const Dataset d = two_feature(100.0, 1.0);
  const SequencingResult cs = sequence_omp(d, 0.0, SelectionRule::CostSensitiveL2);
  const SequencingResult ci = sequence_omp(d, 0.0, SelectionRule::CostInsensitiveL2);
  CHECK(cs.order.front() != ci.order.front());
}

TEST_CASE("Mahalanobis scores on raw data tie L2 scores on whitened data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::InstanceShape shape;
    shape.groups = 6;
    shape.correlation = 0.7;
    const Dataset raw = center_responses(testing::random_dataset(900 + seed, shape));
    const Dataset white = whiten_groups(raw, 0.0).first;
    const SequencingResult m = sequence_omp(raw, 0.0, SelectionRule::CostSensitiveMahalanobis);
    const SequencingResult l2 = sequence_omp(white, 0.0, SelectionRule::CostSensitiveL2);
    CHECK(m.order == l2.order);
    for (std::size_t j = 0; j < m.order.size(); ++j) {
      const auto a = static_cast<std::size_t>(m.order[j]);
      const auto b = static_cast<std::size_t>(l2.order[j]);
      CHECK(std::abs(m.selection_scores[j][a] - l2.selection_scores[j][b]) < 1e-9);
    }
  }
}

TEST_CASE("preconditions are enforced") {
  const Dataset raw = testing::random_dataset(1, {});
  CHECK_THROWS_AS(sequence_omp(raw, 0.1, SelectionRule::CostSensitiveL2), Error);
  const Dataset centered_raw = center_responses(raw);
  CHECK_THROWS_AS(sequence_omp(centered_raw, 0.1, SelectionRule::CostSensitiveL2), Error);
  CHECK_NOTHROW(sequence_omp(centered_raw, 0.1, SelectionRule::CostSensitiveMahalanobis));
}

TEST_CASE("parallel scoring is deterministic") {
  testing::InstanceShape shape;
  shape.groups = 12;
  shape.n = 120;
  const Dataset d = testing::centered_whitened(1234, shape);
  set_worker_threads(1);
  const SequencingResult a = sequence_omp(d, 0.1, SelectionRule::CostSensitiveL2);
  const SequencingResult fa = sequence_fr(d, 0.1, true);
  set_worker_threads(4);
  const SequencingResult b = sequence_omp(d, 0.1, SelectionRule::CostSensitiveL2);
  const SequencingResult fb = sequence_fr(d, 0.1, true);
  set_worker_threads(1);
  CHECK(a.order == b.order);
  CHECK(a.prefix_objectives == b.prefix_objectives);
  CHECK(fa.order == fb.order);
  CHECK(fa.prefix_objectives == fb.prefix_objectives);
}
