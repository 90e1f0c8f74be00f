#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anytime/linalg.hpp"

namespace anytime {

struct FeatureGroup {
  std::string name;
  std::vector<Index> columns;
  double cost = 1.0;
};

/// Partition of the feature columns into named, costed groups.
class GroupStructure {
 public:
  GroupStructure() = default;
  /// Validates that the columns partition [0, n_features), costs are positive
  /// and names are unique; throws SpecError otherwise.
  GroupStructure(std::vector<FeatureGroup> groups, Index n_features);

  Index size() const noexcept { return static_cast<Index>(groups_.size()); }
  Index num_features() const noexcept { return n_features_; }
  const FeatureGroup& operator[](Index g) const { return groups_[static_cast<std::size_t>(g)]; }
  const std::vector<FeatureGroup>& groups() const noexcept { return groups_; }
  double total_cost() const;
  Index find(const std::string& name) const;  // -1 if absent

  /// Concatenated column indices of the given groups, in the given order.
  std::vector<Index> columns_of(const std::vector<Index>& group_ids) const;

 private:
  std::vector<FeatureGroup> groups_;
  Index n_features_ = 0;
};

/// Features, responses and group structure. Transformations return new values.
struct Dataset {
  Matrix x;  // n × D
  Matrix y;  // n × P
  GroupStructure structure;
  std::vector<std::string> feature_names;
  std::vector<std::string> response_names;
  bool whitened = false;
  bool centered = false;
  Vector response_mean;  // length P, zero until center_responses runs
  Vector feature_mean;   // length D, zero unless center_features ran

  Index n() const noexcept { return x.rows(); }
  Index dim() const noexcept { return x.cols(); }
  Index responses() const noexcept { return y.cols(); }
  Index num_groups() const noexcept { return structure.size(); }

  /// n × D_g block of the group's columns.
  Matrix group_x(Index g) const;
  Matrix columns_x(const std::vector<Index>& columns) const;
};

/// Builds a dataset and fills in default names and zero means; checks shapes.
Dataset make_dataset(Matrix x, Matrix y, GroupStructure structure);

/// Per-group whitening matrices T_g, applied as X_g ← X_g T_g.
struct WhiteningTransform {
  std::vector<Matrix> per_group;
  double ridge = 0.0;

  /// Applies the transform to a column-compatible dataset and marks it whitened.
  Dataset apply(const Dataset& d) const;
};

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

Dataset load_csv(const std::filesystem::path& data, const std::filesystem::path& group_spec);
/// Writes the data CSV (features then responses) and the group-spec JSON.
void save_csv(const Dataset& d, const std::filesystem::path& data,
              const std::filesystem::path& group_spec);

Dataset center_responses(const Dataset& d);
Dataset center_features(const Dataset& d);
/// Subtracts previously recorded means (from a training set) from d.
Dataset apply_centering(const Dataset& d, const Vector& feature_mean, const Vector& response_mean);

/// T_g = L⁻ᵀ with (1/n) X_gᵀ X_g + ridge·I = L Lᵀ.
std::pair<Dataset, WhiteningTransform> whiten_groups(const Dataset& d, double ridge);

/// Gram matrix (1/n) X_gᵀ X_g for a group.
Matrix group_gram(const Dataset& d, Index g);

struct SyntheticConfig {
  std::uint64_t seed = 7;
  Index n = 200;
  std::vector<Index> group_sizes{3, 2, 4, 1, 3};
  std::vector<double> costs{1.0, 2.0, 5.0, 1.0, 10.0};
  Index sparsity = 3;
  double noise_sd = 0.1;
  double correlation = 0.3;
  /// 0 for a single real response; ≥ 2 for one-hot class labels drawn from a
  /// planted linear softmax-style score.
  Index classes = 0;
};

/// Deterministic by seed. Features within a group share a common factor with
/// weight sqrt(correlation).
Dataset generate_synthetic(const SyntheticConfig& cfg);

/// Rows [begin, end) as a new dataset; metadata is copied.
Dataset slice_rows(const Dataset& d, Index begin, Index end);
/// Deterministic shuffled split; the first dataset gets round(n·(1 − test_fraction)) rows.
std::pair<Dataset, Dataset> split_rows(const Dataset& d, double test_fraction, std::uint64_t seed);

}  // namespace anytime
