#include "anytime/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace anytime {

using nlohmann::json;

GroupStructure::GroupStructure(std::vector<FeatureGroup> groups, Index n_features)
    : groups_(std::move(groups)), n_features_(n_features) {
  std::vector<int> owner(static_cast<std::size_t>(n_features), -1);
  std::set<std::string> names;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const FeatureGroup& grp = groups_[g];
    if (!names.insert(grp.name).second) {
      throw Error(ErrorKind::SpecError, "duplicate group name '" + grp.name + "'");
    }
    if (!(grp.cost > 0.0) || !std::isfinite(grp.cost)) {
      throw Error(ErrorKind::SpecError, "group '" + grp.name + "' has nonpositive cost");
    }
    if (grp.columns.empty()) {
      throw Error(ErrorKind::SpecError, "group '" + grp.name + "' has no columns");
    }
    for (Index c : grp.columns) {
      if (c < 0 || c >= n_features) {
        throw Error(ErrorKind::SpecError,
                    "group '" + grp.name + "' references column " + std::to_string(c) +
                        " outside [0, " + std::to_string(n_features) + ")");
      }
      int& slot = owner[static_cast<std::size_t>(c)];
      if (slot >= 0) {
        throw Error(ErrorKind::SpecError, "column " + std::to_string(c) + " is assigned to both '" +
                                              groups_[static_cast<std::size_t>(slot)].name +
                                              "' and '" + grp.name + "'");
      }
      slot = static_cast<int>(g);
    }
  }
  for (std::size_t c = 0; c < owner.size(); ++c) {
    if (owner[c] < 0) {
      throw Error(ErrorKind::SpecError, "column " + std::to_string(c) + " is not assigned to any group");
    }
  }
}

double GroupStructure::total_cost() const {
  double total = 0.0;
  for (const auto& g : groups_) total += g.cost;
  return total;
}

Index GroupStructure::find(const std::string& name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (groups_[g].name == name) return static_cast<Index>(g);
  return -1;
}

std::vector<Index> GroupStructure::columns_of(const std::vector<Index>& group_ids) const {
  std::vector<Index> cols;
  for (Index g : group_ids) {
    const auto& c = (*this)[g].columns;
    cols.insert(cols.end(), c.begin(), c.end());
  }
  return cols;
}

Matrix Dataset::group_x(Index g) const { return columns_x(structure[g].columns); }

Matrix Dataset::columns_x(const std::vector<Index>& columns) const {
  Matrix out(x.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Index>(j)) = x.col(columns[j]);
  return out;
}

Dataset make_dataset(Matrix x, Matrix y, GroupStructure structure) {
  if (y.rows() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "x has " + std::to_string(x.rows()) +
                                                  " rows but y has " + std::to_string(y.rows()));
  }
  if (structure.num_features() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "group structure covers " +
                                                  std::to_string(structure.num_features()) +
                                                  " columns, x has " + std::to_string(x.cols()));
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "dataset contains non-finite values");
  }
  Dataset d;
  d.feature_names.reserve(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  for (Index p = 0; p < y.cols(); ++p)
    d.response_names.push_back(y.cols() == 1 ? std::string("y") : "y" + std::to_string(p));
  d.response_mean = Vector::Zero(y.cols());
  d.feature_mean = Vector::Zero(x.cols());
  d.x = std::move(x);
  d.y = std::move(y);
  d.structure = std::move(structure);
  return d;
}

// ---------------------------------------------------------------------------
// CSV + group spec

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty() || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError, "malformed numeric cell '" + cell + "' at row " +
                                           std::to_string(row) + ", column " + std::to_string(col));
  }
  return v;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SpecError, path.string() + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Dataset load_csv(const std::filesystem::path& data, const std::filesystem::path& group_spec) {
  std::ifstream in(data);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + data.string());
  const json spec = read_json_file(group_spec);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, data.string() + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> header_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!header_index.emplace(header[c], c).second) {
      throw Error(ErrorKind::ParseError, "duplicate column name '" + header[c] + "'");
    }
  }

  std::vector<std::string> response_names;
  try {
    if (spec.contains("response_columns")) {
      response_names = spec.at("response_columns").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SpecError, std::string("response_columns: ") + e.what());
  }
  std::set<std::string> response_set(response_names.begin(), response_names.end());
  for (const auto& r : response_names) {
    if (!header_index.count(r)) throw Error(ErrorKind::SpecError, "response column '" + r + "' not in CSV");
  }

  // Feature columns keep their CSV order.
  std::vector<std::size_t> feature_csv_cols;
  std::vector<std::string> feature_names;
  std::map<std::string, Index> feature_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (response_set.count(header[c])) continue;
    feature_index[header[c]] = static_cast<Index>(feature_csv_cols.size());
    feature_csv_cols.push_back(c);
    feature_names.push_back(header[c]);
  }

  std::vector<FeatureGroup> groups;
  try {
    for (const auto& g : spec.at("groups")) {
      FeatureGroup grp;
      grp.name = g.at("name").get<std::string>();
      grp.cost = g.at("cost").get<double>();
      if (!(grp.cost > 0.0)) {
        throw Error(ErrorKind::SpecError, "group '" + grp.name + "' has nonpositive cost");
      }
      for (const auto& col : g.at("columns")) {
        const std::string name = col.get<std::string>();
        auto it = feature_index.find(name);
        if (it == feature_index.end()) {
          throw Error(ErrorKind::SpecError,
                      "group '" + grp.name + "' names unknown feature column '" + name + "'");
        }
        grp.columns.push_back(it->second);
      }
      groups.push_back(std::move(grp));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SpecError, group_spec.string() + ": " + e.what());
  }

  // Validate the partition here so messages can name columns, then build.
  std::vector<int> seen(feature_names.size(), 0);
  for (const auto& g : groups)
    for (Index c : g.columns) ++seen[static_cast<std::size_t>(c)];
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c] == 0) {
      throw Error(ErrorKind::SpecError, "column " + std::to_string(c) + " ('" + feature_names[c] +
                                            "') is not assigned to any group");
    }
    if (seen[c] > 1) {
      throw Error(ErrorKind::SpecError, "column " + std::to_string(c) + " ('" + feature_names[c] +
                                            "') is assigned to more than one group");
    }
  }
  GroupStructure structure(std::move(groups), static_cast<Index>(feature_names.size()));

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row_no) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], row_no, c);
    rows.push_back(std::move(values));
  }

  const Index n = static_cast<Index>(rows.size());
  Matrix x(n, static_cast<Index>(feature_csv_cols.size()));
  Matrix y(n, static_cast<Index>(response_names.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < feature_csv_cols.size(); ++j) x(i, static_cast<Index>(j)) = r[feature_csv_cols[j]];
    for (std::size_t p = 0; p < response_names.size(); ++p)
      y(i, static_cast<Index>(p)) = r[header_index.at(response_names[p])];
  }
  Dataset d = make_dataset(std::move(x), std::move(y), std::move(structure));
  d.feature_names = std::move(feature_names);
  d.response_names = std::move(response_names);
  return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& data,
              const std::filesystem::path& group_spec) {
  std::ofstream out(data);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + data.string());
  bool first = true;
  for (const auto& name : d.feature_names) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  for (const auto& name : d.response_names) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  out << '\n';
  for (Index i = 0; i < d.n(); ++i) {
    first = true;
    for (Index j = 0; j < d.dim(); ++j) {
      out << (first ? "" : ",") << format_double(d.x(i, j));
      first = false;
    }
    for (Index p = 0; p < d.responses(); ++p) {
      out << (first ? "" : ",") << format_double(d.y(i, p));
      first = false;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + data.string());

  json spec;
  spec["response_columns"] = d.response_names;
  spec["groups"] = json::array();
  for (const auto& g : d.structure.groups()) {
    json cols = json::array();
    for (Index c : g.columns) cols.push_back(d.feature_names[static_cast<std::size_t>(c)]);
    spec["groups"].push_back({{"name", g.name}, {"columns", cols}, {"cost", g.cost}});
  }
  std::ofstream sout(group_spec);
  if (!sout) throw Error(ErrorKind::IoError, "cannot write " + group_spec.string());
  sout << spec.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Preprocessing

Dataset center_responses(const Dataset& d) {
  Dataset out = d;
  if (d.n() == 0) return out;
  const Vector mean = d.y.colwise().mean();
  out.y.rowwise() -= mean.transpose();
  out.response_mean = d.response_mean + mean;
  out.centered = true;
  return out;
}

Dataset center_features(const Dataset& d) {
  Dataset out = d;
  if (d.n() == 0) return out;
  const Vector mean = d.x.colwise().mean();
  out.x.rowwise() -= mean.transpose();
  out.feature_mean = d.feature_mean + mean;
  return out;
}

Dataset apply_centering(const Dataset& d, const Vector& feature_mean, const Vector& response_mean) {
  if (feature_mean.size() != d.dim() || response_mean.size() != d.responses()) {
    throw Error(ErrorKind::ColumnMismatch, "centering vectors do not match dataset shape");
  }
  Dataset out = d;
  out.x.rowwise() -= feature_mean.transpose();
  out.y.rowwise() -= response_mean.transpose();
  out.feature_mean = d.feature_mean + feature_mean;
  out.response_mean = d.response_mean + response_mean;
  out.centered = true;
  return out;
}

Matrix group_gram(const Dataset& d, Index g) {
  const Matrix xg = d.group_x(g);
  Matrix gram = xg.transpose() * xg / static_cast<double>(d.n());
  return 0.5 * (gram + gram.transpose());
}

std::pair<Dataset, WhiteningTransform> whiten_groups(const Dataset& d, double ridge) {
  if (d.whitened) throw Error(ErrorKind::InvalidInput, "dataset is already whitened");
  if (!(ridge >= 0.0)) throw Error(ErrorKind::InvalidInput, "ridge must be nonnegative");
  if (d.n() == 0) throw Error(ErrorKind::InvalidInput, "cannot whiten an empty dataset");
  WhiteningTransform t;
  t.ridge = ridge;
  t.per_group.reserve(static_cast<std::size_t>(d.num_groups()));
  for (Index g = 0; g < d.num_groups(); ++g) {
    Matrix gram = group_gram(d, g);
    gram.diagonal().array() += ridge;
    SpdFactor f;
    try {
      f = spd_factorize(gram);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
      throw Error(ErrorKind::RankDeficientGroup,
                  "group '" + d.structure[g].name + "' has a singular Gram matrix (retry with ridge > 0)");
    }
    const Index m = f.dim();
    // T = L⁻ᵀ: solve Lᵀ T = I.
    Matrix tg = f.lower().transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(m, m));
    t.per_group.push_back(std::move(tg));
  }
  return {t.apply(d), t};
}

Dataset WhiteningTransform::apply(const Dataset& d) const {
  if (static_cast<Index>(per_group.size()) != d.num_groups()) {
    throw Error(ErrorKind::ColumnMismatch, "whitening transform has " + std::to_string(per_group.size()) +
                                               " groups, dataset has " + std::to_string(d.num_groups()));
  }
  Dataset out = d;
  for (Index g = 0; g < d.num_groups(); ++g) {
    const auto& cols = d.structure[g].columns;
    const Matrix& tg = per_group[static_cast<std::size_t>(g)];
    if (tg.rows() != static_cast<Index>(cols.size())) {
      throw Error(ErrorKind::ColumnMismatch, "group '" + d.structure[g].name + "' size differs from transform");
    }
    const Matrix whitened = d.group_x(g) * tg;
    for (std::size_t j = 0; j < cols.size(); ++j) out.x.col(cols[j]) = whitened.col(static_cast<Index>(j));
  }
  out.whitened = true;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  const std::size_t groups = cfg.group_sizes.size();
  if (groups == 0) throw Error(ErrorKind::InvalidConfig, "at least one group is required");
  if (cfg.costs.size() != groups) {
    throw Error(ErrorKind::InvalidConfig, "group_sizes and costs have different lengths");
  }
  if (cfg.sparsity < 0 || static_cast<std::size_t>(cfg.sparsity) > groups) {
    throw Error(ErrorKind::InvalidConfig, "sparsity must lie in [0, number of groups]");
  }
  if (cfg.n < 1) throw Error(ErrorKind::InvalidConfig, "n must be positive");
  if (!(cfg.noise_sd >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise_sd must be nonnegative");
  if (!(cfg.correlation >= 0.0 && cfg.correlation < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "correlation must lie in [0, 1)");
  }
  if (cfg.classes == 1 || cfg.classes < 0) {
    throw Error(ErrorKind::InvalidConfig, "classes must be 0 (regression) or at least 2");
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (cfg.group_sizes[g] < 1) throw Error(ErrorKind::InvalidConfig, "group sizes must be positive");
    if (!(cfg.costs[g] > 0.0)) throw Error(ErrorKind::InvalidConfig, "costs must be positive");
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<FeatureGroup> structure;
  Index dim = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    FeatureGroup grp{"g" + std::to_string(g + 1), {}, cfg.costs[g]};
    for (Index k = 0; k < cfg.group_sizes[g]; ++k) grp.columns.push_back(dim++);
    structure.push_back(std::move(grp));
  }

  const double shared = std::sqrt(cfg.correlation);
  const double own = std::sqrt(1.0 - cfg.correlation);
  Matrix x(cfg.n, dim);
  for (Index i = 0; i < cfg.n; ++i) {
    for (const auto& grp : structure) {
      const double common = normal(rng);
      for (Index c : grp.columns) x(i, c) = shared * common + own * normal(rng);
    }
  }

  std::vector<Index> order(groups);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> active(groups, false);
  for (Index k = 0; k < cfg.sparsity; ++k) active[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

  const Index outputs = cfg.classes >= 2 ? cfg.classes : 1;
  Matrix w_true = Matrix::Zero(dim, outputs);
  for (std::size_t g = 0; g < groups; ++g) {
    if (!active[g]) continue;
    for (Index c : structure[g].columns)
      for (Index p = 0; p < outputs; ++p) w_true(c, p) = normal(rng);
  }

  Matrix signal = x * w_true;
  Matrix y;
  if (cfg.classes >= 2) {
    y = Matrix::Zero(cfg.n, cfg.classes);
    for (Index i = 0; i < cfg.n; ++i) {
      Index best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (Index p = 0; p < cfg.classes; ++p) {
        const double s = signal(i, p) + cfg.noise_sd * normal(rng);
        if (s > best_score) {
          best_score = s;
          best = p;
        }
      }
      y(i, best) = 1.0;
    }
  } else {
    y = signal;
    for (Index i = 0; i < cfg.n; ++i) y(i, 0) += cfg.noise_sd * normal(rng);
  }

  Dataset d = make_dataset(std::move(x), std::move(y), GroupStructure(std::move(structure), dim));
  if (cfg.classes >= 2) {
    d.response_names.clear();
    for (Index p = 0; p < cfg.classes; ++p) d.response_names.push_back("class" + std::to_string(p + 1));
  }
  return d;
}

Dataset slice_rows(const Dataset& d, Index begin, Index end) {
  Dataset out = d;
  out.x = d.x.middleRows(begin, end - begin);
  out.y = d.y.middleRows(begin, end - begin);
  return out;
}

std::pair<Dataset, Dataset> split_rows(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "test_fraction must lie in (0, 1)");
  }
  std::vector<Index> perm(static_cast<std::size_t>(d.n()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Index n_train = static_cast<Index>(std::llround(static_cast<double>(d.n()) * (1.0 - test_fraction)));
  if (n_train < 1 || n_train >= d.n()) throw Error(ErrorKind::InvalidConfig, "split leaves an empty side");

  auto take = [&](Index begin, Index end) {
    Dataset out = d;
    out.x.resize(end - begin, d.dim());
    out.y.resize(end - begin, d.responses());
    for (Index i = begin; i < end; ++i) {
      out.x.row(i - begin) = d.x.row(perm[static_cast<std::size_t>(i)]);
      out.y.row(i - begin) = d.y.row(perm[static_cast<std::size_t>(i)]);
    }
    return out;
  };
  return {take(0, n_train), take(n_train, d.n())};
}

}  // namespace anytime
