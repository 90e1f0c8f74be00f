#include "anytime/serialization.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace anytime {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Index cols_if_empty) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? cols_if_empty : static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw Error(ErrorKind::ParseError, "ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

std::string_view mean_name(MeanFunction f) { return f == MeanFunction::Softmax ? "softmax" : "identity"; }

}  // namespace

json to_json(const SequencingResult& r) {
  json j;
  j["method"] = r.method;
  j["lambda"] = r.lambda;
  j["mean_fn"] = mean_name(r.mean_fn);
  j["n_features"] = r.n_features;
  j["n_responses"] = r.n_responses;
  j["order"] = r.order;
  j["order_names"] = r.order_names;
  j["prefix_costs"] = r.prefix_costs;
  j["prefix_objectives"] = r.prefix_objectives;
  json models = json::array();
  for (const auto& m : r.prefix_models) {
    models.push_back({{"columns", m.columns}, {"weights", matrix_to_json(m.weights)}});
  }
  j["prefix_models"] = std::move(models);
  json scores = json::array();
  for (const auto& step : r.selection_scores) {
    json row = json::array();
    for (double s : step) row.push_back(number_or_null(s));
    scores.push_back(std::move(row));
  }
  j["selection_scores"] = std::move(scores);
  return j;
}

SequencingResult result_from_json(const json& j) {
  try {
    SequencingResult r;
    r.method = j.at("method").get<std::string>();
    r.lambda = j.at("lambda").get<double>();
    r.mean_fn = j.at("mean_fn").get<std::string>() == "softmax" ? MeanFunction::Softmax : MeanFunction::Identity;
    r.n_features = j.at("n_features").get<Index>();
    r.n_responses = j.at("n_responses").get<Index>();
    r.order = j.at("order").get<std::vector<Index>>();
    r.order_names = j.at("order_names").get<std::vector<std::string>>();
    r.prefix_costs = j.at("prefix_costs").get<std::vector<double>>();
    r.prefix_objectives = j.at("prefix_objectives").get<std::vector<double>>();
    for (const auto& m : j.at("prefix_models")) {
      r.prefix_models.push_back({m.at("columns").get<std::vector<Index>>(),
                                 matrix_from_json(m.at("weights"), r.n_responses)});
    }
    if (j.contains("selection_scores")) {
      for (const auto& step : j.at("selection_scores")) {
        std::vector<double> row;
        for (const auto& s : step) row.push_back(s.is_null() ? std::nan("") : s.get<double>());
        r.selection_scores.push_back(std::move(row));
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("sequencing result: ") + e.what());
  }
}

json to_json(const BoundReport& report) {
  json j;
  j["gamma"] = report.gamma;
  j["lambda"] = report.lambda;
  j["order"] = report.order;
  j["violations"] = report.violations();
  j["all_satisfied"] = report.all_satisfied();
  j["slack_tolerance"] = kBoundSlackTolerance;
  json recs = json::array();
  for (const auto& r : report.records) {
    recs.push_back({{"prefix", r.prefix},
                    {"budget", r.budget},
                    {"competitor_cost", r.competitor_cost},
                    {"f_greedy", r.f_greedy},
                    {"f_best_competitor", r.f_best_competitor},
                    {"bound", r.bound},
                    {"satisfied", r.satisfied},
                    {"slack", r.slack}});
  }
  j["records"] = std::move(recs);
  json steps = json::array();
  for (const auto& r : report.step_records) {
    steps.push_back({{"step", r.step},
                     {"competitor_cost", r.competitor_cost},
                     {"lhs", r.lhs},
                     {"rhs", r.rhs},
                     {"satisfied", r.satisfied},
                     {"slack", r.slack}});
  }
  j["step_records"] = std::move(steps);
  return j;
}

json to_json(const WhiteningTransform& t) {
  json groups = json::array();
  for (const auto& m : t.per_group) groups.push_back(matrix_to_json(m));
  return {{"ridge", t.ridge}, {"per_group", groups}};
}

WhiteningTransform whitening_from_json(const json& j) {
  try {
    WhiteningTransform t;
    t.ridge = j.at("ridge").get<double>();
    for (const auto& m : j.at("per_group")) t.per_group.push_back(matrix_from_json(m, 0));
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("whitening transform: ") + e.what());
  }
}

void write_curve_csv(const PerformanceCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "cost,value\n";
  for (const auto& p : curve.points()) out << format_double(p.cost) << ',' << format_double(p.value) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

PerformanceCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<CurvePoint> pts;
  auto parse = [&](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorKind::ParseError, path.string() + ": malformed value '" + std::string(s) + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::ParseError, path.string() + ": expected cost,value");
    const std::string_view view(line);
    pts.push_back({parse(view.substr(0, comma)), parse(view.substr(comma + 1))});
  }
  return PerformanceCurve(std::move(pts));
}

void write_lasso_path_csv(const LassoPath& path, const GroupStructure& groups, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
  out << "lambda,active_cost,objective,raw_objective,kkt_violation,active_groups\n";
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    out << format_double(path.lambdas[k]) << ',' << format_double(path.active_costs[k]) << ','
        << format_double(path.objectives[k]) << ',' << format_double(path.raw_objectives[k]) << ','
        << format_double(path.kkt_violations[k]) << ',';
    for (std::size_t i = 0; i < path.active_groups[k].size(); ++i) {
      out << (i ? ";" : "") << groups[path.active_groups[k][i]].name;
    }
    out << '\n';
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace anytime
