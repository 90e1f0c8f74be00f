#include "anytime/cli.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "anytime/grouplasso.hpp"
#include "anytime/metrics.hpp"
#include "anytime/parallel.hpp"
#include "anytime/serialization.hpp"
#include "anytime/theory.hpp"

namespace anytime::cli {

using nlohmann::json;

namespace {

const std::map<std::string, Method>& method_table() {
  static const std::map<std::string, Method> table{
      {"cs-g-omp", Method::CsGOmp},         {"g-omp", Method::GOmp},
      {"cs-g-omp-single", Method::CsGOmpSingle}, {"cs-g-omp-nowhiten", Method::CsGOmpNoWhiten},
      {"cs-g-fr", Method::CsGFr},           {"g-fr", Method::GFr},
      {"sparse", Method::Sparse},           {"glm-omp", Method::GlmOmp},
  };
  return table;
}

MeanFunction parse_mean(const std::string& name) {
  if (name == "softmax") return MeanFunction::Softmax;
  if (name == "identity") return MeanFunction::Identity;
  throw Error(ErrorKind::InvalidConfig, "unknown GLM mean function '" + name + "'");
}

std::string mean_name(MeanFunction f) { return f == MeanFunction::Softmax ? "softmax" : "identity"; }

// Centered (and optionally whitened) train/test views plus the statistics
// needed to replay the preprocessing on new data.
struct Prepared {
  Dataset train;
  Dataset test;
  Dataset train_white;
  Dataset test_white;
  WhiteningTransform whitening;
};

Dataset load_or_generate(const RunConfig& cfg) {
  if (!cfg.data.empty()) {
    if (cfg.groups.empty()) throw Error(ErrorKind::InvalidConfig, "--data requires --groups");
    return load_csv(cfg.data, cfg.groups);
  }
  SyntheticConfig synth = cfg.synth;
  synth.seed = cfg.seed;
  return generate_synthetic(synth);
}

Prepared prepare(const RunConfig& cfg, bool split, bool center_y = true) {
  Dataset raw = load_or_generate(cfg);
  Dataset train_raw, test_raw;
  if (!cfg.test_data.empty()) {
    train_raw = std::move(raw);
    test_raw = load_csv(cfg.test_data, cfg.groups);
  } else if (split) {
    std::tie(train_raw, test_raw) = split_rows(raw, cfg.test_fraction, cfg.seed);
  } else {
    train_raw = raw;
    test_raw = std::move(raw);
  }
  Prepared p;
  Dataset train = cfg.center_features ? center_features(train_raw) : train_raw;
  // One-hot class targets stay uncentered so the softmax loss is bounded below.
  p.train = center_y ? center_responses(train) : train;
  p.test = apply_centering(test_raw, p.train.feature_mean, p.train.response_mean);
  auto [white, transform] = whiten_groups(p.train, cfg.whiten_ridge);
  p.train_white = std::move(white);
  p.whitening = std::move(transform);
  p.test_white = p.whitening.apply(p.test);
  return p;
}

SelectionRule rule_for(Method m) {
  switch (m) {
    case Method::GOmp: return SelectionRule::CostInsensitiveL2;
    case Method::CsGOmpSingle: return SelectionRule::CostSensitiveLInf;
    case Method::CsGOmpNoWhiten: return SelectionRule::CostSensitiveMahalanobis;
    default: return SelectionRule::CostSensitiveL2;
  }
}

json glm_to_json(const GlmSpec& s) {
  return {{"p", s.p}, {"mean", mean_name(s.mean_fn)}, {"lambda", s.lambda},
          {"newton_tol", s.newton_tol}, {"newton_max_iter", s.newton_max_iter}};
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

template <class T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

Method parse_method(const std::string& name) {
  const auto& table = method_table();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorKind::InvalidConfig, "unknown method '" + name + "'");
  return it->second;
}

std::string method_name(Method m) {
  for (const auto& [name, value] : method_table())
    if (value == m) return name;
  return "unknown";
}

void validate(const RunConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw Error(ErrorKind::InvalidConfig, "lambda must be >= 0");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in [0, 1]");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "test_fraction must lie in (0, 1)");
  }
  if (!(cfg.whiten_ridge >= 0.0)) throw Error(ErrorKind::InvalidConfig, "whiten_ridge must be >= 0");
  if (cfg.lasso_points < 2) throw Error(ErrorKind::InvalidConfig, "lasso points must be at least 2");
  if (!(cfg.lasso_tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "lasso tol must be positive");
  if (cfg.method == Method::Sparse && !(cfg.lambda >= 0.0)) throw Error(ErrorKind::InvalidConfig, "bad lambda");
  anytime::validate(cfg.glm);
}

void apply_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be a JSON object");
  static const std::vector<std::string> known{
      "data", "groups", "test_data", "order", "test_fraction", "method", "lambda", "alpha", "seed",
      "output", "whiten_ridge", "center_features", "threads", "synth", "glm", "lasso"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
  try {
    read_if(j, "data", cfg.data);
    read_if(j, "groups", cfg.groups);
    read_if(j, "test_data", cfg.test_data);
    read_if(j, "order", cfg.order);
    read_if(j, "test_fraction", cfg.test_fraction);
    if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
    read_if(j, "lambda", cfg.lambda);
    read_if(j, "alpha", cfg.alpha);
    read_if(j, "seed", cfg.seed);
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    read_if(j, "whiten_ridge", cfg.whiten_ridge);
    read_if(j, "center_features", cfg.center_features);
    read_if(j, "threads", cfg.threads);
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      read_if(s, "n", cfg.synth.n);
      read_if(s, "group_sizes", cfg.synth.group_sizes);
      read_if(s, "costs", cfg.synth.costs);
      read_if(s, "sparsity", cfg.synth.sparsity);
      read_if(s, "noise_sd", cfg.synth.noise_sd);
      read_if(s, "correlation", cfg.synth.correlation);
      read_if(s, "classes", cfg.synth.classes);
    }
    if (j.contains("glm")) {
      const json& g = j.at("glm");
      if (g.contains("mean")) cfg.glm.mean_fn = parse_mean(g.at("mean").get<std::string>());
      read_if(g, "lambda", cfg.glm.lambda);
      read_if(g, "newton_tol", cfg.glm.newton_tol);
      read_if(g, "newton_max_iter", cfg.glm.newton_max_iter);
    }
    if (j.contains("lasso")) {
      read_if(j.at("lasso"), "n_points", cfg.lasso_points);
      read_if(j.at("lasso"), "tol", cfg.lasso_tol);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  SyntheticConfig synth = cfg.synth;
  synth.seed = cfg.seed;
  const Dataset d = generate_synthetic(synth);
  std::filesystem::create_directories(cfg.output);
  save_csv(d, cfg.output / "data.csv", cfg.output / "groups.json");
  log << "wrote " << (cfg.output / "data.csv").string() << " and " << (cfg.output / "groups.json").string()
      << " (n = " << d.n() << ", D = " << d.dim() << ", J = " << d.num_groups() << ")\n";
  return kExitOk;
}

int cmd_sequence(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  const bool softmax = cfg.method == Method::GlmOmp && cfg.glm.mean_fn == MeanFunction::Softmax;
  const Prepared p = prepare(cfg, true, !softmax);
  const bool raw_view = cfg.method == Method::CsGOmpNoWhiten;
  const Dataset& train = raw_view ? p.train : p.train_white;
  const Dataset& test = raw_view ? p.test : p.test_white;

  GlmSpec glm = cfg.glm;
  glm.p = train.responses();

  const auto start = std::chrono::steady_clock::now();
  SequencingResult result;
  LassoPath path;
  double eval_lambda = cfg.lambda;
  switch (cfg.method) {
    case Method::CsGFr:
    case Method::GFr:
      result = sequence_fr(train, cfg.lambda, cfg.method == Method::CsGFr);
      break;
    case Method::Sparse:
      path = lasso_path(train, cfg.lasso_points, cfg.lambda, LassoOptions{cfg.lasso_tol});
      result = sequencing_from_path(path, train, cfg.lambda);
      break;
    case Method::GlmOmp:
      result = sequence_omp_glm(train, glm);
      eval_lambda = glm.lambda;
      break;
    default:
      result = sequence_omp(train, cfg.lambda, rule_for(cfg.method));
      break;
  }
  const double total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Stopping cost and normalizer come from the cost-sensitive OMP training
  // curve; the GLM run is its own reference since its objective is a loss.
  const PerformanceCurve train_curve = curve_from_result(result, train, eval_lambda);
  const PerformanceCurve test_curve = curve_from_result(result, test, eval_lambda);
  PerformanceCurve reference = train_curve;
  std::string reference_method = method_name(cfg.method);
  if (cfg.method != Method::GlmOmp && cfg.method != Method::CsGOmp) {
    const SequencingResult ref = sequence_omp(p.train_white, cfg.lambda, SelectionRule::CostSensitiveL2);
    reference = curve_from_result(ref, p.train_white, cfg.lambda);
    reference_method = "cs-g-omp";
  }
  const double stop_cost = alpha_stopping_cost(reference, cfg.alpha);
  const double final_objective = reference.final_value();
  auto alpha_t = [&](const PerformanceCurve& c) { return stop_cost == 0.0 ? 0.0 : timeliness(c, stop_cost, final_objective); };

  std::filesystem::create_directories(cfg.output);
  json order;
  order["result"] = to_json(result);
  order["preprocessing"] = {{"feature_mean", vector_to_json(p.train.feature_mean)},
                            {"response_mean", vector_to_json(p.train.response_mean)},
                            {"whitened", !raw_view},
                            {"whitening", to_json(p.whitening)}};
  order["reference"] = {{"method", reference_method}, {"alpha", cfg.alpha},
                        {"stop_cost", stop_cost}, {"final_objective", final_objective}};
  order["eval_lambda"] = eval_lambda;
  if (cfg.method == Method::GlmOmp) order["glm"] = glm_to_json(glm);
  write_json(order, cfg.output / "order.json");
  write_curve_csv(train_curve, cfg.output / "curve_train.csv");
  write_curve_csv(test_curve, cfg.output / "curve_test.csv");

  json report;
  report["method"] = method_name(cfg.method);
  report["alpha"] = cfg.alpha;
  report["stop_cost"] = stop_cost;
  report["timeliness"] = alpha_t(test_curve);
  report["timeliness_train"] = alpha_t(train_curve);
  report["final_objective"] = final_objective;
  report["reference_method"] = reference_method;
  report["lambda"] = eval_lambda;
  report["n_train"] = train.n();
  report["n_test"] = test.n();
  report["num_groups"] = train.num_groups();
  report["total_cost"] = train.structure.total_cost();
  report["plateau_alpha"] = plateau_alpha(reference);
  if (cfg.method != Method::Sparse && !result.order.empty()) {
    const SequencingResult oracle = oracle_reorder(result);
    report["oracle_timeliness_train"] =
        alpha_t(PerformanceCurve::from_prefixes(oracle.prefix_costs, oracle.prefix_objectives));
  }
  if (cfg.method == Method::Sparse) {
    write_lasso_path_csv(path, train.structure, cfg.output / "lasso_path.csv");
    report["lasso_path"] = "lasso_path.csv";
  }
  if (cfg.method == Method::GlmOmp && glm.mean_fn == MeanFunction::Softmax) {
    const std::vector<double> labels = labels_from_one_hot(test.y);
    json acc = json::array();
    for (const auto& m : result.prefix_models) acc.push_back(accuracy(test.columns_x(m.columns) * m.weights, labels));
    report["test_accuracy"] = acc;
  }
  report["step_seconds"] = result.step_seconds;
  report["total_seconds"] = total_seconds;
  write_json(report, cfg.output / "report.json");

  log << method_name(cfg.method) << ": " << result.order.size() << " groups, alpha = " << cfg.alpha
      << ", stop cost = " << stop_cost << ", test timeliness = " << report["timeliness"].get<double>() << "\n";
  return kExitOk;
}

int cmd_verify_bound(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  if (cfg.data.empty() && static_cast<Index>(cfg.synth.group_sizes.size()) > kMaxEnumeratedGroups) {
    throw Error(ErrorKind::TooManyGroups, std::to_string(cfg.synth.group_sizes.size()) +
                                              " groups exceed the enumeration limit of " +
                                              std::to_string(kMaxEnumeratedGroups));
  }
  const Prepared p = prepare(cfg, false);
  SequencerOptions opts;
  opts.invert_selection = cfg.corrupt_selection;
  const BoundReport report = check_theorem_bound(p.train_white, cfg.lambda, SelectionRule::CostSensitiveL2, opts);
  std::filesystem::create_directories(cfg.output);
  write_json(to_json(report), cfg.output / "bound_report.json");
  log << "gamma = " << report.gamma << ", " << report.records.size() << " bound records, "
      << report.step_records.size() << " step records, " << report.violations() << " violations\n";
  return report.all_satisfied() ? kExitOk : kExitBoundViolation;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  const std::filesystem::path order_path = cfg.order.empty() ? cfg.output / "order.json" : std::filesystem::path(cfg.order);
  const json order = read_json(order_path);
  SequencingResult result;
  Vector feature_mean, response_mean;
  bool whitened = false;
  WhiteningTransform whitening;
  double stop_cost = 0.0, final_objective = 0.0, alpha = 0.0, eval_lambda = 0.0;
  try {
    result = result_from_json(order.at("result"));
    const json& pre = order.at("preprocessing");
    feature_mean = vector_from_json(pre.at("feature_mean"));
    response_mean = vector_from_json(pre.at("response_mean"));
    whitened = pre.at("whitened").get<bool>();
    whitening = whitening_from_json(pre.at("whitening"));
    const json& ref = order.at("reference");
    stop_cost = ref.at("stop_cost").get<double>();
    final_objective = ref.at("final_objective").get<double>();
    alpha = ref.at("alpha").get<double>();
    eval_lambda = order.at("eval_lambda").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, order_path.string() + ": " + e.what());
  }

  Dataset d = load_or_generate(cfg);
  if (d.dim() != result.n_features) {
    throw Error(ErrorKind::ColumnMismatch, "dataset has " + std::to_string(d.dim()) + " features, order expects " +
                                               std::to_string(result.n_features));
  }
  d = apply_centering(d, feature_mean, response_mean);
  if (whitened) d = whitening.apply(d);
  const PerformanceCurve curve = curve_from_result(result, d, eval_lambda);

  std::filesystem::create_directories(cfg.output);
  write_curve_csv(curve, cfg.output / "curve_eval.csv");
  json metrics;
  metrics["method"] = result.method;
  metrics["alpha"] = alpha;
  metrics["stop_cost"] = stop_cost;
  metrics["timeliness"] = stop_cost == 0.0 ? 0.0 : timeliness(curve, stop_cost, final_objective);
  metrics["final_objective"] = final_objective;
  write_json(metrics, cfg.output / "metrics.json");
  log << "evaluated " << result.prefix_models.size() << " prefixes; timeliness = "
      << metrics["timeliness"].get<double>() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-sensitive feature-group sequencing for anytime linear prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, data, groups, test_data, order, method, output, glm_mean;
  double test_fraction = 0, lambda = 0, alpha = 0, whiten_ridge = 0, noise_sd = 0, correlation = 0;
  double glm_lambda = 0, newton_tol = 0, lasso_tol = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Index n = 0, sparsity = 0, classes = 0, lasso_points = 0;
  int newton_max_iter = 0;
  std::vector<Index> group_sizes;
  std::vector<double> costs;
  bool center = false, corrupt = false;

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  auto add = [&](const std::string& flag, auto& target, const std::string& help, auto&& assign) {
    CLI::Option* opt = app.add_option(flag, target, help);
    overrides.emplace_back(opt, assign);
    return opt;
  };

  app.add_option("--config", config_path, "JSON run configuration");
  add("--data", data, "data CSV", [&](RunConfig& c) { c.data = data; });
  add("--groups", groups, "group-spec JSON", [&](RunConfig& c) { c.groups = groups; });
  add("--test-data", test_data, "held-out CSV", [&](RunConfig& c) { c.test_data = test_data; });
  add("--order", order, "order.json to evaluate", [&](RunConfig& c) { c.order = order; });
  add("--test-fraction", test_fraction, "held-out fraction when no test data", [&](RunConfig& c) { c.test_fraction = test_fraction; });
  add("--method", method, "sequencing method", [&](RunConfig& c) { c.method = parse_method(method); });
  add("--lambda", lambda, "ridge regularization", [&](RunConfig& c) { c.lambda = lambda; });
  add("--alpha", alpha, "stopping fraction for timeliness", [&](RunConfig& c) { c.alpha = alpha; });
  add("--seed", seed, "random seed", [&](RunConfig& c) { c.seed = seed; });
  add("-o,--output", output, "output directory", [&](RunConfig& c) { c.output = output; });
  add("--whiten-ridge", whiten_ridge, "ridge added before whitening", [&](RunConfig& c) { c.whiten_ridge = whiten_ridge; });
  add("--threads", threads, "worker thread cap", [&](RunConfig& c) { c.threads = threads; });
  add("--n", n, "synthetic sample count", [&](RunConfig& c) { c.synth.n = n; });
  add("--group-sizes", group_sizes, "synthetic group sizes", [&](RunConfig& c) { c.synth.group_sizes = group_sizes; })
      ->delimiter(',');
  add("--costs", costs, "synthetic group costs", [&](RunConfig& c) { c.synth.costs = costs; })->delimiter(',');
  add("--sparsity", sparsity, "groups carrying signal", [&](RunConfig& c) { c.synth.sparsity = sparsity; });
  add("--noise-sd", noise_sd, "response noise", [&](RunConfig& c) { c.synth.noise_sd = noise_sd; });
  add("--correlation", correlation, "within-group correlation", [&](RunConfig& c) { c.synth.correlation = correlation; });
  add("--classes", classes, "one-hot classes (0 = regression)", [&](RunConfig& c) { c.synth.classes = classes; });
  add("--glm-mean", glm_mean, "identity or softmax", [&](RunConfig& c) { c.glm.mean_fn = parse_mean(glm_mean); });
  add("--glm-lambda", glm_lambda, "GLM regularization", [&](RunConfig& c) { c.glm.lambda = glm_lambda; });
  add("--newton-tol", newton_tol, "GLM gradient tolerance", [&](RunConfig& c) { c.glm.newton_tol = newton_tol; });
  add("--newton-max-iter", newton_max_iter, "GLM Newton iterations", [&](RunConfig& c) { c.glm.newton_max_iter = newton_max_iter; });
  add("--lasso-points", lasso_points, "lasso path grid size", [&](RunConfig& c) { c.lasso_points = lasso_points; });
  add("--lasso-tol", lasso_tol, "lasso KKT tolerance", [&](RunConfig& c) { c.lasso_tol = lasso_tol; });
  CLI::Option* center_opt = app.add_flag("--center-features", center, "center features before whitening");
  CLI::Option* corrupt_opt = app.add_flag("--corrupt-selection", corrupt, "test fixture: invert the greedy choice");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset and group spec");
  CLI::App* sequence = app.add_subcommand("sequence", "run a sequencing method and report timeliness");
  CLI::App* verify = app.add_subcommand("verify-bound", "check the greedy approximation bound exhaustively");
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate an order.json against a dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + config_path);
      apply_json(cfg, std::string(std::istreambuf_iterator<char>(in), {}));
    }
    for (auto& [opt, assign] : overrides)
      if (opt->count() > 0) assign(cfg);
    if (center_opt->count() > 0) cfg.center_features = center;
    if (corrupt_opt->count() > 0) cfg.corrupt_selection = corrupt;

    if (synth->parsed()) return cmd_synth(cfg, out);
    if (sequence->parsed()) return cmd_sequence(cfg, out);
    if (verify->parsed()) return cmd_verify_bound(cfg, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out);
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidConfig:
      case ErrorKind::TooManyGroups:
        return kExitConfig;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace anytime::cli
