#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anytime/dataset.hpp"
#include "anytime/glm.hpp"

namespace anytime::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBoundViolation = 3;

enum class Method { CsGOmp, GOmp, CsGOmpSingle, CsGOmpNoWhiten, CsGFr, GFr, Sparse, GlmOmp };

Method parse_method(const std::string& name);  // throws InvalidConfig
std::string method_name(Method m);

struct RunConfig {
  std::string data;        // CSV; empty means "generate from synth settings"
  std::string groups;      // group-spec JSON
  std::string test_data;   // optional held-out CSV with the same group spec
  std::string order;       // order.json for `evaluate`
  double test_fraction = 0.3;
  Method method = Method::CsGOmp;
  double lambda = 0.01;
  double alpha = 0.97;
  std::uint64_t seed = 7;
  std::filesystem::path output = "out";
  double whiten_ridge = 0.0;
  bool center_features = false;
  unsigned threads = 1;
  bool corrupt_selection = false;  // test fixture for verify-bound
  SyntheticConfig synth;
  GlmSpec glm{1, MeanFunction::Softmax, 0.01, 1e-8, 100};
  Index lasso_points = 50;
  double lasso_tol = 1e-6;
};

/// Validates invariants (lambda ≥ 0, alpha ∈ [0, 1], …); throws InvalidConfig.
void validate(const RunConfig& cfg);

/// Overlays a JSON config object onto cfg.
void apply_json(RunConfig& cfg, const std::string& json_text);

int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_sequence(const RunConfig& cfg, std::ostream& log);
int cmd_verify_bound(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point: parses argv (config file then flags, flags
/// win), dispatches and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anytime::cli
