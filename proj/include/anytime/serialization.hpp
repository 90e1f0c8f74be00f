#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "anytime/dataset.hpp"
#include "anytime/grouplasso.hpp"
#include "anytime/metrics.hpp"
#include "anytime/sequencer.hpp"
#include "anytime/theory.hpp"

namespace anytime {

nlohmann::json to_json(const SequencingResult& r);
SequencingResult result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const WhiteningTransform& t);
WhiteningTransform whitening_from_json(const nlohmann::json& j);

/// `cost,value` lines with a header.
void write_curve_csv(const PerformanceCurve& curve, const std::filesystem::path& path);
PerformanceCurve read_curve_csv(const std::filesystem::path& path);

/// `lambda,active_cost,objective,raw_objective,kkt_violation,active_groups` lines.
void write_lasso_path_csv(const LassoPath& path, const GroupStructure& groups,
                          const std::filesystem::path& file);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace anytime
