#pragma once

#include "cpt/baselines.hpp"
#include "cpt/classifier.hpp"
#include "cpt/perm.hpp"
#include "cpt/sim.hpp"
#include "cpt/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cpt {

/// Shortest decimal string that parses back to the same double.
std::string format_real(double v);

nlohmann::json to_json(const ClassifierSpec& spec);
/// Accepts either the CLI string form or an object {"family": ..., ...}.
ClassifierSpec classifier_from_json(const nlohmann::json& j);

/// Echo of a statistic spec; the resolved kappa is included when the group
/// sizes are known (l, m > 0).
nlohmann::json to_json(const StatSpec& spec, Eigen::Index treated = 0, Eigen::Index control = 0);
StatSpec stat_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PermutationPlan& plan);

/// Elapsed time is wall-clock and therefore excluded unless asked for, so
/// reruns produce identical bytes.
nlohmann::json to_json(const TestResult& r, bool include_elapsed = false);
nlohmann::json to_json(const ExactResult& r);
nlohmann::json to_json(const LrtResult& r);

std::string histogram_csv(const std::vector<HistogramBin>& bins, bool with_observed);
std::string power_table_csv(const std::vector<PowerRow>& rows);
std::string pvalues_csv(const std::vector<PValueRecord>& records);
std::string roc_csv(const std::string& test, double rho, const std::vector<RocPoint>& points);
std::string rejection_csv(const std::vector<RejectionRow>& rows);

/// Reads p-values from a file: one number per line, or a CSV whose header
/// has a `p_value` or `p` column. Blank lines are skipped.
std::vector<double> read_pvalues(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace cpt
