#pragma once

#include "icetrial/dgp.hpp"
#include "icetrial/estimators.hpp"
#include "icetrial/inference.hpp"
#include "icetrial/monte_carlo.hpp"
#include "icetrial/nuisance.hpp"

#include "json.hpp"

#include <optional>
#include <span>
#include <string>

namespace icetrial {

using Json = nlohmann::ordered_json;

Json to_json(const LinearPredictorModel& m);
Json to_json(const CoxSurvivalModel& m);
Json to_json(const NuisanceSet& ns);
NuisanceSet nuisance_set_from_json(const Json& j);

Json to_json(const EstimateReport& r, bool with_contributions = false);
Json to_json(const BootstrapResult& r);
Json to_json(const DiagnosticReport& r);
Json to_json(const DgpSpec& s);
Json to_json(const MonteCarloSummary& s);

// "%.6g"; empty for nullopt or NaN.
std::string format_tsv_number(std::optional<double> x);

// One row per estimator: estimator, point, se, p_value, ci_lower, ci_upper,
// plugin_se. `results` may be empty (point-only mode).
struct AnalysisRow {
    std::string estimator;
    double point = 0.0;
    std::optional<double> se, p_value, ci_lower, ci_upper, plugin_se;
};
std::string analysis_tsv(std::span<const AnalysisRow> rows);

// Table-S2 shaped: one row per regime, <estimator>_{bias,sd,cr} columns.
std::string monte_carlo_tsv(std::span<const MonteCarloSummary> summaries);

}  // namespace icetrial
