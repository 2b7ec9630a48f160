#pragma once

#include "icetrial/cox.hpp"
#include "icetrial/glm.hpp"
#include "icetrial/trial_data.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace icetrial {

struct NuisanceConfig {
    // Randomization probability; replaces the fitted propensity model.
    std::optional<double> known_propensity;
    Link outcome_link = Link::Identity;
    // Also fit the pooled any-ICE survival models used by the HS comparator.
    bool fit_pooled_ice = false;
    SolverOptions solver;
};

// The fitted nuisance components e(X), mu_a(X), S_a(t|X), G_a(t|X).
struct NuisanceSet {
    std::optional<LinearPredictorModel> propensity;  // absent when known_propensity is set
    LinearPredictorModel outcome0, outcome1;
    CoxSurvivalModel s0, s1;  // treatment-related ICE
    CoxSurvivalModel g0, g1;  // treatment-unrelated ICE
    std::optional<std::array<CoxSurvivalModel, 2>> pooled_ice;
    std::optional<double> known_propensity;
    // Models replaced by the zero-hazard model because their arm had no events of that role.
    std::vector<std::string> null_models;

    double propensity_at(std::span<const double> x) const;
    const LinearPredictorModel& outcome(int arm) const { return arm == 1 ? outcome1 : outcome0; }
    const CoxSurvivalModel& event_survival(int arm) const { return arm == 1 ? s1 : s0; }
    const CoxSurvivalModel& censoring_survival(int arm) const { return arm == 1 ? g1 : g0; }
};

// Design matrix [1, X] for the GLM fits.
Eigen::MatrixXd glm_design(const TrialDataset& d);

// fit_cox, or the zero-hazard model when the arm has no events of `role`
// (its name is then appended to `null_models`).
CoxSurvivalModel fit_cox_or_null(const TrialDataset& d, int arm, EventRole role, const SolverOptions& solver = {},
                                 std::vector<std::string>* null_models = nullptr);

// Propensity on all rows, outcome models on Completed rows of each arm, and
// one Cox fit per arm and ICE role. Throws DataError when an arm has no
// Completed record and FitError when a fitter fails.
NuisanceSet fit_nuisance_set(const TrialDataset& d, const NuisanceConfig& config = {});

}  // namespace icetrial
