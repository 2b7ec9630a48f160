#pragma once

#include "icetrial/glm.hpp"
#include "icetrial/trial_data.hpp"

#include <Eigen/Core>

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace icetrial {

// Which observed event counts as the failure in a Cox fit. Everything else,
// including Completed records at k, is right-censored.
enum class EventRole {
    TrtRelated,    // S_a(t|X)
    TrtUnrelated,  // G_a(t|X)
    AnyIce,        // pooled ICE survival used by the naive hypothetical strategy
};

std::string_view to_string(EventRole role) noexcept;

inline constexpr double kSurvivalFloor = 1e-6;

struct CoxConvergence {
    int iterations = 0;
    double score_norm = 0.0;
    double log_partial_likelihood = 0.0;
};

// Proportional-hazards survival model with a Breslow baseline step function.
struct CoxSurvivalModel {
    Eigen::VectorXd coefficients;             // length p, no intercept
    std::vector<double> baseline_times;       // strictly increasing, in (0, k]
    std::vector<double> baseline_increments;  // dLambda0 at each baseline time
    std::vector<double> baseline_cumulative;  // running sums of the increments
    int arm = 0;
    EventRole role = EventRole::TrtRelated;
    double horizon = 0.0;
    CoxConvergence convergence;

    double relative_risk(std::span<const double> x) const;
    // Lambda0(t) summing increments at times <= t.
    double cumulative_baseline(double t) const;
    // Lambda0(t-) summing increments at times < t.
    double cumulative_baseline_before(double t) const;
};

// Model with zero hazard (survival identically 1); the nonparametric MLE when
// the role has no events.
CoxSurvivalModel null_cox_model(std::size_t p, int arm, EventRole role, double horizon);

// Breslow-tie partial likelihood fit on arbitrary right-censored data.
CoxSurvivalModel fit_cox(const Eigen::Ref<const RowMatrix>& covariates, std::span<const double> time,
                         std::span<const int> event, double horizon, const SolverOptions& options = {});

// Fit on arm `arm` of `d` with the event defined by `role`. Throws FitError
// ("no events for role") when the arm has no such event.
CoxSurvivalModel fit_cox(const TrialDataset& d, int arm, EventRole role, const SolverOptions& options = {});

// exp(-Lambda0(t) exp(x'b)), floored at kSurvivalFloor; t must lie in [0, k].
double predict_survival(const CoxSurvivalModel& m, double t, std::span<const double> x);
// Left limit S(t-|x); same floor and domain.
double predict_survival_before(const CoxSurvivalModel& m, double t, std::span<const double> x);

// (t_j, dLambda0(t_j) exp(x'b)) for every baseline time t_j <= k.
std::vector<std::pair<double, double>> hazard_increments(const CoxSurvivalModel& m, std::span<const double> x);

}  // namespace icetrial
