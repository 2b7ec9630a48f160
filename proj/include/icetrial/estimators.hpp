#pragma once

#include "icetrial/nuisance.hpp"
#include "icetrial/trial_data.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace icetrial {

enum class EstimatorKind { Out, Ipw, Aug, Eif, McIpw, Nri, Hs };

inline constexpr std::array<EstimatorKind, 7> kAllEstimators = {
    EstimatorKind::Out, EstimatorKind::Ipw, EstimatorKind::Aug, EstimatorKind::Eif,
    EstimatorKind::McIpw, EstimatorKind::Nri, EstimatorKind::Hs};
inline constexpr std::array<EstimatorKind, 4> kProposedEstimators = {
    EstimatorKind::Out, EstimatorKind::Ipw, EstimatorKind::Aug, EstimatorKind::Eif};

std::string_view to_string(EstimatorKind kind) noexcept;
// Accepts "out", "ipw", "aug", "eif", "mcipw", "nri", "hs"; throws std::invalid_argument.
EstimatorKind parse_estimator_kind(std::string_view name);

struct EstimatorOptions {
    // Upper bound on the inverse weights 1/{e G}; none by default.
    std::optional<double> weight_cap;
};

// Nuisance functions evaluated at each subject, the only input the estimator
// formulas need. Built from a fitted NuisanceSet by `evaluate_nuisances`, or
// directly from known truth (simulation oracles, tests).
struct NuisanceEvaluation {
    std::vector<double> propensity;    // e(X_i)
    std::vector<double> mu_s1;         // {mu_1(X_i) - v} S_1(k|X_i)
    std::vector<double> mu_s0;         // {mu_0(X_i) - v} S_0(k|X_i)
    std::vector<double> censoring_k;   // G_{A_i}(k|X_i)
    std::vector<double> martingale;    // censoring-martingale integral for the subject's own arm
    std::vector<double> pooled_ice_k;  // H_{A_i}(k|X_i); empty unless pooled models are present
    std::vector<std::uint8_t> at_floor;  // propensity clamp or G(k) floor reached
};

// Martingale integral over the g-model event times t_j <= T_i:
//   -sum lambda_g(t_j|X) / {S(t_j-|X) G(t_j-|X)} + 1(Delta = 0) / {S(T_i-|X) G(T_i-|X)}.
double martingale_integral(const SubjectRecord& r, const CoxSurvivalModel& s, const CoxSurvivalModel& g);

NuisanceEvaluation evaluate_nuisances(const TrialDataset& d, const NuisanceSet& ns, bool with_martingale = true);

struct EstimateReport {
    EstimatorKind kind = EstimatorKind::Out;
    double point = 0.0;
    std::pair<double, double> arm_means;  // (treated, control)
    // Point-forming terms: point = mean(contributions), except for Eif where
    // they are the estimated influence-function values centered at the point.
    std::vector<double> contributions;
    std::optional<double> augmentation_mean;  // Eif only
    std::size_t floored_weights = 0;          // contributing subjects with a weight at a floor
    std::size_t capped_weights = 0;
};

EstimateReport estimate(EstimatorKind kind, const TrialDataset& d, const NuisanceEvaluation& ev,
                        const EstimatorOptions& options = {});
std::vector<EstimateReport> estimate_all(std::span<const EstimatorKind> kinds, const TrialDataset& d,
                                         const NuisanceSet& ns, const EstimatorOptions& options = {});

EstimateReport estimate_out(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_ipw(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_aug(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_eif(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_mc_ipw(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_nri(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
// Fits the pooled any-ICE models when `ns` does not carry them.
EstimateReport estimate_hs(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o = {});
EstimateReport estimate_hs(const TrialDataset& d, const NuisanceSet& ns,
                           const std::array<CoxSurvivalModel, 2>& pooled_ice_model,
                           const EstimatorOptions& o = {});

}  // namespace icetrial
