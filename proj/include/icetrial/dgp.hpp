#pragma once

#include "icetrial/estimators.hpp"
#include "icetrial/trial_data.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace icetrial {

enum class Specification { Correct, Misspecified };

// Choice of each component of the simulation design. "Misspecified" means
// the true function is non-linear in X, so the linear-in-X fits are wrong.
struct DgpSpec {
    std::string name = "custom";
    Specification propensity = Specification::Correct;        // e(X)
    Specification outcome = Specification::Correct;           // mu_a(X)
    Specification outcome_sd = Specification::Correct;        // sigma_a
    Specification event_risk = Specification::Correct;        // gamma_a(X) in S_a
    Specification censoring_risk = Specification::Correct;    // delta_a(X) in G_a
    Specification censoring_baseline = Specification::Correct;  // rho_a(t) in G_a
    double horizon = 52.0;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
};

enum class Regime { AllCorrect, EWrong, EGWrong, MuSWrong, AllWrong };

inline constexpr std::array<Regime, 5> kAllRegimes = {Regime::AllCorrect, Regime::EWrong, Regime::EGWrong,
                                                      Regime::MuSWrong, Regime::AllWrong};

std::string_view to_string(Regime r) noexcept;
// Accepts all_correct, e_wrong, e_G_wrong, mu_S_wrong, all_wrong (case-insensitive).
Regime parse_regime(std::string_view name);
DgpSpec regime_spec(Regime r, std::size_t n = 1000, std::uint64_t seed = 0);

using Covariates = std::array<double, 3>;

// The true nuisance functions of a design.
class DgpTruth {
public:
    explicit DgpTruth(DgpSpec spec);

    const DgpSpec& spec() const noexcept { return spec_; }

    double propensity(const Covariates& x) const;
    double outcome_mean(int arm, const Covariates& x) const;
    double outcome_sd(int arm) const;
    double event_risk(int arm, const Covariates& x) const;      // gamma_a(X)
    double censoring_risk(int arm, const Covariates& x) const;  // delta_a(X)

    double event_cumhaz(int arm, double t, const Covariates& x) const;
    double censoring_cumhaz(int arm, double t, const Covariates& x) const;
    double event_survival(int arm, double t, const Covariates& x) const;
    double censoring_survival(int arm, double t, const Covariates& x) const;

    // Inverse-transform draws: the t solving survival(t) = u.
    double event_time(int arm, double u, const Covariates& x) const;
    double censoring_time(int arm, double u, const Covariates& x) const;

    // Integral over [0, followup] of dM_G / (S G) for the true continuous laws.
    double martingale_integral(int arm, double followup, bool censored, const Covariates& x) const;

private:
    // Censoring cumulative hazard at risk 0: c t^shape.
    double censoring_scale(int arm) const;
    double censoring_shape(int arm) const;

    DgpSpec spec_;
};

struct LatentSubject {
    Covariates x{};
    std::array<double, 2> y{};  // Y(0), Y(1)
    std::array<double, 2> t{};  // T(0), T(1)
    std::array<double, 2> c{};  // C(0), C(1)
};

struct SimulatedTrial {
    TrialDataset data;
    std::vector<LatentSubject> latent;
};

// Draws spec.n subjects from the design with seed spec.seed.
SimulatedTrial dgp_generate(const DgpSpec& spec);

struct OracleTau {
    double value = 0.0;  // regression route (lower variance)
    double se = 0.0;
    double potential_value = 0.0, potential_se = 0.0;    // mean of Y(1)1{T(1)>k} - Y(0)1{T(0)>k}
    double regression_value = 0.0, regression_se = 0.0;  // mean of mu_1 S_1(k) - mu_0 S_0(k)
    bool routes_agree = false;                            // within 3 combined SEs
};

OracleTau oracle_tau(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

// True nuisance functions evaluated at the subjects of `d`, for plug-in checks.
NuisanceEvaluation oracle_evaluation(const DgpTruth& truth, const TrialDataset& d);

}  // namespace icetrial
