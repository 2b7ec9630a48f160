#pragma once

#include "icetrial/estimators.hpp"
#include "icetrial/nuisance.hpp"
#include "icetrial/trial_data.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace icetrial {

struct BootstrapOptions {
    int replicates = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    NuisanceConfig nuisance;
    EstimatorOptions estimator;
    double max_failed_fraction = 0.10;
};

struct BootstrapResult {
    EstimatorKind kind = EstimatorKind::Out;
    double point = 0.0;
    double se = 0.0;
    double ci_lower = 0.0, ci_upper = 0.0;                  // point -/+ 1.96 se
    double percentile_lower = 0.0, percentile_upper = 0.0;  // 2.5% / 97.5% replicate quantiles
    double p_value = 1.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    int n_failed_replicates = 0;
};

// Per-replicate point estimates in the order of `kinds`; an empty entry marks
// a replicate whose resample or nuisance fit failed.
struct BootstrapReplicates {
    std::vector<EstimatorKind> kinds;
    std::vector<std::optional<std::vector<double>>> points;
    int failed = 0;
};

// Row indices of bootstrap replicate `replicate`.
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate);

// Resample, refit the full nuisance set, and re-estimate each kind, B times.
// All kinds share the resample and the refitted nuisances of a replicate.
BootstrapReplicates bootstrap_replicates(const TrialDataset& d, std::span<const EstimatorKind> kinds,
                                         const BootstrapOptions& options);

// Throws FitError when more than options.max_failed_fraction of replicates failed.
std::vector<BootstrapResult> summarize_bootstrap(std::span<const double> points, const BootstrapReplicates& reps,
                                                 const BootstrapOptions& options);

// Point estimates on `d` plus bootstrap inference.
std::vector<BootstrapResult> bootstrap(const TrialDataset& d, std::span<const EstimatorKind> kinds,
                                       const BootstrapOptions& options);

// Two-sided normal p-value 2 Phi(-|point| / se); with se = 0 it is 1 for a
// zero point and 0 otherwise.
double normal_p_value(double point, double se);

// Plug-in standard error sqrt(n^-1 * n^-1 sum D_i^2) from centered EIF values.
double eif_variance(std::span<const double> centered_eif);
double eif_variance(const TrialDataset& d, const NuisanceSet& ns, const EstimateReport& report);

struct DiagnosticReport {
    double d_aug_ipw = 0.0, se_aug_ipw = 0.0;
    double d_aug_out = 0.0, se_aug_out = 0.0;
    double d_eif_aug = 0.0, se_eif_aug = 0.0;
    int replicates = 0;
    int n_failed_replicates = 0;
};

// Builds the report from point estimates and joint replicates that contain
// Out, Ipw, Aug and Eif.
DiagnosticReport diagnostics_from_replicates(double out, double ipw, double aug, double eif,
                                             const BootstrapReplicates& reps, const BootstrapOptions& options);

DiagnosticReport pairwise_diagnostics(const TrialDataset& d, const NuisanceSet& ns, const BootstrapOptions& options);

}  // namespace icetrial
