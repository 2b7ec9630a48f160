#pragma once

#include "icetrial/dgp.hpp"
#include "icetrial/estimators.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace icetrial {

struct MonteCarloOptions {
    int reps = 200;
    std::size_t n = 1000;
    int bootstrap = 100;  // 0 disables coverage
    std::uint64_t seed = 20250101;
    unsigned threads = 1;
    bool adhoc = false;  // add NRI and HS point estimates
    // Oracle tau; defaults to the pinned value for presets, otherwise computed.
    std::optional<double> oracle_value;
    std::size_t oracle_draws = 2'000'000;
    double max_failed_fraction = 0.05;
};

struct EstimatorSummary {
    EstimatorKind kind = EstimatorKind::Out;
    int n_valid = 0;
    double mean = 0.0;
    double bias = 0.0;   // mean - oracle tau
    double sd = 0.0;     // across replicates
    double mc_se = 0.0;  // sd / sqrt(n_valid)
    std::optional<double> coverage;  // share of point -/+ 1.96 se_boot intervals covering tau
};

struct MonteCarloSummary {
    DgpSpec spec;
    MonteCarloOptions options;
    double oracle_value = 0.0;
    double oracle_se = 0.0;
    int failed_replicates = 0;
    std::vector<EstimatorKind> kinds;
    std::vector<EstimatorSummary> estimators;
    // replicate_points[r][j] is kinds[j] on replicate r; empty when it failed.
    std::vector<std::vector<double>> replicate_points;
    std::vector<std::vector<double>> replicate_se;
    double elapsed_seconds = 0.0;  // wall clock, not serialized

    const EstimatorSummary& at(EstimatorKind k) const;
};

// Oracle tau pinned for each preset from a 10^8-draw regression-route run.
struct PinnedOracle {
    double value;
    double se;
};
PinnedOracle pinned_oracle(Regime r);

// Replicate r draws its dataset with seed derive_seed(seed, r) and its
// bootstrap with a seed derived from that. Throws FitError when more than
// max_failed_fraction of replicates fail.
MonteCarloSummary run_monte_carlo(const DgpSpec& spec, const MonteCarloOptions& options);
MonteCarloSummary run_monte_carlo(Regime regime, const MonteCarloOptions& options);

}  // namespace icetrial
