#include "icetrial/inference.hpp"

#include "icetrial/errors.hpp"
#include "icetrial/parallel.hpp"
#include "icetrial/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icetrial {

namespace {

// Sample standard deviation, accumulated relative to the first value so that
// identical replicates give exactly zero.
double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double ref = x.front();
    double s = 0.0, ss = 0.0;
    for (double v : x) {
        s += v - ref;
        ss += (v - ref) * (v - ref);
    }
    const double m = static_cast<double>(x.size());
    return std::sqrt(std::max(0.0, (ss - s * s / m) / (m - 1.0)));
}

double quantile(std::vector<double> x, double prob) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

void check_failures(const BootstrapReplicates& reps, const BootstrapOptions& options) {
    const auto b = static_cast<double>(reps.points.size());
    if (static_cast<double>(reps.failed) > options.max_failed_fraction * b) {
        throw FitError("bootstrap: " + std::to_string(reps.failed) + " of " + std::to_string(reps.points.size()) +
                       " replicates failed (unstable resampling)");
    }
    if (reps.points.size() - static_cast<std::size_t>(reps.failed) < 2) {
        throw FitError("bootstrap: fewer than two successful replicates");
    }
}

}  // namespace

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
    Rng rng(derive_seed(seed, replicate));
    boost::random::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

BootstrapReplicates bootstrap_replicates(const TrialDataset& d, std::span<const EstimatorKind> kinds,
                                         const BootstrapOptions& options) {
    if (options.replicates < 2) throw std::invalid_argument("bootstrap requires at least 2 replicates");
    BootstrapReplicates out;
    out.kinds.assign(kinds.begin(), kinds.end());
    out.points.resize(static_cast<std::size_t>(options.replicates));
    NuisanceConfig cfg = options.nuisance;
    cfg.fit_pooled_ice = cfg.fit_pooled_ice || std::find(kinds.begin(), kinds.end(), EstimatorKind::Hs) != kinds.end();

    parallel_for(out.points.size(), options.threads, [&](std::size_t r) {
        const auto idx = bootstrap_indices(d.size(), options.seed, r);
        try {
            const TrialDataset resample = d.subset(idx);
            const NuisanceSet ns = fit_nuisance_set(resample, cfg);
            const auto reports = estimate_all(kinds, resample, ns, options.estimator);
            std::vector<double> pts;
            pts.reserve(reports.size());
            for (const auto& rep : reports) pts.push_back(rep.point);
            out.points[r] = std::move(pts);
        } catch (const DataError&) {
        } catch (const FitError&) {
        }
    });
    for (const auto& p : out.points) out.failed += !p.has_value();
    return out;
}

double normal_p_value(double point, double se) {
    if (!(se > 0.0)) return point == 0.0 ? 1.0 : 0.0;
    return boost::math::erfc(std::abs(point) / se / std::sqrt(2.0));
}

std::vector<BootstrapResult> summarize_bootstrap(std::span<const double> points, const BootstrapReplicates& reps,
                                                 const BootstrapOptions& options) {
    if (points.size() != reps.kinds.size()) throw std::invalid_argument("point estimates do not match kinds");
    check_failures(reps, options);
    std::vector<BootstrapResult> out;
    for (std::size_t k = 0; k < reps.kinds.size(); ++k) {
        std::vector<double> values;
        for (const auto& p : reps.points) {
            if (p) values.push_back((*p)[k]);
        }
        BootstrapResult r;
        r.kind = reps.kinds[k];
        r.point = points[k];
        r.se = sample_sd(values);
        r.ci_lower = r.point - 1.96 * r.se;
        r.ci_upper = r.point + 1.96 * r.se;
        r.percentile_lower = quantile(values, 0.025);
        r.percentile_upper = quantile(values, 0.975);
        r.p_value = normal_p_value(r.point, r.se);
        r.replicates = static_cast<int>(reps.points.size());
        r.seed = options.seed;
        r.n_failed_replicates = reps.failed;
        out.push_back(r);
    }
    return out;
}

std::vector<BootstrapResult> bootstrap(const TrialDataset& d, std::span<const EstimatorKind> kinds,
                                       const BootstrapOptions& options) {
    NuisanceConfig cfg = options.nuisance;
    cfg.fit_pooled_ice = cfg.fit_pooled_ice || std::find(kinds.begin(), kinds.end(), EstimatorKind::Hs) != kinds.end();
    const NuisanceSet ns = fit_nuisance_set(d, cfg);
    std::vector<double> points;
    for (const auto& rep : estimate_all(kinds, d, ns, options.estimator)) points.push_back(rep.point);
    return summarize_bootstrap(points, bootstrap_replicates(d, kinds, options), options);
}

double eif_variance(std::span<const double> centered_eif) {
    if (centered_eif.empty()) return 0.0;
    const double n = static_cast<double>(centered_eif.size());
    double ss = 0.0;
    for (double v : centered_eif) ss += v * v;
    return std::sqrt(ss / n / n);
}

double eif_variance(const TrialDataset& d, const NuisanceSet& /*ns*/, const EstimateReport& report) {
    if (report.kind != EstimatorKind::Eif) throw std::invalid_argument("eif_variance requires an Eif report");
    if (report.contributions.size() != d.size()) throw std::invalid_argument("report does not match dataset");
    return eif_variance(report.contributions);
}

DiagnosticReport diagnostics_from_replicates(double out, double ipw, double aug, double eif,
                                             const BootstrapReplicates& reps, const BootstrapOptions& options) {
    auto position = [&](EstimatorKind k) {
        auto it = std::find(reps.kinds.begin(), reps.kinds.end(), k);
        if (it == reps.kinds.end()) throw std::invalid_argument("diagnostics need out, ipw, aug and eif replicates");
        return static_cast<std::size_t>(it - reps.kinds.begin());
    };
    const std::size_t io = position(EstimatorKind::Out), ii = position(EstimatorKind::Ipw),
                      ia = position(EstimatorKind::Aug), ie = position(EstimatorKind::Eif);
    check_failures(reps, options);
    std::vector<double> aug_ipw, aug_out, eif_aug;
    for (const auto& p : reps.points) {
        if (!p) continue;
        aug_ipw.push_back((*p)[ia] - (*p)[ii]);
        aug_out.push_back((*p)[ia] - (*p)[io]);
        eif_aug.push_back((*p)[ie] - (*p)[ia]);
    }
    DiagnosticReport r;
    r.d_aug_ipw = aug - ipw;
    r.d_aug_out = aug - out;
    r.d_eif_aug = eif - aug;
    r.se_aug_ipw = sample_sd(aug_ipw);
    r.se_aug_out = sample_sd(aug_out);
    r.se_eif_aug = sample_sd(eif_aug);
    r.replicates = static_cast<int>(reps.points.size());
    r.n_failed_replicates = reps.failed;
    return r;
}

DiagnosticReport pairwise_diagnostics(const TrialDataset& d, const NuisanceSet& ns, const BootstrapOptions& options) {
    const auto reports = estimate_all(kProposedEstimators, d, ns, options.estimator);
    const auto reps = bootstrap_replicates(d, kProposedEstimators, options);
    return diagnostics_from_replicates(reports[0].point, reports[1].point, reports[2].point, reports[3].point, reps,
                                       options);
}

}  // namespace icetrial
