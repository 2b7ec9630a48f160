#include "icetrial/estimators.hpp"

#include "icetrial/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace icetrial {

std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::Out: return "out";
        case EstimatorKind::Ipw: return "ipw";
        case EstimatorKind::Aug: return "aug";
        case EstimatorKind::Eif: return "eif";
        case EstimatorKind::McIpw: return "mcipw";
        case EstimatorKind::Nri: return "nri";
        case EstimatorKind::Hs: return "hs";
    }
    return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
    for (EstimatorKind k : kAllEstimators) {
        if (to_string(k) == name) return k;
    }
    if (name == "mc-ipw" || name == "mc_ipw") return EstimatorKind::McIpw;
    throw std::invalid_argument("unknown estimator '" + std::string(name) +
                                "' (expected out, ipw, aug, eif, mcipw, nri, hs)");
}

namespace {

constexpr double kLogInverseFloor = 13.815510557964274;  // -log(kSurvivalFloor)

// 1 / {max(exp(-a), floor) * max(exp(-b), floor)}
inline double inverse_survival_product(double a, double b) {
    if (a < kLogInverseFloor && b < kLogInverseFloor) return std::exp(a + b);
    return std::exp(std::min(a, kLogInverseFloor) + std::min(b, kLogInverseFloor));
}

// Baseline quantities at the censoring model's event times, shared by every
// subject of the arm.
class MartingaleIntegrator {
public:
    MartingaleIntegrator(const CoxSurvivalModel& s, const CoxSurvivalModel& g) : s_(s), g_(g) {
        const std::size_t m = g.baseline_times.size();
        times_.reserve(m);
        for (std::size_t j = 0; j < m && g.baseline_times[j] <= g.horizon; ++j) {
            times_.push_back(g.baseline_times[j]);
            increments_.push_back(g.baseline_increments[j]);
            g_before_.push_back(j ? g.baseline_cumulative[j - 1] : 0.0);
        }
        std::size_t q = 0;
        double s_cum = 0.0;
        for (double t : times_) {
            while (q < s.baseline_times.size() && s.baseline_times[q] < t) s_cum = s.baseline_cumulative[q++];
            s_before_.push_back(s_cum);
        }
    }

    double integral(double followup, bool censored, std::span<const double> x) const {
        const double rs = s_.relative_risk(x);
        const double rg = g_.relative_risk(x);
        double sum = 0.0;
        for (std::size_t j = 0; j < times_.size() && times_[j] <= followup; ++j) {
            sum += increments_[j] * rg * inverse_survival_product(s_before_[j] * rs, g_before_[j] * rg);
        }
        double value = -sum;
        if (censored) {
            value += inverse_survival_product(s_.cumulative_baseline_before(followup) * rs,
                                              g_.cumulative_baseline_before(followup) * rg);
        }
        return value;
    }

private:
    const CoxSurvivalModel& s_;
    const CoxSurvivalModel& g_;
    std::vector<double> times_, increments_, g_before_, s_before_;
};

}  // namespace

double martingale_integral(const SubjectRecord& r, const CoxSurvivalModel& s, const CoxSurvivalModel& g) {
    return MartingaleIntegrator(s, g).integral(r.followup_time, delta_indicator(r) == 0, r.covariates);
}

NuisanceEvaluation evaluate_nuisances(const TrialDataset& d, const NuisanceSet& ns, bool with_martingale) {
    const std::size_t n = d.size();
    const double k = d.horizon();
    const double v = d.failure_value();
    NuisanceEvaluation ev;
    ev.propensity.resize(n);
    ev.mu_s1.resize(n);
    ev.mu_s0.resize(n);
    ev.censoring_k.resize(n);
    ev.at_floor.assign(n, 0);
    if (with_martingale) ev.martingale.resize(n);
    if (ns.pooled_ice) ev.pooled_ice_k.resize(n);

    std::optional<MartingaleIntegrator> mg0, mg1;
    if (with_martingale) {
        mg0.emplace(ns.s0, ns.g0);
        mg1.emplace(ns.s1, ns.g1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = d.covariates(i);
        const int a = d.arm(i);
        const double e = ns.propensity_at(x);
        ev.propensity[i] = e;
        ev.mu_s1[i] = (ns.outcome1.predict(x) - v) * predict_survival(ns.s1, k, x);
        ev.mu_s0[i] = (ns.outcome0.predict(x) - v) * predict_survival(ns.s0, k, x);
        const double gk = predict_survival(ns.censoring_survival(a), k, x);
        ev.censoring_k[i] = gk;
        ev.at_floor[i] = (!ns.known_propensity && (e <= kProbabilityClamp || e >= 1.0 - kProbabilityClamp)) ||
                         gk <= kSurvivalFloor;
        if (with_martingale) {
            const auto& integ = a == 1 ? *mg1 : *mg0;
            ev.martingale[i] = integ.integral(d.followup_time(i), d.event(i) == EventKind::TrtUnrelated, x);
        }
        if (ns.pooled_ice) {
            const double hk = predict_survival((*ns.pooled_ice)[static_cast<std::size_t>(a)], k, x);
            ev.pooled_ice_k[i] = hk;
            ev.at_floor[i] |= hk <= kSurvivalFloor;
        }
    }
    return ev;
}

EstimateReport estimate(EstimatorKind kind, const TrialDataset& d, const NuisanceEvaluation& ev,
                        const EstimatorOptions& options) {
    const std::size_t n = d.size();
    if (ev.propensity.size() != n) throw std::invalid_argument("nuisance evaluation does not match dataset");
    const bool needs_mg = kind == EstimatorKind::Eif || kind == EstimatorKind::McIpw;
    if (needs_mg && ev.martingale.size() != n) {
        throw std::invalid_argument("estimator requires martingale integrals");
    }
    if (kind == EstimatorKind::Hs && ev.pooled_ice_k.size() != n) {
        throw std::invalid_argument("hs estimator requires pooled ICE survival");
    }
    const double v = d.failure_value();

    EstimateReport rep;
    rep.kind = kind;
    rep.contributions.resize(n);
    double sum1 = 0.0, sum0 = 0.0, aug_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool treated = d.arm(i) == 1;
        const double e = ev.propensity[i];
        const bool completed = d.event(i) == EventKind::Completed;
        const double ycp = completed ? *d.outcome(i) - v : 0.0;
        const double arm_prob = treated ? e : 1.0 - e;

        auto inverse_weight = [&](double survival_k) {
            double w = 1.0 / (arm_prob * survival_k);
            if (options.weight_cap && w > *options.weight_cap) {
                w = *options.weight_cap;
                ++rep.capped_weights;
            }
            if (ev.at_floor[i]) ++rep.floored_weights;
            return w;
        };

        double t1 = 0.0, t0 = 0.0;
        switch (kind) {
            case EstimatorKind::Out:
                t1 = ev.mu_s1[i];
                t0 = ev.mu_s0[i];
                break;
            case EstimatorKind::Nri:
                (treated ? t1 : t0) = ycp / arm_prob;
                break;
            case EstimatorKind::Hs:
                if (completed) (treated ? t1 : t0) = ycp * inverse_weight(ev.pooled_ice_k[i]);
                break;
            case EstimatorKind::Ipw:
            case EstimatorKind::Aug:
            case EstimatorKind::Eif:
            case EstimatorKind::McIpw: {
                // TrtUnrelated subjects carry no composite value; TrtRelated ones carry 0.
                const double ipw = completed && ycp != 0.0 ? ycp * inverse_weight(ev.censoring_k[i]) : 0.0;
                (treated ? t1 : t0) = ipw;
                if (kind == EstimatorKind::Aug || kind == EstimatorKind::Eif) {
                    const double a = treated ? 1.0 : 0.0;
                    t1 -= (a - e) / e * ev.mu_s1[i];
                    t0 -= (e - a) / (1.0 - e) * ev.mu_s0[i];
                }
                if (needs_mg) {
                    const double mg = treated ? ev.mu_s1[i] * ev.martingale[i] / e
                                              : ev.mu_s0[i] * ev.martingale[i] / (1.0 - e);
                    (treated ? t1 : t0) += mg;
                    aug_sum += treated ? mg : -mg;
                }
                break;
            }
        }
        sum1 += t1;
        sum0 += t0;
        rep.contributions[i] = t1 - t0;
    }
    const double nd = static_cast<double>(n);
    rep.arm_means = {sum1 / nd, sum0 / nd};
    rep.point = rep.arm_means.first - rep.arm_means.second;
    if (kind == EstimatorKind::Eif) {
        for (double& c : rep.contributions) c -= rep.point;
        rep.augmentation_mean = aug_sum / nd;
    }
    return rep;
}

std::vector<EstimateReport> estimate_all(std::span<const EstimatorKind> kinds, const TrialDataset& d,
                                         const NuisanceSet& ns, const EstimatorOptions& options) {
    const bool needs_mg = std::any_of(kinds.begin(), kinds.end(), [](EstimatorKind k) {
        return k == EstimatorKind::Eif || k == EstimatorKind::McIpw;
    });
    const bool needs_hs = std::find(kinds.begin(), kinds.end(), EstimatorKind::Hs) != kinds.end();
    NuisanceEvaluation ev;
    if (needs_hs && !ns.pooled_ice) {
        NuisanceSet with_pooled = ns;
        with_pooled.pooled_ice = std::array<CoxSurvivalModel, 2>{fit_cox_or_null(d, 0, EventRole::AnyIce),
                                                                 fit_cox_or_null(d, 1, EventRole::AnyIce)};
        ev = evaluate_nuisances(d, with_pooled, needs_mg);
    } else {
        ev = evaluate_nuisances(d, ns, needs_mg);
    }
    std::vector<EstimateReport> out;
    out.reserve(kinds.size());
    for (EstimatorKind k : kinds) out.push_back(estimate(k, d, ev, options));
    return out;
}

namespace {

EstimateReport single(EstimatorKind kind, const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    const EstimatorKind kinds[] = {kind};
    return std::move(estimate_all(kinds, d, ns, o).front());
}

}  // namespace

EstimateReport estimate_out(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Out, d, ns, o);
}
EstimateReport estimate_ipw(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Ipw, d, ns, o);
}
EstimateReport estimate_aug(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Aug, d, ns, o);
}
EstimateReport estimate_eif(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Eif, d, ns, o);
}
EstimateReport estimate_mc_ipw(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::McIpw, d, ns, o);
}
EstimateReport estimate_nri(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Nri, d, ns, o);
}
EstimateReport estimate_hs(const TrialDataset& d, const NuisanceSet& ns, const EstimatorOptions& o) {
    return single(EstimatorKind::Hs, d, ns, o);
}

EstimateReport estimate_hs(const TrialDataset& d, const NuisanceSet& ns,
                           const std::array<CoxSurvivalModel, 2>& pooled_ice_model, const EstimatorOptions& o) {
    NuisanceSet with_pooled = ns;
    with_pooled.pooled_ice = pooled_ice_model;
    return single(EstimatorKind::Hs, d, with_pooled, o);
}

}  // namespace icetrial
