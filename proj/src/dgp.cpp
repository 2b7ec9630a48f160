#include "icetrial/dgp.hpp"

#include "icetrial/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace icetrial {

namespace {

constexpr double kEventScale = 0.002;  // S_a(t|X) = exp{-0.002 t^1.2 exp(gamma_a(X))}
constexpr double kWeibullShape = 1.2;
constexpr double kCensorScale = 0.01;
const double kSqrt12 = std::sqrt(12.0);
constexpr double kLogInverseFloor = 13.815510557964274;  // -log(kSurvivalFloor)

double transformed(double x) { return ((x + 2.0) * (x + 2.0) - 1.0) / kSqrt12; }

// 0.1(X1^2 X2 - X2 - 1) + 1(X3 != 0) X2 log(10 X3^2), shared by gamma_1 and delta_1.
double heavy_risk(const Covariates& x) {
    double r = 0.1 * (x[0] * x[0] * x[1] - x[1] - 1.0);
    if (x[2] != 0.0) r += x[1] * std::log(10.0 * x[2] * x[2]);
    return r;
}

double positive_time(double log_t) {
    return std::max(std::exp(log_t), std::numeric_limits<double>::min());
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(Regime r) noexcept {
    switch (r) {
        case Regime::AllCorrect: return "all_correct";
        case Regime::EWrong: return "e_wrong";
        case Regime::EGWrong: return "e_G_wrong";
        case Regime::MuSWrong: return "mu_S_wrong";
        case Regime::AllWrong: return "all_wrong";
    }
    return "unknown";
}

Regime parse_regime(std::string_view name) {
    const std::string key = lower(name);
    for (Regime r : kAllRegimes) {
        if (lower(to_string(r)) == key) return r;
    }
    throw std::invalid_argument("unknown regime '" + std::string(name) +
                                "'; valid presets: all_correct, e_wrong, e_G_wrong, mu_S_wrong, all_wrong");
}

DgpSpec regime_spec(Regime r, std::size_t n, std::uint64_t seed) {
    DgpSpec s;
    s.name = std::string(to_string(r));
    s.n = n;
    s.seed = seed;
    const bool e_wrong = r == Regime::EWrong || r == Regime::EGWrong || r == Regime::AllWrong;
    const bool g_wrong = r == Regime::EGWrong || r == Regime::AllWrong;
    const bool mu_s_wrong = r == Regime::MuSWrong || r == Regime::AllWrong;
    auto pick = [](bool wrong) { return wrong ? Specification::Misspecified : Specification::Correct; };
    s.propensity = pick(e_wrong);
    s.censoring_risk = pick(g_wrong);
    s.censoring_baseline = pick(g_wrong);
    s.outcome = pick(mu_s_wrong);
    s.outcome_sd = pick(mu_s_wrong);
    s.event_risk = pick(mu_s_wrong);
    return s;
}

DgpTruth::DgpTruth(DgpSpec spec) : spec_(std::move(spec)) {
    if (!(spec_.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    // Both censoring baselines must be proper cumulative hazards on (0, k].
    assert(censoring_scale(0) > 0.0 && censoring_scale(1) > 0.0);
    if (!(censoring_scale(0) > 0.0 && censoring_scale(1) > 0.0)) {
        throw std::logic_error("censoring baseline is not a cumulative hazard");
    }
}

double DgpTruth::propensity(const Covariates& x) const {
    double logit = 0.0;
    if (spec_.propensity == Specification::Correct) {
        logit = (x[0] + x[1] + x[2]) / 5.0;
    } else {
        const double ex2 = std::exp(transformed(x[1]));
        logit = (x[0] >= 0.0 ? ex2 - x[1] * (1.0 + transformed(x[2])) : 0.0) - ex2;
    }
    return 1.0 / (1.0 + std::exp(-logit));
}

double DgpTruth::outcome_mean(int arm, const Covariates& x) const {
    if (spec_.outcome == Specification::Correct) {
        const double s = x[0] + x[1] + x[2];
        return arm == 1 ? 2.0 * s : s;
    }
    if (arm == 1) {
        const double t2 = transformed(x[1]);
        return (x[0] >= 0.0 ? x[1] + std::exp(x[1]) * transformed(x[2]) - t2 : 0.0) + t2;
    }
    double m = -transformed(x[0]);
    if (x[0] > 0.5) m -= transformed(x[1]);
    if (x[0] < -0.5) m += x[1] * x[1] * std::log(std::abs(x[2]) + 1.0);
    return m;
}

double DgpTruth::outcome_sd(int arm) const {
    return spec_.outcome_sd == Specification::Correct ? 0.1 * (arm + 1) : 1.0;
}

double DgpTruth::event_risk(int arm, const Covariates& x) const {
    if (spec_.event_risk == Specification::Correct) {
        return arm == 1 ? 0.1 * (x[0] + 2.0 * x[1] - 2.0 * x[2]) : 0.1 * (x[0] - 2.0 * x[1] + 2.0 * x[2]);
    }
    if (arm == 1) return heavy_risk(x);
    return 0.01 * (-transformed(x[0]) + transformed(x[1]) + transformed(x[2]));
}

double DgpTruth::censoring_risk(int arm, const Covariates& x) const {
    if (spec_.censoring_risk == Specification::Correct || arm == 0) return 0.0;
    return heavy_risk(x);
}

// rho_a(t) is 0.01 t^1.2 when correct; the misspecified baseline keeps that
// for arm 1 and is linear, 0.6 * 0.01^(1/1.2) t, for arm 0.
double DgpTruth::censoring_scale(int arm) const {
    if (spec_.censoring_baseline == Specification::Correct || arm == 1) return kCensorScale;
    return 0.6 * std::pow(kCensorScale, 1.0 / kWeibullShape);
}

double DgpTruth::censoring_shape(int arm) const {
    if (spec_.censoring_baseline == Specification::Correct || arm == 1) return kWeibullShape;
    return 1.0;
}

double DgpTruth::event_cumhaz(int arm, double t, const Covariates& x) const {
    return kEventScale * std::pow(t, kWeibullShape) * std::exp(event_risk(arm, x));
}

double DgpTruth::censoring_cumhaz(int arm, double t, const Covariates& x) const {
    return censoring_scale(arm) * std::pow(t, censoring_shape(arm)) * std::exp(censoring_risk(arm, x));
}

double DgpTruth::event_survival(int arm, double t, const Covariates& x) const {
    return std::exp(-event_cumhaz(arm, t, x));
}

double DgpTruth::censoring_survival(int arm, double t, const Covariates& x) const {
    return std::exp(-censoring_cumhaz(arm, t, x));
}

double DgpTruth::event_time(int arm, double u, const Covariates& x) const {
    return positive_time((std::log(-std::log(u)) - std::log(kEventScale) - event_risk(arm, x)) / kWeibullShape);
}

double DgpTruth::censoring_time(int arm, double u, const Covariates& x) const {
    return positive_time((std::log(-std::log(u)) - std::log(censoring_scale(arm)) - censoring_risk(arm, x)) /
                         censoring_shape(arm));
}

double DgpTruth::martingale_integral(int arm, double followup, bool censored, const Covariates& x) const {
    const double a = kEventScale * std::exp(event_risk(arm, x));
    const double c = censoring_scale(arm) * std::exp(censoring_risk(arm, x));
    const double shape = censoring_shape(arm);
    auto inverse_sg = [&](double t) {
        const double ls = a * std::pow(t, kWeibullShape);
        const double lc = c * std::pow(t, shape);
        return std::exp(std::min(ls, kLogInverseFloor) + std::min(lc, kLogInverseFloor));
    };
    // t = s^5 makes the t^(shape - 1) hazard factor smooth at the origin.
    auto integrand = [&](double s) {
        const double t = std::pow(s, 5.0);
        const double hazard = c * shape * std::pow(t, shape - 1.0);
        return hazard * 5.0 * std::pow(s, 4.0) * inverse_sg(t);
    };
    double integral = 0.0;
    if (followup > 0.0) {
        integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, 0.0, std::pow(followup, 0.2), 15, 1e-12);
    }
    return -integral + (censored ? inverse_sg(followup) : 0.0);
}

SimulatedTrial dgp_generate(const DgpSpec& spec) {
    const DgpTruth truth(spec);
    Rng rng(spec.seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double k = spec.horizon;

    std::vector<SubjectRecord> records;
    std::vector<LatentSubject> latent;
    records.reserve(spec.n);
    latent.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        LatentSubject z;
        for (double& xj : z.x) xj = normal(rng);
        const int arm = uniform_open01(rng) < truth.propensity(z.x) ? 1 : 0;
        for (int a : {0, 1}) z.y[a] = truth.outcome_mean(a, z.x) + truth.outcome_sd(a) * normal(rng);
        for (int a : {0, 1}) z.t[a] = truth.event_time(a, uniform_open01(rng), z.x);
        for (int a : {0, 1}) z.c[a] = truth.censoring_time(a, uniform_open01(rng), z.x);

        SubjectRecord r;
        r.id = std::to_string(i + 1);
        r.covariates.assign(z.x.begin(), z.x.end());
        r.arm = arm;
        const double t = z.t[arm], c = z.c[arm];
        if (std::min(t, c) > k) {
            r.event = EventKind::Completed;
            r.followup_time = k;
            r.outcome = z.y[arm];
        } else if (t <= c) {
            r.event = EventKind::TrtRelated;
            r.followup_time = t;
        } else {
            r.event = EventKind::TrtUnrelated;
            r.followup_time = c;
        }
        records.push_back(std::move(r));
        latent.push_back(z);
    }
    return {TrialDataset(std::move(records), {"x1", "x2", "x3"}, k, 0.0), std::move(latent)};
}

OracleTau oracle_tau(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
    const DgpTruth truth(spec);
    const double k = spec.horizon;
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    auto mean_se = [&](auto&& draw_one, std::uint64_t stream) {
        Rng rng(derive_seed(seed, stream));
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < draws; ++i) {
            const double v = draw_one(rng);
            sum += v;
            sum_sq += v * v;
        }
        const double n = static_cast<double>(draws);
        const double mean = sum / n;
        const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
        return std::pair{mean, std::sqrt(var / n)};
    };
    auto potential = [&](Rng& rng) {
        Covariates x;
        for (double& xj : x) xj = normal(rng);
        double v = 0.0;
        for (int a : {0, 1}) {
            const double y = truth.outcome_mean(a, x) + truth.outcome_sd(a) * normal(rng);
            const double t = truth.event_time(a, uniform_open01(rng), x);
            v += (a == 1 ? 1.0 : -1.0) * (t > k ? y : 0.0);
        }
        return v;
    };
    auto regression = [&](Rng& rng) {
        Covariates x;
        for (double& xj : x) xj = normal(rng);
        return truth.outcome_mean(1, x) * truth.event_survival(1, k, x) -
               truth.outcome_mean(0, x) * truth.event_survival(0, k, x);
    };
    OracleTau o;
    std::tie(o.potential_value, o.potential_se) = mean_se(potential, 1);
    std::tie(o.regression_value, o.regression_se) = mean_se(regression, 2);
    o.value = o.regression_value;
    o.se = o.regression_se;
    const double combined = std::hypot(o.potential_se, o.regression_se);
    o.routes_agree = std::abs(o.potential_value - o.regression_value) <= 3.0 * combined;
    return o;
}

NuisanceEvaluation oracle_evaluation(const DgpTruth& truth, const TrialDataset& d) {
    if (d.dimension() != 3) throw std::invalid_argument("oracle evaluation needs three covariates");
    const std::size_t n = d.size();
    const double k = d.horizon();
    const double v = d.failure_value();
    NuisanceEvaluation ev;
    ev.propensity.resize(n);
    ev.mu_s1.resize(n);
    ev.mu_s0.resize(n);
    ev.censoring_k.resize(n);
    ev.martingale.resize(n);
    ev.at_floor.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xs = d.covariates(i);
        const Covariates x{xs[0], xs[1], xs[2]};
        const int a = d.arm(i);
        const double e = std::clamp(truth.propensity(x), kProbabilityClamp, 1.0 - kProbabilityClamp);
        ev.propensity[i] = e;
        ev.mu_s1[i] = (truth.outcome_mean(1, x) - v) * std::max(truth.event_survival(1, k, x), kSurvivalFloor);
        ev.mu_s0[i] = (truth.outcome_mean(0, x) - v) * std::max(truth.event_survival(0, k, x), kSurvivalFloor);
        const double gk = std::max(truth.censoring_survival(a, k, x), kSurvivalFloor);
        ev.censoring_k[i] = gk;
        ev.at_floor[i] = e <= kProbabilityClamp || e >= 1.0 - kProbabilityClamp || gk <= kSurvivalFloor;
        ev.martingale[i] =
            truth.martingale_integral(a, d.followup_time(i), d.event(i) == EventKind::TrtUnrelated, x);
    }
    return ev;
}

}  // namespace icetrial
