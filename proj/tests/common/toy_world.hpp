#pragma once

// Discrete population with two covariate levels and event times on {1, 2, 3},
// horizon 3. Every cell of the joint law is replicated in exact proportion, so
// sample means over the dataset are population expectations.

#include "icetrial/estimators.hpp"
#include "icetrial/trial_data.hpp"

#include <array>
#include <vector>

namespace toy {

inline constexpr double kHorizon = 3.0;
inline constexpr double kBeyond = 5.0;  // stands for "no event by k"

struct World {
    std::array<double, 2> px = {0.5, 0.5};
    std::array<double, 2> e = {0.5, 0.75};
    // [arm][x] -> pr(T = 1, 2, 3, beyond)
    std::array<std::array<std::array<double, 4>, 2>, 2> pt = {{
        {{{0.25, 0.25, 0.0, 0.5}, {0.25, 0.0, 0.25, 0.5}}},
        {{{0.25, 0.0, 0.25, 0.5}, {0.0, 0.25, 0.0, 0.75}}},
    }};
    // [arm][x] -> pr(C = 1, 2, beyond)
    std::array<std::array<std::array<double, 3>, 2>, 2> pc = {{
        {{{0.25, 0.25, 0.5}, {0.0, 0.0, 1.0}}},
        {{{0.25, 0.0, 0.75}, {0.0, 0.25, 0.75}}},
    }};
    // [arm][x] -> outcome mean; outcomes are mean -/+ spread with equal mass
    std::array<std::array<double, 2>, 2> mu = {{{1.0, 0.5}, {2.0, 3.0}}};
    double spread = 1.0;

    double event_survival_k(int a, int x) const { return pt[a][x][3]; }
    double censoring_survival_k(int a, int x) const { return pc[a][x][2]; }

    double tau() const {
        double t = 0.0;
        for (int x = 0; x < 2; ++x) {
            t += px[x] * (mu[1][x] * event_survival_k(1, x) - mu[0][x] * event_survival_k(0, x));
        }
        return t;
    }
};

inline icetrial::TrialDataset population(const World& w, double scale = 256.0) {
    using icetrial::EventKind;
    std::vector<icetrial::SubjectRecord> rs;
    const double tvals[4] = {1, 2, 3, kBeyond};
    const double cvals[3] = {1, 2, kBeyond};
    for (int x = 0; x < 2; ++x) {
        for (int a = 0; a < 2; ++a) {
            const double pa = a == 1 ? w.e[x] : 1.0 - w.e[x];
            for (int ti = 0; ti < 4; ++ti) {
                for (int ci = 0; ci < 3; ++ci) {
                    for (int s = 0; s < 2; ++s) {
                        const double mass = w.px[x] * pa * w.pt[a][x][ti] * w.pc[a][x][ci] * 0.5;
                        const long count = std::lround(mass * scale);
                        const double t = tvals[ti], c = cvals[ci];
                        for (long r = 0; r < count; ++r) {
                            icetrial::SubjectRecord rec;
                            rec.id = std::to_string(rs.size() + 1);
                            rec.covariates = {static_cast<double>(x)};
                            rec.arm = a;
                            if (std::min(t, c) > kHorizon) {
                                rec.event = EventKind::Completed;
                                rec.followup_time = kHorizon;
                                rec.outcome = w.mu[a][x] + (s ? w.spread : -w.spread);
                            } else if (t <= c) {
                                rec.event = EventKind::TrtRelated;
                                rec.followup_time = t;
                            } else {
                                rec.event = EventKind::TrtUnrelated;
                                rec.followup_time = c;
                            }
                            rs.push_back(rec);
                        }
                    }
                }
            }
        }
    }
    return icetrial::TrialDataset(rs, {"x"}, kHorizon);
}

inline icetrial::NuisanceEvaluation oracle(const World& w, const icetrial::TrialDataset& d) {
    icetrial::NuisanceEvaluation ev;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int x = static_cast<int>(d.covariates(i)[0]);
        ev.propensity.push_back(w.e[x]);
        ev.mu_s1.push_back(w.mu[1][x] * w.event_survival_k(1, x));
        ev.mu_s0.push_back(w.mu[0][x] * w.event_survival_k(0, x));
        ev.censoring_k.push_back(w.censoring_survival_k(d.arm(i), x));
        ev.at_floor.push_back(0);
    }
    return ev;
}

// Each cell count must be an integer at this scale for the population to be exact.
inline bool exact_at_scale(const World& w, double scale = 256.0) {
    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a)
            for (int ti = 0; ti < 4; ++ti)
                for (int ci = 0; ci < 3; ++ci) {
                    const double pa = a == 1 ? w.e[x] : 1.0 - w.e[x];
                    const double m = w.px[x] * pa * w.pt[a][x][ti] * w.pc[a][x][ci] * 0.5 * scale;
                    if (m != std::round(m)) return false;
                }
    return true;
}

}  // namespace toy
