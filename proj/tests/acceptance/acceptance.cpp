// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// restrict the run to the named criteria, e.g. `acceptance C4 C5`.

#include "commands.hpp"
#include "solver_oracles.hpp"
#include "toy_world.hpp"

#include "icetrial/cox.hpp"
#include "icetrial/dgp.hpp"
#include "icetrial/estimators.hpp"
#include "icetrial/glm.hpp"
#include "icetrial/inference.hpp"
#include "icetrial/monte_carlo.hpp"
#include "icetrial/nuisance.hpp"
#include "icetrial/parallel.hpp"
#include "icetrial/rng.hpp"
#include "icetrial/serialize.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace icetrial;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;
int g_passed = 0;

void report(const std::string& id, bool ok, const std::string& what, const std::string& detail) {
    (ok ? g_passed : g_failed) += 1;
    std::printf("%s %-8s %s | %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct MeanSe {
    double mean = 0.0, sd = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    MeanSe m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / (n - 1.0));
    m.se = m.sd / std::sqrt(n);
    return m;
}

// Published simulation targets at reps = 1000, n = 1000.
struct Target {
    double bias, sd, cr;
};

const std::map<Regime, std::map<EstimatorKind, Target>>& table_targets() {
    static const std::map<Regime, std::map<EstimatorKind, Target>> t = {
        {Regime::AllCorrect,
         {{EstimatorKind::Out, {0.003, 0.100, 0.989}},
          {EstimatorKind::Ipw, {0.005, 0.154, 0.977}},
          {EstimatorKind::Aug, {0.004, 0.152, 0.980}},
          {EstimatorKind::Eif, {0.004, 0.110, 0.982}}}},
        {Regime::EWrong,
         {{EstimatorKind::Out, {-0.002, 0.134, 0.978}},
          {EstimatorKind::Ipw, {-0.338, 0.527, 0.916}},
          {EstimatorKind::Aug, {-0.003, 0.479, 0.961}},
          {EstimatorKind::Eif, {0.000, 0.234, 0.979}}}},
        {Regime::MuSWrong,
         {{EstimatorKind::Out, {-0.085, 0.170, 0.936}},
          {EstimatorKind::Ipw, {-0.009, 0.186, 0.974}},
          {EstimatorKind::Aug, {-0.009, 0.186, 0.974}},
          {EstimatorKind::Eif, {-0.012, 0.176, 0.972}}}},
    };
    return t;
}

constexpr EstimatorKind kProposed[] = {EstimatorKind::Out, EstimatorKind::Ipw, EstimatorKind::Aug, EstimatorKind::Eif};

struct Runs {
    std::map<Regime, MonteCarloSummary> desk;  // reps 200, n 1000, B 100
    std::optional<MonteCarloSummary> e_g_wrong;  // B 0
};

MonteCarloOptions desk_options(unsigned threads) {
    MonteCarloOptions o;
    o.reps = 200;
    o.n = 1000;
    o.bootstrap = 100;
    o.seed = 20250101;
    o.threads = threads;
    return o;
}

const MonteCarloSummary& desk_run(Runs& runs, Regime r, unsigned threads) {
    auto it = runs.desk.find(r);
    if (it != runs.desk.end()) return it->second;
    MonteCarloOptions o = desk_options(threads);
    o.adhoc = r == Regime::MuSWrong;
    const auto start = std::chrono::steady_clock::now();
    MonteCarloSummary s = run_monte_carlo(r, o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "# " << to_string(r) << " desk run: " << secs << " s, failed replicates " << s.failed_replicates
              << "\n";
    for (const auto& e : s.estimators) {
        std::printf("#   %-6s bias %+.4f  sd %.4f  cr %s\n", std::string(to_string(e.kind)).c_str(), e.bias, e.sd,
                    e.coverage ? fmt("%.3f", *e.coverage).c_str() : "-");
    }
    return runs.desk.emplace(r, std::move(s)).first->second;
}

void criterion_1(Runs& runs, unsigned threads) {
    for (const auto& [regime, targets] : table_targets()) {
        const MonteCarloSummary& s = desk_run(runs, regime, threads);
        const double root_reps = std::sqrt(static_cast<double>(s.options.reps));
        for (EstimatorKind k : kProposed) {
            const Target& t = targets.at(k);
            const EstimatorSummary& e = s.at(k);
            const std::string who = std::string(to_string(regime)) + " " + std::string(to_string(k));
            const double tol = 3.0 * t.sd / root_reps;
            report("C1", std::abs(e.bias - t.bias) <= tol, who + " bias",
                   fmt("%+.4f", e.bias) + " vs " + fmt("%+.3f", t.bias) + " tol " + fmt("%.4f", tol));
            const double cr = e.coverage.value_or(std::nan(""));
            report("C1", std::abs(cr - t.cr) <= 0.05, who + " coverage",
                   fmt("%.3f", cr) + " vs " + fmt("%.3f", t.cr) + " tol 0.05");
        }
    }
}

void criterion_2(Runs& runs, unsigned threads) {
    auto check = [](const MonteCarloSummary& s, EstimatorKind k, bool expect_biased) {
        const EstimatorSummary& e = s.at(k);
        const double bound = 3.0 * e.mc_se;
        const bool biased = std::abs(e.bias) > bound;
        report("C2", biased == expect_biased,
               s.spec.name + " " + std::string(to_string(k)) + (expect_biased ? " biased" : " unbiased"),
               "|bias| " + fmt("%.4f", std::abs(e.bias)) + " vs 3 SE " + fmt("%.4f", bound));
    };
    const MonteCarloSummary& ew = desk_run(runs, Regime::EWrong, threads);
    check(ew, EstimatorKind::Ipw, true);
    for (EstimatorKind k : {EstimatorKind::Out, EstimatorKind::Aug, EstimatorKind::Eif}) check(ew, k, false);
    const MonteCarloSummary& ms = desk_run(runs, Regime::MuSWrong, threads);
    check(ms, EstimatorKind::Out, true);
    for (EstimatorKind k : {EstimatorKind::Ipw, EstimatorKind::Aug, EstimatorKind::Eif}) check(ms, k, false);
    if (!runs.e_g_wrong) {
        MonteCarloOptions o = desk_options(threads);
        o.bootstrap = 0;
        runs.e_g_wrong = run_monte_carlo(Regime::EGWrong, o);
    }
    check(*runs.e_g_wrong, EstimatorKind::Eif, false);
}

void criterion_3(Runs& runs, unsigned threads) {
    const MonteCarloSummary& s = desk_run(runs, Regime::MuSWrong, threads);
    const double nri = s.at(EstimatorKind::Nri).bias;
    const double hs = s.at(EstimatorKind::Hs).bias;
    report("C3", std::abs(nri - -1.195) <= 0.03, "mu_S_wrong nri bias", fmt("%+.4f", nri) + " vs -1.195 tol 0.03");
    report("C3", std::abs(hs - 1.188) <= 0.09, "mu_S_wrong hs bias", fmt("%+.4f", hs) + " vs +1.188 tol 0.09");
}

void criterion_4(unsigned threads) {
    constexpr int kSeeds = 50;
    constexpr std::size_t kN = 20000;
    for (Regime r : kAllRegimes) {
        const PinnedOracle pinned = pinned_oracle(r);
        const OracleTau fresh = oracle_tau(regime_spec(r), 2'000'000, 777);
        report("C4", fresh.routes_agree && std::abs(fresh.potential_value - pinned.value) <=
                                               3.0 * std::hypot(fresh.potential_se, pinned.se),
               std::string(to_string(r)) + " oracle routes",
               "pinned " + fmt("%.5f", pinned.value) + " potential " + fmt("%.5f", fresh.potential_value) +
                   " regression " + fmt("%.5f", fresh.regression_value));

        // The misspecified propensity falls below the 1e-6 clamp on a sizeable share of
        // subjects, so true-e weights are unusable at this n; those designs are listed only.
        const bool bounded_propensity = regime_spec(r).propensity == Specification::Correct;
        std::vector<std::vector<double>> points(kSeeds);
        const DgpSpec base = regime_spec(r, kN);
        parallel_for(points.size(), threads, [&](std::size_t s) {
            DgpSpec spec = base;
            spec.seed = derive_seed(0xC4, s);
            const SimulatedTrial sim = dgp_generate(spec);
            const NuisanceEvaluation ev = oracle_evaluation(DgpTruth(spec), sim.data);
            for (EstimatorKind k : kProposed) points[s].push_back(estimate(k, sim.data, ev).point);
        });
        for (std::size_t j = 0; j < 4; ++j) {
            std::vector<double> v;
            for (const auto& p : points) v.push_back(p[j]);
            const MeanSe m = mean_se(v);
            const double combined = std::hypot(m.se, pinned.se);
            const std::string what = std::string(to_string(r)) + " oracle " + std::string(to_string(kProposed[j]));
            const std::string detail = "mean " + fmt("%.5f", m.mean) + " tau " + fmt("%.5f", pinned.value) +
                                       " 3 SE " + fmt("%.5f", 3.0 * combined);
            if (bounded_propensity) {
                report("C4", std::abs(m.mean - pinned.value) <= 3.0 * combined, what, detail);
            } else {
                std::printf("# info     %s | %s\n", what.c_str(), detail.c_str());
            }
        }
    }

    const toy::World w;
    const TrialDataset d = toy::population(w);
    const NuisanceEvaluation ev = toy::oracle(w, d);
    for (EstimatorKind k : {EstimatorKind::Out, EstimatorKind::Ipw}) {
        const double err = std::abs(estimate(k, d, ev).point - w.tau());
        report("C4", toy::exact_at_scale(w) && err <= 1e-12, std::string("toy world ") + std::string(to_string(k)),
               "error " + fmt("%.2e", err));
    }
}

void criterion_5() {
    // Logistic fits against plain Newton.
    double worst_glm = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_01<double> unif;
        const int n = 400;
        std::vector<double> x(n), y(n);
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd Y(n);
        std::vector<Eigen::Index> rows(n);
        for (int i = 0; i < n; ++i) {
            x[i] = normal(rng);
            y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * x[i]))) ? 1.0 : 0.0;
            X(i, 0) = 1.0;
            X(i, 1) = x[i];
            Y[i] = y[i];
            rows[i] = i;
        }
        const auto m = fit_glm(X, Y, Link::Logit, rows);
        const auto [a, b] = oracles::newton_logit(x, y);
        worst_glm = std::max({worst_glm, std::abs(m.coefficients[0] - a), std::abs(m.coefficients[1] - b)});
    }
    report("C5", worst_glm <= 1e-6, "logistic fit vs Newton oracle", "max error " + fmt("%.2e", worst_glm));

    // Cox fits against a refined grid, with tied times.
    double worst_cox = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(100 + seed);
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_01<double> unif;
        const int n = 150;
        std::vector<double> x(n), t(n);
        std::vector<int> d(n);
        RowMatrix X(n, 1);
        for (int i = 0; i < n; ++i) {
            x[i] = normal(rng);
            const double ev = -std::log(unif(rng)) / (0.05 * std::exp(0.7 * x[i]));
            const double cens = -std::log(unif(rng)) / 0.03;
            t[i] = std::ceil(std::min(ev, cens));
            d[i] = ev <= cens;
            X(i, 0) = x[i];
        }
        const CoxSurvivalModel m = fit_cox(X, t, d, 1e9);
        worst_cox = std::max(worst_cox, std::abs(m.coefficients[0] - oracles::grid_argmax(x, t, d)));
    }
    report("C5", worst_cox <= 1e-4, "Cox fit vs grid oracle", "max error " + fmt("%.2e", worst_cox));

    // No covariates: Nelson-Aalen.
    double worst_na = 0.0;
    {
        Rng rng(55);
        boost::random::uniform_01<double> unif;
        const int n = 300;
        std::vector<double> t(n);
        std::vector<int> d(n);
        for (int i = 0; i < n; ++i) {
            t[i] = std::ceil(40.0 * unif(rng));
            d[i] = unif(rng) < 0.6;
        }
        const CoxSurvivalModel m = fit_cox(RowMatrix(n, 0), t, d, 40.0);
        const std::set<double> times(t.begin(), t.end());
        double cum = 0.0;
        for (double s : times) {
            int events = 0, risk = 0;
            for (int i = 0; i < n; ++i) {
                risk += t[i] >= s;
                events += t[i] == s && d[i];
            }
            cum += static_cast<double>(events) / risk;
            const double fitted = predict_survival(m, s, std::span<const double>{});
            worst_na = std::max(worst_na, std::abs(fitted - std::exp(-cum)));
        }
    }
    report("C5", worst_na <= 4.0 * std::numeric_limits<double>::epsilon(), "Cox without covariates vs Nelson-Aalen",
           "max error " + fmt("%.2e", worst_na));
}

// The same trial with no treatment-unrelated events.
TrialDataset uncensored(const SimulatedTrial& sim) {
    std::vector<SubjectRecord> rs;
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
        SubjectRecord r = sim.data.record(i);
        const auto a = static_cast<std::size_t>(r.arm);
        const double t = sim.latent[i].t[a];
        r.event = t > 52.0 ? EventKind::Completed : EventKind::TrtRelated;
        r.followup_time = std::min(t, 52.0);
        r.outcome.reset();
        if (t > 52.0) r.outcome = sim.latent[i].y[a];
        rs.push_back(r);
    }
    return TrialDataset(rs, sim.data.covariate_names(), 52.0);
}

void criterion_6() {
    double worst_center = 0.0;
    for (Regime r : kAllRegimes) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const SimulatedTrial sim = dgp_generate(regime_spec(r, 1000, seed));
            const EstimateReport rep = estimate_eif(sim.data, fit_nuisance_set(sim.data));
            const double mean = std::accumulate(rep.contributions.begin(), rep.contributions.end(), 0.0) /
                                static_cast<double>(rep.contributions.size());
            worst_center = std::max(worst_center, std::abs(mean));
        }
    }
    report("C6", worst_center < 1e-10, "centered influence values have mean zero", "max |mean| " + fmt("%.2e", worst_center));

    bool exact = true;
    std::string detail;
    for (std::uint64_t seed : {4u, 5u}) {
        const TrialDataset d = uncensored(dgp_generate(regime_spec(Regime::AllCorrect, 800, seed)));
        const NuisanceSet ns = fit_nuisance_set(d);
        const auto rep = estimate_all(kAllEstimators, d, ns);
        const bool g_is_one = predict_survival(ns.g0, 52.0, d.covariates(0)) == 1.0 &&
                              predict_survival(ns.g1, 52.0, d.covariates(0)) == 1.0;
        exact = exact && g_is_one && rep[3].point == rep[2].point && rep[4].point == rep[1].point;
        detail += "eif-aug " + fmt("%.1e", rep[3].point - rep[2].point) + " mcipw-ipw " +
                  fmt("%.1e", rep[4].point - rep[1].point) + "; ";
    }
    report("C6", exact, "eif = aug and mcipw = ipw without censoring", detail);

    double worst_shift = 0.0;
    for (Regime r : {Regime::AllCorrect, Regime::MuSWrong}) {
        const SimulatedTrial sim = dgp_generate(regime_spec(r, 700, 12));
        NuisanceConfig cfg;
        cfg.fit_pooled_ice = true;
        const auto base = estimate_all(kAllEstimators, sim.data, fit_nuisance_set(sim.data, cfg));
        for (double c : {-3.0, 2.5, 40.0}) {
            const TrialDataset shifted = sim.data.with_outcome_shift(c, c);
            const auto moved = estimate_all(kAllEstimators, shifted, fit_nuisance_set(shifted, cfg));
            for (std::size_t j = 0; j < base.size(); ++j) {
                worst_shift = std::max(worst_shift, std::abs(moved[j].point - base[j].point) /
                                                        std::max(1.0, std::abs(base[j].point)));
            }
        }
    }
    report("C6", worst_shift <= 1e-9, "location equivariance under (Y, v) shifts",
           "max relative change " + fmt("%.2e", worst_shift));

    // Augmentation terms mu S / e * integral dM_G / (S G), true and fitted nuisances.
    const DgpSpec spec = regime_spec(Regime::AllCorrect, 4000, 4000);
    const SimulatedTrial sim = dgp_generate(spec);
    auto terms = [&](const NuisanceEvaluation& ev) {
        std::vector<double> v;
        for (std::size_t i = 0; i < sim.data.size(); ++i) {
            const double e = ev.propensity[i];
            v.push_back(sim.data.arm(i) == 1 ? ev.mu_s1[i] * ev.martingale[i] / e
                                             : -ev.mu_s0[i] * ev.martingale[i] / (1.0 - e));
        }
        return mean_se(v);
    };
    const MeanSe truth = terms(oracle_evaluation(DgpTruth(spec), sim.data));
    report("C6", std::abs(truth.mean) < 3.0 * truth.se, "martingale augmentation mean, true G",
           fmt("%+.5f", truth.mean) + " vs 3 SE " + fmt("%.5f", 3.0 * truth.se));
    const MeanSe fitted = terms(evaluate_nuisances(sim.data, fit_nuisance_set(sim.data), true));
    report("C6", std::abs(fitted.mean) < 3.0 * fitted.se, "martingale augmentation mean, fitted G",
           fmt("%+.5f", fitted.mean) + " vs 3 SE " + fmt("%.5f", 3.0 * fitted.se));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_7() {
    const fs::path dir = fs::temp_directory_path() / "icetrial_acceptance";
    fs::create_directories(dir);
    auto simulate = [&](unsigned threads) {
        const fs::path table = dir / ("table_" + std::to_string(threads) + ".tsv");
        const fs::path summary = dir / ("summary_" + std::to_string(threads) + ".json");
        std::ostringstream out, err;
        const int code = cli::run({"icetrial", "simulate", "--regime", "all", "--adhoc", "--reps", "12", "--n", "300",
                                   "--bootstrap", "10", "--seed", "11", "--threads", std::to_string(threads), "--out",
                                   table.string(), "--json", summary.string()},
                                  out, err);
        return code == 0 ? slurp(table) + slurp(summary) : "exit " + std::to_string(code) + ": " + err.str();
    };
    const std::string one = simulate(1);
    const std::string four = simulate(4);
    report("C7", one == four && one.rfind("exit ", 0) != 0, "simulation tables, 1 vs 4 threads",
           std::to_string(one.size()) + " bytes, identical " + (one == four ? "yes" : "no"));

    const SimulatedTrial sim = dgp_generate(regime_spec(Regime::EGWrong, 500, 8));
    auto boot = [&](unsigned threads) {
        BootstrapOptions o;
        o.replicates = 60;
        o.seed = 99;
        o.threads = threads;
        Json j = Json::array();
        for (const auto& r : bootstrap(sim.data, kAllEstimators, o)) j.push_back(to_json(r));
        const auto reps = bootstrap_replicates(sim.data, kProposedEstimators, o);
        for (const auto& p : reps.points) j.push_back(p ? Json(*p) : Json());
        return j.dump();
    };
    const std::string b1 = boot(1);
    const std::string b4 = boot(4);
    report("C7", b1 == b4, "bootstrap results, 1 vs 4 threads",
           std::to_string(b1.size()) + " bytes, identical " + (b1 == b4 ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only(argv + 1, argv + argc);
    auto wanted = [&](const char* id) { return only.empty() || only.count(id) > 0; };
    const unsigned threads = default_thread_count();
    std::cout << "# threads " << threads << "\n";
    Runs runs;
    const auto start = std::chrono::steady_clock::now();
    if (wanted("C5")) criterion_5();
    if (wanted("C6")) criterion_6();
    if (wanted("C7")) criterion_7();
    if (wanted("C4")) criterion_4(threads);
    if (wanted("C1")) criterion_1(runs, threads);
    if (wanted("C2")) criterion_2(runs, threads);
    if (wanted("C3")) criterion_3(runs, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("# %d passed, %d failed, %.0f s\n", g_passed, g_failed, secs);
    return g_failed == 0 ? 0 : 1;
}
