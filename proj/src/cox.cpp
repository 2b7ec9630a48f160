#include "icetrial/cox.hpp"

#include "icetrial/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace icetrial {

std::string_view to_string(EventRole role) noexcept {
    switch (role) {
        case EventRole::TrtRelated: return "trt_related";
        case EventRole::TrtUnrelated: return "trt_unrelated";
        case EventRole::AnyIce: return "any_ice";
    }
    return "unknown";
}

double CoxSurvivalModel::relative_risk(std::span<const double> x) const {
    double eta = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[static_cast<Eigen::Index>(j)] * x[j];
    return std::exp(eta);
}

double CoxSurvivalModel::cumulative_baseline(double t) const {
    auto it = std::upper_bound(baseline_times.begin(), baseline_times.end(), t);
    if (it == baseline_times.begin()) return 0.0;
    return baseline_cumulative[static_cast<std::size_t>(it - baseline_times.begin()) - 1];
}

double CoxSurvivalModel::cumulative_baseline_before(double t) const {
    auto it = std::lower_bound(baseline_times.begin(), baseline_times.end(), t);
    if (it == baseline_times.begin()) return 0.0;
    return baseline_cumulative[static_cast<std::size_t>(it - baseline_times.begin()) - 1];
}

CoxSurvivalModel null_cox_model(std::size_t p, int arm, EventRole role, double horizon) {
    CoxSurvivalModel m;
    m.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    m.arm = arm;
    m.role = role;
    m.horizon = horizon;
    return m;
}

namespace {

// Subjects sorted by decreasing time, grouped by tied time.
struct TieGroup {
    double time;
    std::size_t begin, end;  // range into `order`
    int events;
};

struct RiskSetEval {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd information;
};

RiskSetEval evaluate(const Eigen::MatrixXd& xc, std::span<const int> event,
                     const std::vector<std::size_t>& order, const std::vector<TieGroup>& groups,
                     const Eigen::VectorXd& beta, bool derivatives) {
    const Eigen::Index p = xc.cols();
    const Eigen::VectorXd eta = xc * beta;
    const double shift = eta.size() ? eta.maxCoeff() : 0.0;
    RiskSetEval out;
    out.score = Eigen::VectorXd::Zero(p);
    out.information = Eigen::MatrixXd::Zero(p, p);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xsum(p);
    for (const auto& g : groups) {
        xsum.setZero();
        double eta_sum = 0.0;
        for (std::size_t k = g.begin; k < g.end; ++k) {
            const std::size_t i = order[k];
            const auto row = xc.row(static_cast<Eigen::Index>(i));
            const double r = std::exp(eta[static_cast<Eigen::Index>(i)] - shift);
            s0 += r;
            if (derivatives) {
                s1.noalias() += r * row.transpose();
                s2.noalias() += r * row.transpose() * row;
            }
            if (event[i]) {
                eta_sum += eta[static_cast<Eigen::Index>(i)] - shift;
                if (derivatives) xsum += row.transpose();
            }
        }
        if (g.events == 0) continue;
        const double d = g.events;
        out.loglik += eta_sum - d * std::log(s0);
        if (derivatives) {
            const Eigen::VectorXd mean = s1 / s0;
            out.score += xsum - d * mean;
            out.information.noalias() += d * (s2 / s0 - mean * mean.transpose());
        }
    }
    return out;
}

}  // namespace

CoxSurvivalModel fit_cox(const Eigen::Ref<const RowMatrix>& covariates, std::span<const double> time,
                         std::span<const int> event, double horizon, const SolverOptions& options) {
    const std::size_t n = time.size();
    if (static_cast<std::size_t>(covariates.rows()) != n || event.size() != n) {
        throw FitError("cox: input sizes differ");
    }
    const Eigen::Index p = covariates.cols();
    if (std::none_of(event.begin(), event.end(), [](int e) { return e != 0; })) {
        throw FitError("cox: no events for role");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
    std::vector<TieGroup> groups;
    for (std::size_t k = 0; k < n;) {
        TieGroup g{time[order[k]], k, k, 0};
        while (g.end < n && time[order[g.end]] == g.time) {
            g.events += event[order[g.end]] != 0;
            ++g.end;
        }
        groups.push_back(g);
        k = g.end;
    }

    const Eigen::RowVectorXd xbar = n ? Eigen::RowVectorXd(covariates.colwise().mean()) : Eigen::RowVectorXd::Zero(p);
    const Eigen::MatrixXd xc = covariates.rowwise() - xbar;

    CoxSurvivalModel model;
    model.horizon = horizon;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    RiskSetEval cur = evaluate(xc, event, order, groups, beta, true);
    int iter = 0;
    if (p > 0) {
        for (;; ++iter) {
            const double gnorm = cur.score.norm();
            if (gnorm < options.gradient_tolerance) break;
            if (iter == options.max_iterations) {
                throw FitError("cox: Newton-Raphson did not converge in " + std::to_string(options.max_iterations) +
                               " iterations");
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.information);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
                throw FitError("cox: singular information matrix (rank-deficient covariates)");
            }
            const Eigen::VectorXd step = ldlt.solve(cur.score);
            // Decreases within rounding of the log-likelihood do not count.
            const double slack = 1e-12 * (1.0 + std::abs(cur.loglik));
            double scale = 1.0;
            RiskSetEval next;
            Eigen::VectorXd beta_new;
            bool accepted = false;
            for (int halving = 0; halving < 30; ++halving) {
                beta_new = beta + scale * step;
                next = evaluate(xc, event, order, groups, beta_new, true);
                if (next.loglik >= cur.loglik - slack) {
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!accepted) throw FitError("cox: step halving failed");
            const double rel = std::abs(next.loglik - cur.loglik) / (std::abs(cur.loglik) + 1e-300);
            beta = beta_new;
            cur = std::move(next);
            if (rel < options.relative_loglik_tolerance && cur.score.norm() < 1e3 * options.gradient_tolerance) {
                ++iter;
                break;
            }
        }
        if (!beta.allFinite()) throw FitError("cox: non-finite coefficients");
        // Monotone likelihood: the score vanishes only as some coefficient runs off to infinity.
        for (Eigen::Index j = 0; j < p; ++j) {
            const double sd = std::sqrt(xc.col(j).squaredNorm() / std::max<double>(1.0, static_cast<double>(n)));
            if (std::abs(beta[j]) * sd > 20.0) throw FitError("cox: monotone likelihood, coefficients diverging");
        }
    }
    model.coefficients = beta;
    model.convergence = {iter, cur.score.norm(), cur.loglik};

    // Breslow increments, accumulated from the largest time downward.
    const Eigen::VectorXd eta = xc * beta;
    const double offset = -xbar.dot(beta);
    std::vector<std::pair<double, double>> steps;
    double s0 = 0.0;
    for (const auto& g : groups) {
        for (std::size_t k = g.begin; k < g.end; ++k) s0 += std::exp(eta[static_cast<Eigen::Index>(order[k])]);
        if (g.events > 0) steps.emplace_back(g.time, g.events * std::exp(offset) / s0);
    }
    std::reverse(steps.begin(), steps.end());
    double cum = 0.0;
    for (const auto& [t, h] : steps) {
        model.baseline_times.push_back(t);
        model.baseline_increments.push_back(h);
        cum += h;
        model.baseline_cumulative.push_back(cum);
    }
    return model;
}

namespace {

bool is_event(EventKind kind, EventRole role) {
    switch (role) {
        case EventRole::TrtRelated: return kind == EventKind::TrtRelated;
        case EventRole::TrtUnrelated: return kind == EventKind::TrtUnrelated;
        case EventRole::AnyIce: return kind != EventKind::Completed;
    }
    return false;
}

}  // namespace

CoxSurvivalModel fit_cox(const TrialDataset& d, int arm, EventRole role, const SolverOptions& options) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.arm(i) == arm) rows.push_back(static_cast<Eigen::Index>(i));
    }
    RowMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.dimension()));
    std::vector<double> time(rows.size());
    std::vector<int> event(rows.size());
    int n_events = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = static_cast<std::size_t>(rows[r]);
        x.row(static_cast<Eigen::Index>(r)) = d.covariates().row(rows[r]);
        time[r] = d.followup_time(i);
        event[r] = is_event(d.event(i), role) ? 1 : 0;
        n_events += event[r];
    }
    const std::string label = "cox(arm " + std::to_string(arm) + ", " + std::string(to_string(role)) + ")";
    if (n_events == 0) throw FitError(label + ": no events for role");
    try {
        CoxSurvivalModel m = fit_cox(x, time, event, d.horizon(), options);
        m.arm = arm;
        m.role = role;
        return m;
    } catch (const FitError& e) {
        throw FitError(label + ": " + e.what());
    }
}

namespace {

void check_domain(const CoxSurvivalModel& m, double t) {
    if (!(t >= 0.0) || t > m.horizon) {
        throw std::domain_error("survival evaluated at t = " + std::to_string(t) + " outside [0, k]");
    }
}

}  // namespace

double predict_survival(const CoxSurvivalModel& m, double t, std::span<const double> x) {
    check_domain(m, t);
    return std::max(std::exp(-m.cumulative_baseline(t) * m.relative_risk(x)), kSurvivalFloor);
}

double predict_survival_before(const CoxSurvivalModel& m, double t, std::span<const double> x) {
    check_domain(m, t);
    return std::max(std::exp(-m.cumulative_baseline_before(t) * m.relative_risk(x)), kSurvivalFloor);
}

std::vector<std::pair<double, double>> hazard_increments(const CoxSurvivalModel& m, std::span<const double> x) {
    const double rr = m.relative_risk(x);
    std::vector<std::pair<double, double>> out;
    for (std::size_t j = 0; j < m.baseline_times.size() && m.baseline_times[j] <= m.horizon; ++j) {
        out.emplace_back(m.baseline_times[j], m.baseline_increments[j] * rr);
    }
    return out;
}

}  // namespace icetrial
