#include "icetrial/glm.hpp"

#include "icetrial/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace icetrial {

std::string_view to_string(Link link) noexcept {
    return link == Link::Logit ? "logit" : "identity";
}

std::string_view to_string(GlmRole role) noexcept {
    switch (role) {
        case GlmRole::Propensity: return "propensity";
        case GlmRole::OutcomeArm0: return "outcome_arm0";
        case GlmRole::OutcomeArm1: return "outcome_arm1";
    }
    return "unknown";
}

double LinearPredictorModel::linear_predictor(std::span<const double> x) const {
    double eta = coefficients[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[static_cast<Eigen::Index>(j) + 1] * x[j];
    return eta;
}

double LinearPredictorModel::predict(std::span<const double> x) const {
    const double eta = linear_predictor(x);
    if (link == Link::Identity) return eta;
    const double p = 1.0 / (1.0 + std::exp(-eta));
    return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

namespace {

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta) {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
    return ll;
}

}  // namespace

LinearPredictorModel fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             Link link, std::span<const Eigen::Index> subset, GlmRole role,
                             const SolverOptions& options) {
    if (subset.empty()) throw FitError(std::string(to_string(role)) + ": empty fitting subset");
    if (design.rows() != response.size()) throw FitError("design and response sizes differ");
    const auto m = static_cast<Eigen::Index>(subset.size());
    const Eigen::Index q = design.cols();
    Eigen::MatrixXd X(m, q);
    Eigen::VectorXd y(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        X.row(r) = design.row(subset[static_cast<std::size_t>(r)]);
        y[r] = response[subset[static_cast<std::size_t>(r)]];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < q) {
        throw FitError(std::string(to_string(role)) + ": design matrix is rank deficient on the fitting subset");
    }

    LinearPredictorModel model;
    model.link = link;
    model.role = role;

    if (link == Link::Identity) {
        model.coefficients = qr.solve(y);
        const Eigen::VectorXd resid = y - X * model.coefficients;
        model.convergence = {1, (X.transpose() * resid).norm(), -0.5 * resid.squaredNorm()};
        return model;
    }

    for (Eigen::Index r = 0; r < m; ++r) {
        if (y[r] < 0.0 || y[r] > 1.0) throw FitError(std::string(to_string(role)) + ": logit response outside [0, 1]");
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
    double ll = bernoulli_loglik(eta, y);
    Eigen::VectorXd mu(m), w(m);
    bool settled = false;
    for (int iter = 0;; ++iter) {
        for (Eigen::Index r = 0; r < m; ++r) {
            mu[r] = 1.0 / (1.0 + std::exp(-eta[r]));
            w[r] = mu[r] * (1.0 - mu[r]);
        }
        const Eigen::VectorXd score = X.transpose() * (y - mu);
        const double gnorm = score.norm();
        if (gnorm < options.gradient_tolerance || settled) {
            model.coefficients = beta;
            model.convergence = {iter, gnorm, ll};
            break;
        }
        if (iter == options.max_iterations) {
            if (eta.cwiseAbs().maxCoeff() > 30.0) {
                throw FitError(std::string(to_string(role)) + ": perfect separation, coefficients diverging");
            }
            throw FitError(std::string(to_string(role)) + ": IRLS did not converge in " +
                           std::to_string(options.max_iterations) + " iterations");
        }
        const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw FitError(std::string(to_string(role)) + ": singular information matrix (possible separation)");
        }
        const Eigen::VectorXd step = ldlt.solve(score);

        // Decreases within rounding of the log-likelihood do not count.
        const double slack = 1e-12 * (1.0 + std::abs(ll));
        double scale = 1.0;
        Eigen::VectorXd beta_new, eta_new;
        double ll_new = -INFINITY;
        for (int halving = 0; halving < 30; ++halving) {
            beta_new = beta + scale * step;
            eta_new = X * beta_new;
            ll_new = bernoulli_loglik(eta_new, y);
            if (ll_new >= ll - slack) break;
            scale *= 0.5;
        }
        if (!(ll_new >= ll - slack)) {
            throw FitError(std::string(to_string(role)) + ": IRLS step halving failed");
        }
        const double rel_change = std::abs(ll_new - ll) / (std::abs(ll) + 1e-300);
        beta = beta_new;
        eta = eta_new;
        ll = ll_new;
        settled = rel_change < options.relative_loglik_tolerance && gnorm < 1e3 * options.gradient_tolerance;
    }
    if (!beta.allFinite()) throw FitError(std::string(to_string(role)) + ": non-finite coefficients");
    // Finite-step convergence with fitted probabilities numerically 0 or 1
    // means the likelihood is still increasing along a separating direction.
    if (eta.cwiseAbs().maxCoeff() > 30.0) {
        throw FitError(std::string(to_string(role)) + ": perfect separation, coefficients diverging");
    }
    return model;
}

}  // namespace icetrial
