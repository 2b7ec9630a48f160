#pragma once

#include <Eigen/Core>

#include <span>
#include <string_view>

namespace icetrial {

enum class Link { Logit, Identity };
enum class GlmRole { Propensity, OutcomeArm0, OutcomeArm1 };

std::string_view to_string(Link link) noexcept;
std::string_view to_string(GlmRole role) noexcept;

struct GlmConvergence {
    int iterations = 0;
    double score_norm = 0.0;      // ||X'(y - mu)|| at the solution
    double log_likelihood = 0.0;  // Bernoulli log-likelihood (Logit) or -RSS/2 (Identity)
};

// Fitted generalized linear model; coefficients are intercept first.
struct LinearPredictorModel {
    Eigen::VectorXd coefficients;
    Link link = Link::Identity;
    GlmRole role = GlmRole::Propensity;
    GlmConvergence convergence;

    double linear_predictor(std::span<const double> x) const;
    // Mean response; Logit predictions are clamped to [kProbabilityClamp, 1 - kProbabilityClamp].
    double predict(std::span<const double> x) const;
};

inline constexpr double kProbabilityClamp = 1e-6;

struct SolverOptions {
    int max_iterations = 100;
    double gradient_tolerance = 1e-8;
    double relative_loglik_tolerance = 1e-10;
};

// Fits on the rows listed in `subset`. The design matrix must already contain
// the intercept column. Throws FitError on rank deficiency, separation, or
// non-convergence.
LinearPredictorModel fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             Link link, std::span<const Eigen::Index> subset,
                             GlmRole role = GlmRole::Propensity, const SolverOptions& options = {});

}  // namespace icetrial
