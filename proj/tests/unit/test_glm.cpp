#include "doctest.h"

#include "solver_oracles.hpp"

#include "icetrial/errors.hpp"
#include "icetrial/glm.hpp"
#include "icetrial/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <numeric>
#include <vector>

using namespace icetrial;

namespace {

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
    std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), Eigen::Index{0});
    return r;
}

}  // namespace

TEST_SUITE("glm") {

TEST_CASE("intercept-only logit recovers the log odds") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(100, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(100);
    y.head(30).setOnes();
    const auto m = fit_glm(X, y, Link::Logit, all_rows(100));
    CHECK(m.coefficients[0] == doctest::Approx(std::log(30.0 / 70.0)).epsilon(1e-12));
    CHECK(m.coefficients[0] == doctest::Approx(-0.8473).epsilon(1e-4));
    CHECK(m.convergence.score_norm < 1e-8);
}

TEST_CASE("identity link interpolates an exact line") {
    Eigen::MatrixXd X(5, 2);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i - 1.5;
        y[i] = 2.0 + 3.0 * X(i, 1);
    }
    const auto m = fit_glm(X, y, Link::Identity, all_rows(5), GlmRole::OutcomeArm1);
    CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.coefficients[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.predict(std::vector<double>{10.0}) == doctest::Approx(32.0));
}

TEST_CASE("ten-row logit matches an independent Newton iteration") {
    const std::vector<double> x = {-1.2, -0.7, -0.3, 0.0, 0.2, 0.5, 0.9, 1.1, 1.6, 2.0};
    const std::vector<double> y = {0, 0, 1, 0, 1, 0, 1, 1, 0, 1};
    Eigen::MatrixXd X(10, 2);
    Eigen::VectorXd Y(10);
    for (int i = 0; i < 10; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = x[static_cast<std::size_t>(i)];
        Y[i] = y[static_cast<std::size_t>(i)];
    }
    const auto m = fit_glm(X, Y, Link::Logit, all_rows(10));
    const auto [a, b] = oracles::newton_logit(x, y);
    CHECK(std::abs(m.coefficients[0] - a) < 1e-6);
    CHECK(std::abs(m.coefficients[1] - b) < 1e-6);
}

TEST_CASE("score equations hold at convergence on the fitting subset") {
    Rng rng(11);
    boost::random::normal_distribution<double> z;
    const int n = 400;
    Eigen::MatrixXd X(n, 4);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < 4; ++j) X(i, j) = z(rng);
        const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.5 * X(i, 1) - 0.4 * X(i, 3))));
        y[i] = uniform_open01(rng) < p ? 1.0 : 0.0;
    }
    std::vector<Eigen::Index> subset;
    for (Eigen::Index i = 0; i < n; i += 2) subset.push_back(i);
    const auto m = fit_glm(X, y, Link::Logit, subset);
    Eigen::VectorXd score = Eigen::VectorXd::Zero(4);
    for (Eigen::Index i : subset) {
        const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(m.coefficients)));
        score += X.row(i).transpose() * (y[i] - p);
    }
    CHECK(score.norm() < 1e-6);
    for (int j = 0; j < 4; ++j) CHECK(std::isfinite(m.coefficients[j]));

    const auto lin = fit_glm(X, y, Link::Identity, subset);
    Eigen::VectorXd lin_score = Eigen::VectorXd::Zero(4);
    for (Eigen::Index i : subset) lin_score += X.row(i).transpose() * (y[i] - X.row(i).dot(lin.coefficients));
    CHECK(lin_score.norm() < 1e-9);
}

TEST_CASE("logit predictions stay strictly inside the unit interval") {
    LinearPredictorModel m;
    m.link = Link::Logit;
    m.coefficients = Eigen::Vector2d(0.0, 1.0);
    CHECK(m.predict(std::vector<double>{100.0}) == 1.0 - kProbabilityClamp);
    CHECK(m.predict(std::vector<double>{-100.0}) == kProbabilityClamp);
    CHECK(m.predict(std::vector<double>{0.0}) == 0.5);
}

TEST_CASE("perfect separation is reported") {
    Eigen::MatrixXd X(8, 2);
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i;
        y[i] = i >= 4 ? 1.0 : 0.0;
    }
    CHECK_THROWS_AS(fit_glm(X, y, Link::Logit, all_rows(8)), FitError);
}

TEST_CASE("rank deficiency and empty subsets are reported") {
    Eigen::MatrixXd X(6, 3);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i;
        X(i, 2) = 2.0 * i;
        y[i] = i % 2;
    }
    CHECK_THROWS_AS(fit_glm(X, y, Link::Identity, all_rows(6)), FitError);
    CHECK_THROWS_AS(fit_glm(X, y, Link::Logit, all_rows(6)), FitError);
    CHECK_THROWS_AS(fit_glm(X, y, Link::Identity, std::span<const Eigen::Index>{}), FitError);
}

}  // TEST_SUITE
