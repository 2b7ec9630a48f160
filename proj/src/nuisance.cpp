#include "icetrial/nuisance.hpp"

#include "icetrial/errors.hpp"

#include <algorithm>

namespace icetrial {

double NuisanceSet::propensity_at(std::span<const double> x) const {
    if (known_propensity) return *known_propensity;
    return propensity->predict(x);
}

Eigen::MatrixXd glm_design(const TrialDataset& d) {
    const auto n = static_cast<Eigen::Index>(d.size());
    const auto p = static_cast<Eigen::Index>(d.dimension());
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = d.covariates();
    return design;
}

CoxSurvivalModel fit_cox_or_null(const TrialDataset& d, int arm, EventRole role, const SolverOptions& solver,
                                 std::vector<std::string>* null_models) {
    bool has_event = false;
    for (std::size_t i = 0; i < d.size() && !has_event; ++i) {
        if (d.arm(i) != arm) continue;
        const EventKind e = d.event(i);
        has_event = role == EventRole::AnyIce ? e != EventKind::Completed
                    : role == EventRole::TrtRelated ? e == EventKind::TrtRelated
                                                    : e == EventKind::TrtUnrelated;
    }
    if (!has_event) {
        if (null_models) null_models->push_back("cox(arm " + std::to_string(arm) + ", " + std::string(to_string(role)) + ")");
        return null_cox_model(d.dimension(), arm, role, d.horizon());
    }
    return fit_cox(d, arm, role, solver);
}

NuisanceSet fit_nuisance_set(const TrialDataset& d, const NuisanceConfig& config) {
    d.require_estimable();
    const Eigen::MatrixXd design = glm_design(d);
    const auto n = static_cast<Eigen::Index>(d.size());

    NuisanceSet ns;
    if (config.known_propensity) {
        const double e = *config.known_propensity;
        if (!(e > 0.0 && e < 1.0)) throw DataError("known propensity must lie in (0, 1)");
        ns.known_propensity = e;
    } else {
        Eigen::VectorXd treat(n);
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            treat[i] = d.arm(static_cast<std::size_t>(i));
            all[static_cast<std::size_t>(i)] = i;
        }
        ns.propensity = fit_glm(design, treat, Link::Logit, all, GlmRole::Propensity, config.solver);
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    std::array<std::vector<Eigen::Index>, 2> completed;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (d.event(ui) == EventKind::Completed) {
            y[i] = *d.outcome(ui);
            completed[static_cast<std::size_t>(d.arm(ui))].push_back(i);
        }
    }
    ns.outcome0 = fit_glm(design, y, config.outcome_link, completed[0], GlmRole::OutcomeArm0, config.solver);
    ns.outcome1 = fit_glm(design, y, config.outcome_link, completed[1], GlmRole::OutcomeArm1, config.solver);

    ns.s0 = fit_cox_or_null(d, 0, EventRole::TrtRelated, config.solver, &ns.null_models);
    ns.s1 = fit_cox_or_null(d, 1, EventRole::TrtRelated, config.solver, &ns.null_models);
    ns.g0 = fit_cox_or_null(d, 0, EventRole::TrtUnrelated, config.solver, &ns.null_models);
    ns.g1 = fit_cox_or_null(d, 1, EventRole::TrtUnrelated, config.solver, &ns.null_models);
    if (config.fit_pooled_ice) {
        ns.pooled_ice = std::array<CoxSurvivalModel, 2>{
            fit_cox_or_null(d, 0, EventRole::AnyIce, config.solver, &ns.null_models),
            fit_cox_or_null(d, 1, EventRole::AnyIce, config.solver, &ns.null_models)};
    }
    return ns;
}

}  // namespace icetrial
