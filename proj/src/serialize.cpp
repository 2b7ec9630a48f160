#include "icetrial/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace icetrial {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string spec_name(Specification s) { return s == Specification::Correct ? "correct" : "misspecified"; }

EventRole parse_event_role(const std::string& s) {
    for (EventRole r : {EventRole::TrtRelated, EventRole::TrtUnrelated, EventRole::AnyIce}) {
        if (to_string(r) == s) return r;
    }
    throw std::invalid_argument("unknown event role '" + s + "'");
}

LinearPredictorModel glm_from_json(const Json& j) {
    LinearPredictorModel m;
    m.coefficients = from_vector(j.at("coefficients").get<std::vector<double>>());
    m.link = j.at("link").get<std::string>() == "logit" ? Link::Logit : Link::Identity;
    const auto role = j.at("role").get<std::string>();
    m.role = role == "propensity" ? GlmRole::Propensity
             : role == "outcome_arm0" ? GlmRole::OutcomeArm0
                                      : GlmRole::OutcomeArm1;
    return m;
}

CoxSurvivalModel cox_from_json(const Json& j) {
    CoxSurvivalModel m;
    m.coefficients = from_vector(j.at("coefficients").get<std::vector<double>>());
    m.baseline_times = j.at("baseline_times").get<std::vector<double>>();
    m.baseline_increments = j.at("baseline_increments").get<std::vector<double>>();
    if (m.baseline_times.size() != m.baseline_increments.size()) {
        throw std::invalid_argument("baseline times and increments differ in length");
    }
    double cum = 0.0;
    for (double h : m.baseline_increments) m.baseline_cumulative.push_back(cum += h);
    m.arm = j.at("arm").get<int>();
    m.role = parse_event_role(j.at("event_role").get<std::string>());
    m.horizon = j.at("horizon").get<double>();
    return m;
}

}  // namespace

Json to_json(const LinearPredictorModel& m) {
    return Json{{"role", to_string(m.role)},
                {"link", to_string(m.link)},
                {"coefficients", to_vector(m.coefficients)},
                {"iterations", m.convergence.iterations},
                {"score_norm", m.convergence.score_norm}};
}

Json to_json(const CoxSurvivalModel& m) {
    return Json{{"arm", m.arm},
                {"event_role", to_string(m.role)},
                {"horizon", m.horizon},
                {"coefficients", to_vector(m.coefficients)},
                {"baseline_times", m.baseline_times},
                {"baseline_increments", m.baseline_increments},
                {"iterations", m.convergence.iterations},
                {"score_norm", m.convergence.score_norm}};
}

Json to_json(const NuisanceSet& ns) {
    Json j;
    j["known_propensity"] = ns.known_propensity ? Json(*ns.known_propensity) : Json(nullptr);
    j["propensity"] = ns.propensity ? to_json(*ns.propensity) : Json(nullptr);
    j["outcome0"] = to_json(ns.outcome0);
    j["outcome1"] = to_json(ns.outcome1);
    j["s0"] = to_json(ns.s0);
    j["s1"] = to_json(ns.s1);
    j["g0"] = to_json(ns.g0);
    j["g1"] = to_json(ns.g1);
    if (ns.pooled_ice) j["pooled_ice"] = Json::array({to_json((*ns.pooled_ice)[0]), to_json((*ns.pooled_ice)[1])});
    j["null_models"] = ns.null_models;
    return j;
}

NuisanceSet nuisance_set_from_json(const Json& j) {
    NuisanceSet ns;
    if (!j.at("known_propensity").is_null()) ns.known_propensity = j.at("known_propensity").get<double>();
    if (!j.at("propensity").is_null()) ns.propensity = glm_from_json(j.at("propensity"));
    if (!ns.known_propensity && !ns.propensity) throw std::invalid_argument("nuisance set lacks a propensity");
    ns.outcome0 = glm_from_json(j.at("outcome0"));
    ns.outcome1 = glm_from_json(j.at("outcome1"));
    ns.s0 = cox_from_json(j.at("s0"));
    ns.s1 = cox_from_json(j.at("s1"));
    ns.g0 = cox_from_json(j.at("g0"));
    ns.g1 = cox_from_json(j.at("g1"));
    if (j.contains("pooled_ice")) {
        ns.pooled_ice = std::array<CoxSurvivalModel, 2>{cox_from_json(j.at("pooled_ice").at(0)),
                                                        cox_from_json(j.at("pooled_ice").at(1))};
    }
    if (j.contains("null_models")) ns.null_models = j.at("null_models").get<std::vector<std::string>>();
    return ns;
}

Json to_json(const EstimateReport& r, bool with_contributions) {
    Json j{{"estimator", to_string(r.kind)},
           {"point", r.point},
           {"arm_means", {r.arm_means.first, r.arm_means.second}},
           {"augmentation_mean", r.augmentation_mean ? Json(*r.augmentation_mean) : Json(nullptr)},
           {"floored_weights", r.floored_weights},
           {"capped_weights", r.capped_weights}};
    if (with_contributions) j["contributions"] = r.contributions;
    return j;
}

Json to_json(const BootstrapResult& r) {
    return Json{{"estimator", to_string(r.kind)},
                {"point", r.point},
                {"se", r.se},
                {"ci_lower", r.ci_lower},
                {"ci_upper", r.ci_upper},
                {"percentile_lower", r.percentile_lower},
                {"percentile_upper", r.percentile_upper},
                {"p_value", r.p_value},
                {"replicates", r.replicates},
                {"seed", r.seed},
                {"n_failed_replicates", r.n_failed_replicates}};
}

Json to_json(const DiagnosticReport& r) {
    return Json{{"d_aug_ipw", r.d_aug_ipw}, {"se_aug_ipw", r.se_aug_ipw}, {"d_aug_out", r.d_aug_out},
                {"se_aug_out", r.se_aug_out}, {"d_eif_aug", r.d_eif_aug}, {"se_eif_aug", r.se_eif_aug},
                {"replicates", r.replicates}, {"n_failed_replicates", r.n_failed_replicates}};
}

Json to_json(const DgpSpec& s) {
    return Json{{"name", s.name},
                {"propensity", spec_name(s.propensity)},
                {"outcome", spec_name(s.outcome)},
                {"outcome_sd", spec_name(s.outcome_sd)},
                {"event_risk", spec_name(s.event_risk)},
                {"censoring_risk", spec_name(s.censoring_risk)},
                {"censoring_baseline", spec_name(s.censoring_baseline)},
                {"horizon", s.horizon}};
}

Json to_json(const MonteCarloSummary& s) {
    Json est = Json::array();
    for (const auto& e : s.estimators) {
        est.push_back(Json{{"estimator", to_string(e.kind)},
                           {"n_valid", e.n_valid},
                           {"mean", e.mean},
                           {"bias", e.bias},
                           {"sd", e.sd},
                           {"mc_se", e.mc_se},
                           {"coverage", e.coverage ? Json(*e.coverage) : Json(nullptr)}});
    }
    return Json{{"spec", to_json(s.spec)},
                {"reps", s.options.reps},
                {"n", s.options.n},
                {"bootstrap", s.options.bootstrap},
                {"seed", s.options.seed},
                {"adhoc", s.options.adhoc},
                {"oracle_tau", s.oracle_value},
                {"oracle_se", s.oracle_se},
                {"failed_replicates", s.failed_replicates},
                {"estimators", est}};
}

std::string format_tsv_number(std::optional<double> x) {
    if (!x || std::isnan(*x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", *x);
    return buf;
}

std::string analysis_tsv(std::span<const AnalysisRow> rows) {
    std::string out = "estimator\tpoint\tse\tp_value\tci_lower\tci_upper\tplugin_se\n";
    for (const auto& r : rows) {
        out += r.estimator + '\t' + format_tsv_number(r.point) + '\t' + format_tsv_number(r.se) + '\t' +
               format_tsv_number(r.p_value) + '\t' + format_tsv_number(r.ci_lower) + '\t' +
               format_tsv_number(r.ci_upper) + '\t' + format_tsv_number(r.plugin_se) + '\n';
    }
    return out;
}

std::string monte_carlo_tsv(std::span<const MonteCarloSummary> summaries) {
    if (summaries.empty()) return "";
    std::string out = "regime\toracle_tau";
    for (EstimatorKind k : summaries.front().kinds) {
        const std::string name(to_string(k));
        out += '\t' + name + "_bias\t" + name + "_sd\t" + name + "_cr";
    }
    out += "\treps\tfailed\n";
    for (const auto& s : summaries) {
        out += s.spec.name + '\t' + format_tsv_number(s.oracle_value);
        for (EstimatorKind k : summaries.front().kinds) {
            const auto& e = s.at(k);
            out += '\t' + format_tsv_number(e.bias) + '\t' + format_tsv_number(e.sd) + '\t' +
                   format_tsv_number(e.coverage);
        }
        out += '\t' + std::to_string(s.options.reps) + '\t' + std::to_string(s.failed_replicates) + '\n';
    }
    return out;
}

}  // namespace icetrial
