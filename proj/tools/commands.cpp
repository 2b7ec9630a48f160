#include "commands.hpp"

#include "icetrial/dgp.hpp"
#include "icetrial/errors.hpp"
#include "icetrial/estimators.hpp"
#include "icetrial/inference.hpp"
#include "icetrial/monte_carlo.hpp"
#include "icetrial/nuisance.hpp"
#include "icetrial/parallel.hpp"
#include "icetrial/serialize.hpp"
#include "icetrial/trial_data.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace icetrial::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::string> string_list(const Json& j) {
    if (j.is_string()) return split_list(j.get<std::string>());
    return j.get<std::vector<std::string>>();
}

template <class T>
void read_optional(const Json& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        dst.reset();
    } else {
        dst = j.at(key).get<T>();
    }
}

template <class T>
void read(const Json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw DataError("config file '" + path + "' must hold a JSON object");
    try {
        read(j, "input", cfg.input);
        read_optional(j, "k", cfg.k);
        read(j, "v", cfg.v);
        if (j.contains("estimators")) cfg.estimators = string_list(j.at("estimators"));
        read(j, "bootstrap", cfg.bootstrap);
        read(j, "seed", cfg.seed);
        read_optional(j, "known_propensity", cfg.known_propensity);
        read(j, "format", cfg.format);
        read_optional(j, "weight_cap", cfg.weight_cap);
        read(j, "outcome_link", cfg.outcome_link);
        read(j, "id_column", cfg.id_column);
        read(j, "arm_column", cfg.arm_column);
        read(j, "time_column", cfg.time_column);
        read(j, "event_column", cfg.event_column);
        read(j, "outcome_column", cfg.outcome_column);
        if (j.contains("covariates")) cfg.covariates = string_list(j.at("covariates"));
        if (j.contains("regime")) cfg.regimes = string_list(j.at("regime"));
        if (j.contains("regimes")) cfg.regimes = string_list(j.at("regimes"));
        read(j, "reps", cfg.reps);
        read(j, "n", cfg.n);
        read(j, "adhoc", cfg.adhoc);
        read(j, "json", cfg.json_out);
        read(j, "out", cfg.out);
        read(j, "threads", cfg.threads);
    } catch (const Json::exception& e) {
        throw DataError("config file '" + path + "': " + e.what());
    }
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

// Thread count and output paths are left out so files do not depend on them.
Json analyze_provenance(const RunConfig& c) {
    return Json{{"command", "analyze"},
                {"input", c.input},
                {"k", optional_json(c.k)},
                {"v", c.v},
                {"estimators", c.estimators},
                {"bootstrap", c.bootstrap},
                {"seed", c.seed},
                {"known_propensity", optional_json(c.known_propensity)},
                {"format", c.format},
                {"weight_cap", optional_json(c.weight_cap)},
                {"outcome_link", c.outcome_link},
                {"id_column", c.id_column},
                {"arm_column", c.arm_column},
                {"time_column", c.time_column},
                {"event_column", c.event_column},
                {"outcome_column", c.outcome_column},
                {"covariates", c.covariates}};
}

Json simulate_provenance(const RunConfig& c) {
    return Json{{"command", "simulate"}, {"regimes", c.regimes}, {"reps", c.reps},     {"n", c.n},
                {"bootstrap", c.bootstrap}, {"seed", c.seed},   {"adhoc", c.adhoc}};
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open output file '" + path + "'");
    f << text;
    if (!f) throw DataError("failed writing '" + path + "'");
}

void validate(const RunConfig& c) {
    if (c.bootstrap < 0) throw DataError("bootstrap must be >= 0");
    if (c.bootstrap == 1) throw DataError("bootstrap must be 0 or at least 2");
    if (c.format != "tsv" && c.format != "json") throw DataError("format must be tsv or json");
    if (c.weight_cap && !(*c.weight_cap > 0.0)) throw DataError("weight cap must be positive");
    if (c.threads < 1) throw DataError("threads must be at least 1");
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const FitError& e) {
        err << "fit error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(cfg);
        if (cfg.input.empty()) throw DataError("--input is required");
        if (!cfg.k || !(*cfg.k > 0.0)) throw DataError("horizon --k must be given and positive");
        if (cfg.estimators.empty()) throw DataError("estimator set must be non-empty");
        std::vector<EstimatorKind> kinds;
        for (const auto& name : cfg.estimators) {
            const EstimatorKind kind = parse_estimator_kind(name);
            if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
        }

        CsvSchema schema;
        schema.id = cfg.id_column;
        schema.arm = cfg.arm_column;
        schema.time = cfg.time_column;
        schema.event = cfg.event_column;
        schema.outcome = cfg.outcome_column;
        schema.covariates = cfg.covariates;
        const TrialDataset data = load_dataset(cfg.input, schema, *cfg.k, cfg.v);

        NuisanceConfig ncfg;
        ncfg.known_propensity = cfg.known_propensity;
        if (cfg.outcome_link == "logit") {
            ncfg.outcome_link = Link::Logit;
        } else if (cfg.outcome_link != "identity") {
            throw DataError("outcome link must be identity or logit");
        }
        ncfg.fit_pooled_ice = std::find(kinds.begin(), kinds.end(), EstimatorKind::Hs) != kinds.end();
        EstimatorOptions eopt;
        eopt.weight_cap = cfg.weight_cap;

        const NuisanceSet ns = fit_nuisance_set(data, ncfg);
        const auto reports = estimate_all(kinds, data, ns, eopt);

        std::vector<AnalysisRow> rows;
        Json estimates = Json::array();
        std::vector<double> points;
        for (const auto& r : reports) points.push_back(r.point);

        std::optional<BootstrapReplicates> reps;
        std::vector<BootstrapResult> boot;
        BootstrapOptions bopt;
        bopt.replicates = cfg.bootstrap;
        bopt.seed = cfg.seed;
        bopt.threads = cfg.threads;
        bopt.nuisance = ncfg;
        bopt.estimator = eopt;
        if (cfg.bootstrap > 0) {
            reps = bootstrap_replicates(data, kinds, bopt);
            boot = summarize_bootstrap(points, *reps, bopt);
        }
        for (std::size_t j = 0; j < reports.size(); ++j) {
            AnalysisRow row;
            row.estimator = std::string(to_string(kinds[j]));
            row.point = reports[j].point;
            Json e = to_json(reports[j]);
            if (kinds[j] == EstimatorKind::Eif) {
                row.plugin_se = eif_variance(reports[j].contributions);
                e["plugin_se"] = *row.plugin_se;
            }
            if (!boot.empty()) {
                row.se = boot[j].se;
                row.p_value = boot[j].p_value;
                row.ci_lower = boot[j].ci_lower;
                row.ci_upper = boot[j].ci_upper;
                e["bootstrap"] = to_json(boot[j]);
            }
            rows.push_back(row);
            estimates.push_back(e);
        }

        const auto index_of = [&](EstimatorKind k) -> std::optional<std::size_t> {
            auto it = std::find(kinds.begin(), kinds.end(), k);
            if (it == kinds.end()) return std::nullopt;
            return static_cast<std::size_t>(it - kinds.begin());
        };
        const auto io = index_of(EstimatorKind::Out), ii = index_of(EstimatorKind::Ipw),
                   ia = index_of(EstimatorKind::Aug), ie = index_of(EstimatorKind::Eif);
        Json diagnostics = nullptr;
        if (io && ii && ia && ie) {
            const double out_p = points[*io], ipw_p = points[*ii], aug_p = points[*ia], eif_p = points[*ie];
            const std::pair<const char*, double> diffs[] = {
                {"aug-ipw", aug_p - ipw_p}, {"aug-out", aug_p - out_p}, {"eif-aug", eif_p - aug_p}};
            std::optional<DiagnosticReport> diag;
            if (reps) {
                diag = diagnostics_from_replicates(out_p, ipw_p, aug_p, eif_p, *reps, bopt);
                diagnostics = to_json(*diag);
            } else {
                diagnostics = Json{{"d_aug_ipw", diffs[0].second},
                                   {"d_aug_out", diffs[1].second},
                                   {"d_eif_aug", diffs[2].second}};
            }
            const double ses[] = {diag ? diag->se_aug_ipw : 0.0, diag ? diag->se_aug_out : 0.0,
                                  diag ? diag->se_eif_aug : 0.0};
            for (int q = 0; q < 3; ++q) {
                AnalysisRow row;
                row.estimator = diffs[q].first;
                row.point = diffs[q].second;
                if (diag) {
                    row.se = ses[q];
                    row.p_value = normal_p_value(row.point, ses[q]);
                    row.ci_lower = row.point - 1.96 * ses[q];
                    row.ci_upper = row.point + 1.96 * ses[q];
                }
                rows.push_back(row);
            }
        }

        const Json provenance = analyze_provenance(cfg);
        std::string text;
        if (cfg.format == "json") {
            Json doc{{"config", provenance},
                     {"n", data.size()},
                     {"estimates", estimates},
                     {"diagnostics", diagnostics},
                     {"nuisance", to_json(ns)}};
            text = doc.dump(2) + "\n";
        } else {
            text = "# config " + provenance.dump() + "\n" + analysis_tsv(rows);
        }
        write_output(cfg.out, text, out);
        return 0;
    });
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(cfg);
        if (cfg.reps < 1) throw DataError("reps must be at least 1");
        if (cfg.n < 20) throw DataError("n must be at least 20");
        std::vector<Regime> regimes;
        for (const auto& name : cfg.regimes) {
            if (name == "all") {
                regimes.assign(kAllRegimes.begin(), kAllRegimes.end());
                break;
            }
            regimes.push_back(parse_regime(name));
        }
        if (regimes.empty()) throw DataError("no regime given");

        MonteCarloOptions mo;
        mo.reps = cfg.reps;
        mo.n = cfg.n;
        mo.bootstrap = cfg.bootstrap;
        mo.seed = cfg.seed;
        mo.threads = cfg.threads;
        mo.adhoc = cfg.adhoc;

        std::vector<MonteCarloSummary> summaries;
        for (Regime r : regimes) summaries.push_back(run_monte_carlo(r, mo));

        Json provenance = simulate_provenance(cfg);
        Json oracles = Json::object();
        for (const auto& s : summaries) {
            oracles[s.spec.name] = Json{{"oracle_tau", s.oracle_value}, {"oracle_se", s.oracle_se}};
        }
        provenance["oracle"] = oracles;
        write_output(cfg.out, "# provenance " + provenance.dump() + "\n" + monte_carlo_tsv(summaries), out);
        if (!cfg.json_out.empty()) {
            Json doc{{"config", simulate_provenance(cfg)}, {"summaries", Json::array()}};
            for (const auto& s : summaries) doc["summaries"].push_back(to_json(s));
            write_output(cfg.json_out, doc.dump(2) + "\n", out);
        }
        return 0;
    });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Treatment-effect estimation for trials with intercurrent events"};
    app.require_subcommand(1);
    RunConfig flags;
    std::string config_file;
    std::string estimators, covariates, regimes;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
    auto track = [&](CLI::Option* o, std::function<void(RunConfig&)> apply) { overrides.emplace_back(o, apply); };

    auto* analyze = app.add_subcommand("analyze", "Estimate effects from a trial CSV");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study over simulation regimes");
    for (auto* sub : {analyze, simulate}) {
        sub->add_option("--config", config_file, "JSON file of RunConfig fields; flags override it");
        track(sub->add_option("--bootstrap", flags.bootstrap, "Bootstrap replicates (0 = point estimates only)"),
              [&](RunConfig& c) { c.bootstrap = flags.bootstrap; });
        track(sub->add_option("--seed", flags.seed, "Random seed"), [&](RunConfig& c) { c.seed = flags.seed; });
        track(sub->add_option("--out", flags.out, "Output table path (default stdout)"),
              [&](RunConfig& c) { c.out = flags.out; });
        track(sub->add_option("--threads", flags.threads, "Worker threads (default from ICETRIAL_THREADS)"),
              [&](RunConfig& c) { c.threads = flags.threads; });
    }

    track(analyze->add_option("--input", flags.input, "Trial CSV"), [&](RunConfig& c) { c.input = flags.input; });
    track(analyze->add_option("--k", flags.k, "Horizon k"), [&](RunConfig& c) { c.k = flags.k; });
    track(analyze->add_option("--v", flags.v, "Failure value v"), [&](RunConfig& c) { c.v = flags.v; });
    track(analyze->add_option("--estimators", estimators, "Comma list of out,ipw,aug,eif,mcipw,nri,hs"),
          [&](RunConfig& c) { c.estimators = split_list(estimators); });
    track(analyze->add_option("--known-propensity", flags.known_propensity, "Design propensity instead of a fit"),
          [&](RunConfig& c) { c.known_propensity = flags.known_propensity; });
    track(analyze->add_option("--format", flags.format, "tsv or json"), [&](RunConfig& c) { c.format = flags.format; });
    track(analyze->add_option("--weight-cap", flags.weight_cap, "Cap on inverse weights"),
          [&](RunConfig& c) { c.weight_cap = flags.weight_cap; });
    track(analyze->add_option("--outcome-link", flags.outcome_link, "identity or logit"),
          [&](RunConfig& c) { c.outcome_link = flags.outcome_link; });
    track(analyze->add_option("--id-column", flags.id_column), [&](RunConfig& c) { c.id_column = flags.id_column; });
    track(analyze->add_option("--arm-column", flags.arm_column), [&](RunConfig& c) { c.arm_column = flags.arm_column; });
    track(analyze->add_option("--time-column", flags.time_column),
          [&](RunConfig& c) { c.time_column = flags.time_column; });
    track(analyze->add_option("--event-column", flags.event_column),
          [&](RunConfig& c) { c.event_column = flags.event_column; });
    track(analyze->add_option("--outcome-column", flags.outcome_column),
          [&](RunConfig& c) { c.outcome_column = flags.outcome_column; });
    track(analyze->add_option("--covariates", covariates, "Comma list of covariate columns"),
          [&](RunConfig& c) { c.covariates = split_list(covariates); });

    track(simulate->add_option("--regime", regimes, "Comma list of presets, or all"),
          [&](RunConfig& c) { c.regimes = split_list(regimes); });
    track(simulate->add_option("--reps", flags.reps, "Monte Carlo replicates"), [&](RunConfig& c) { c.reps = flags.reps; });
    track(simulate->add_option("--n", flags.n, "Sample size per replicate"), [&](RunConfig& c) { c.n = flags.n; });
    track(simulate->add_flag("--adhoc", flags.adhoc, "Add NRI and HS comparators"),
          [&](RunConfig& c) { c.adhoc = flags.adhoc; });
    track(simulate->add_option("--json", flags.json_out, "Also write a JSON summary here"),
          [&](RunConfig& c) { c.json_out = flags.json_out; });

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    RunConfig cfg;
    cfg.threads = default_thread_count();
    if (simulate->parsed()) {
        cfg.bootstrap = 100;
        cfg.seed = 20250101;
    }
    if (!config_file.empty()) {
        try {
            apply_config_file(cfg, config_file);
        } catch (const DataError& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
    for (auto& [opt, apply] : overrides) {
        if (opt->count() > 0) apply(cfg);
    }
    return analyze->parsed() ? cmd_analyze(cfg, out, err) : cmd_simulate(cfg, out, err);
}

}  // namespace icetrial::cli
