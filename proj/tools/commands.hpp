#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace icetrial::cli {

// Resolved settings of one invocation; JSON config files use these field names.
struct RunConfig {
    // analyze
    std::string input;
    std::optional<double> k;
    double v = 0.0;
    std::vector<std::string> estimators = {"out", "ipw", "aug", "eif"};
    int bootstrap = 200;
    std::uint64_t seed = 1;
    std::optional<double> known_propensity;
    std::string format = "tsv";
    std::optional<double> weight_cap;
    std::string outcome_link = "identity";
    std::string id_column = "id";
    std::string arm_column = "arm";
    std::string time_column = "time";
    std::string event_column = "event";
    std::string outcome_column = "outcome";
    std::vector<std::string> covariates;  // empty: every other column
    // simulate
    std::vector<std::string> regimes = {"all_correct"};
    int reps = 200;
    std::size_t n = 1000;
    bool adhoc = false;
    std::string json_out;
    // both
    std::string out;  // empty: stdout
    unsigned threads = 1;
};

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv (argv[0] is the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace icetrial::cli
