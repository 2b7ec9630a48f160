#pragma once

#include "icetrial/trial_data.hpp"

#include <optional>
#include <string>
#include <vector>

namespace testing {

inline icetrial::SubjectRecord record(std::vector<double> x, int arm, double time, icetrial::EventKind kind,
                                      std::optional<double> y = std::nullopt) {
    static int counter = 0;
    return icetrial::SubjectRecord{std::to_string(++counter), std::move(x), arm, time, kind, y};
}

inline std::vector<std::string> names(std::size_t p) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < p; ++j) out.push_back("x" + std::to_string(j + 1));
    return out;
}

}  // namespace testing
