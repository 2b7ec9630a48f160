#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace icetrial {

// Input that violates the observed-data structure. `row` is the 1-based data
// row of the offending record when the error came from a file.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(row ? "row " + std::to_string(*row) + ": " + what : what),
          row_(row) {}

    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

// A nuisance model could not be fitted (rank deficiency, separation,
// divergence, no events).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace icetrial
