#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace icetrial {

// Codes match the canonical CSV `event` column.
enum class EventKind : int {
    Completed = 0,     // no ICE before the measurement time k
    TrtRelated = 1,    // treatment-related ICE (composite strategy)
    TrtUnrelated = 2,  // treatment-unrelated ICE (hypothetical strategy, censoring)
};

struct SubjectRecord {
    std::string id;
    std::vector<double> covariates;
    int arm = 0;
    double followup_time = 0.0;  // min(T, C, k)
    EventKind event = EventKind::Completed;
    std::optional<double> outcome;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Immutable, validated collection of subjects stored column-wise.
//
// Construction enforces the per-record invariants, a shared covariate
// dimension, and a non-empty arm for both treatment values. Whether each arm
// also has a Completed record is checked separately by `require_estimable`,
// because some estimators (NRI) remain defined without one.
class TrialDataset {
public:
    TrialDataset(std::vector<SubjectRecord> records, std::vector<std::string> covariate_names,
                 double horizon_k, double failure_value_v = 0.0);

    std::size_t size() const noexcept { return arm_.size(); }
    std::size_t dimension() const noexcept { return covariate_names_.size(); }
    double horizon() const noexcept { return horizon_; }
    double failure_value() const noexcept { return failure_value_; }
    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

    const RowMatrix& covariates() const noexcept { return covariates_; }
    std::span<const double> covariates(std::size_t i) const {
        return {covariates_.row(static_cast<Eigen::Index>(i)).data(), dimension()};
    }
    int arm(std::size_t i) const { return arm_[i]; }
    double followup_time(std::size_t i) const { return time_[i]; }
    EventKind event(std::size_t i) const { return event_[i]; }
    const std::optional<double>& outcome(std::size_t i) const { return outcome_[i]; }
    const std::string& id(std::size_t i) const { return id_[i]; }

    SubjectRecord record(std::size_t i) const;
    std::size_t arm_size(int a) const;
    std::size_t count(int a, EventKind kind) const;

    // Throws DataError unless every arm has at least one Completed record.
    void require_estimable() const;

    // Rows `indices` (with repetition) as a new dataset; used for resampling.
    TrialDataset subset(std::span<const std::size_t> indices) const;

    // Same subjects with every outcome shifted by `outcome_shift` and the
    // failure value replaced.
    TrialDataset with_outcome_shift(double outcome_shift, double failure_value_v) const;

private:
    TrialDataset() = default;
    void validate() const;

    std::vector<std::string> id_;
    RowMatrix covariates_;
    std::vector<int> arm_;
    std::vector<double> time_;
    std::vector<EventKind> event_;
    std::vector<std::optional<double>> outcome_;
    std::vector<std::string> covariate_names_;
    double horizon_ = 0.0;
    double failure_value_ = 0.0;
};

// Validates a single record against horizon k; throws DataError.
void validate_record(const SubjectRecord& r, std::size_t p, double horizon_k);

// Delta = 1{C >= min(T, k)}: 1 for Completed and TrtRelated, 0 for TrtUnrelated.
int delta_indicator(EventKind kind) noexcept;
inline int delta_indicator(const SubjectRecord& r) noexcept { return delta_indicator(r.event); }

// Composite outcome on the failure-shifted scale: Y - v when Completed, 0 for a
// treatment-related ICE, absent for a treatment-unrelated ICE.
std::optional<double> composite_outcome(EventKind kind, const std::optional<double>& outcome,
                                        double failure_value_v);
inline std::optional<double> composite_outcome(const SubjectRecord& r, double /*horizon_k*/,
                                               double failure_value_v) {
    return composite_outcome(r.event, r.outcome, failure_value_v);
}

// Column mapping for CSV ingestion. Empty `covariates` means every column not
// claimed by another role, in file order.
struct CsvSchema {
    std::string id = "id";
    std::vector<std::string> covariates;
    std::string arm = "arm";
    std::string time = "time";
    std::string event = "event";
    std::string outcome = "outcome";
    // Completed rows may carry an administrative time in [k, k + slack];
    // they are normalized to k.
    double completed_time_slack = 0.0;
};

TrialDataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema,
                          double horizon_k, double failure_value_v = 0.0);
TrialDataset parse_dataset(std::string_view csv_text, const CsvSchema& schema, double horizon_k,
                           double failure_value_v = 0.0);

// Canonical CSV: id, covariates..., arm, time, event, outcome; shortest
// round-trip number formatting.
std::string to_csv(const TrialDataset& d);

}  // namespace icetrial
