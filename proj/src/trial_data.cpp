#include "icetrial/trial_data.hpp"

#include "icetrial/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace icetrial {

namespace {

std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw std::invalid_argument("malformed");
    }
    return v;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// RFC 4180 field splitting for one record; quoted fields may contain commas
// and doubled quotes but not line breaks.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
    }
    q.push_back('"');
    return q;
}

}  // namespace

int delta_indicator(EventKind kind) noexcept {
    return kind == EventKind::TrtUnrelated ? 0 : 1;
}

std::optional<double> composite_outcome(EventKind kind, const std::optional<double>& outcome,
                                        double failure_value_v) {
    switch (kind) {
        case EventKind::Completed:
            return outcome ? std::optional<double>(*outcome - failure_value_v) : std::nullopt;
        case EventKind::TrtRelated:
            return 0.0;
        case EventKind::TrtUnrelated:
            return std::nullopt;
    }
    return std::nullopt;
}

void validate_record(const SubjectRecord& r, std::size_t p, double horizon_k) {
    if (r.covariates.size() != p) {
        throw DataError("covariate dimension " + std::to_string(r.covariates.size()) +
                        " differs from " + std::to_string(p));
    }
    for (double x : r.covariates) {
        if (!std::isfinite(x)) throw DataError("covariate not finite");
    }
    if (r.arm != 0 && r.arm != 1) throw DataError("arm must be 0 or 1");
    if (!std::isfinite(r.followup_time) || r.followup_time <= 0.0) {
        throw DataError("followup time must be positive");
    }
    if (r.followup_time > horizon_k) throw DataError("followup exceeds horizon");
    switch (r.event) {
        case EventKind::Completed:
            if (!r.outcome) throw DataError("outcome required for Completed record");
            if (!std::isfinite(*r.outcome)) throw DataError("outcome not finite");
            if (r.followup_time != horizon_k) {
                throw DataError("Completed record must have followup time equal to horizon");
            }
            break;
        case EventKind::TrtRelated:
        case EventKind::TrtUnrelated:
            if (r.outcome) throw DataError("outcome present for non-Completed record");
            break;
        default:
            throw DataError("unknown event kind");
    }
}

TrialDataset::TrialDataset(std::vector<SubjectRecord> records,
                           std::vector<std::string> covariate_names, double horizon_k,
                           double failure_value_v)
    : covariate_names_(std::move(covariate_names)),
      horizon_(horizon_k),
      failure_value_(failure_value_v) {
    if (!(horizon_k > 0.0) || !std::isfinite(horizon_k)) throw DataError("horizon k must be positive");
    if (!std::isfinite(failure_value_v)) throw DataError("failure value v must be finite");
    const std::size_t n = records.size();
    const std::size_t p = covariate_names_.size();
    covariates_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    id_.reserve(n);
    arm_.reserve(n);
    time_.reserve(n);
    event_.reserve(n);
    outcome_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = records[i];
        try {
            validate_record(r, p, horizon_k);
        } catch (const DataError& e) {
            throw DataError(e.what(), i + 1);
        }
        for (std::size_t j = 0; j < p; ++j) {
            covariates_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.covariates[j];
        }
        id_.push_back(std::move(r.id));
        arm_.push_back(r.arm);
        time_.push_back(r.followup_time);
        event_.push_back(r.event);
        outcome_.push_back(r.outcome);
    }
    validate();
}

void TrialDataset::validate() const {
    if (arm_size(0) == 0 || arm_size(1) == 0) throw DataError("both arms must be non-empty");
}

void TrialDataset::require_estimable() const {
    for (int a : {0, 1}) {
        if (count(a, EventKind::Completed) == 0) {
            throw DataError("arm " + std::to_string(a) + " has no Completed records");
        }
    }
}

SubjectRecord TrialDataset::record(std::size_t i) const {
    auto x = covariates(i);
    return SubjectRecord{id_[i], std::vector<double>(x.begin(), x.end()), arm_[i], time_[i],
                         event_[i], outcome_[i]};
}

std::size_t TrialDataset::arm_size(int a) const {
    return static_cast<std::size_t>(std::count(arm_.begin(), arm_.end(), a));
}

std::size_t TrialDataset::count(int a, EventKind kind) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < size(); ++i) c += (arm_[i] == a && event_[i] == kind);
    return c;
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> indices) const {
    TrialDataset out;
    out.covariate_names_ = covariate_names_;
    out.horizon_ = horizon_;
    out.failure_value_ = failure_value_;
    const auto m = static_cast<Eigen::Index>(indices.size());
    out.covariates_.resize(m, covariates_.cols());
    out.id_.reserve(indices.size());
    out.arm_.reserve(indices.size());
    out.time_.reserve(indices.size());
    out.event_.reserve(indices.size());
    out.outcome_.reserve(indices.size());
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = indices[static_cast<std::size_t>(r)];
        if (i >= size()) throw std::out_of_range("subset index out of range");
        out.covariates_.row(r) = covariates_.row(static_cast<Eigen::Index>(i));
        out.id_.push_back(id_[i]);
        out.arm_.push_back(arm_[i]);
        out.time_.push_back(time_[i]);
        out.event_.push_back(event_[i]);
        out.outcome_.push_back(outcome_[i]);
    }
    out.validate();
    return out;
}

TrialDataset TrialDataset::with_outcome_shift(double outcome_shift, double failure_value_v) const {
    TrialDataset out = *this;
    for (auto& y : out.outcome_) {
        if (y) *y += outcome_shift;
    }
    out.failure_value_ = failure_value_v;
    return out;
}

TrialDataset parse_dataset(std::string_view text, const CsvSchema& schema, double horizon_k,
                           double failure_value_v) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (lines.empty() || is_blank(lines.front())) throw DataError("missing header row");

    std::string_view header_line = lines.front();
    if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") {
        header_line.remove_prefix(3);
    }
    const auto header = split_csv_line(header_line);
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!column.emplace(header[j], j).second) {
            throw DataError("duplicate column '" + header[j] + "'");
        }
    }
    auto require = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end()) throw DataError("missing column '" + name + "'");
        return it->second;
    };
    const std::size_t c_id = require(schema.id);
    const std::size_t c_arm = require(schema.arm);
    const std::size_t c_time = require(schema.time);
    const std::size_t c_event = require(schema.event);
    const std::size_t c_outcome = require(schema.outcome);

    std::vector<std::string> names = schema.covariates;
    std::vector<std::size_t> c_cov;
    if (names.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j != c_id && j != c_arm && j != c_time && j != c_event && j != c_outcome) {
                names.push_back(header[j]);
                c_cov.push_back(j);
            }
        }
    } else {
        for (const auto& name : names) c_cov.push_back(require(name));
    }

    std::vector<SubjectRecord> records;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (is_blank(lines[li])) continue;
        const std::size_t row = records.size() + 1;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            row);
        }
        auto number = [&](std::size_t c, const std::string& what) -> std::optional<double> {
            try {
                return parse_double(fields[c]);
            } catch (const std::invalid_argument&) {
                throw DataError("malformed " + what + " value '" + fields[c] + "'", row);
            }
        };
        SubjectRecord r;
        r.id = fields[c_id];
        for (std::size_t j = 0; j < c_cov.size(); ++j) {
            auto x = number(c_cov[j], "covariate '" + names[j] + "'");
            if (!x) throw DataError("missing covariate '" + names[j] + "'", row);
            r.covariates.push_back(*x);
        }
        auto arm = number(c_arm, "arm");
        if (!arm || (*arm != 0.0 && *arm != 1.0)) throw DataError("arm must be 0 or 1", row);
        r.arm = static_cast<int>(*arm);
        auto time = number(c_time, "time");
        if (!time) throw DataError("missing time", row);
        auto code = number(c_event, "event");
        if (!code || (*code != 0.0 && *code != 1.0 && *code != 2.0)) {
            throw DataError("event code must be 0, 1 or 2", row);
        }
        r.event = static_cast<EventKind>(static_cast<int>(*code));
        r.outcome = number(c_outcome, "outcome");

        if (r.event == EventKind::Completed) {
            if (!r.outcome) throw DataError("outcome required for Completed record", row);
            if (*time > horizon_k + schema.completed_time_slack) {
                throw DataError("followup exceeds horizon", row);
            }
            if (*time < horizon_k) throw DataError("Completed record ends before horizon", row);
            r.followup_time = horizon_k;
        } else {
            if (r.outcome) throw DataError("outcome present for non-Completed record", row);
            r.followup_time = *time;
        }
        try {
            validate_record(r, names.size(), horizon_k);
        } catch (const DataError& e) {
            throw DataError(e.what(), row);
        }
        records.push_back(std::move(r));
    }
    TrialDataset d(std::move(records), std::move(names), horizon_k, failure_value_v);
    d.require_estimable();
    return d;
}

TrialDataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema,
                          double horizon_k, double failure_value_v) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), schema, horizon_k, failure_value_v);
}

std::string to_csv(const TrialDataset& d) {
    std::string out = "id";
    for (const auto& name : d.covariate_names()) {
        out += ',';
        out += quote_if_needed(name);
    }
    out += ",arm,time,event,outcome\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        out += quote_if_needed(d.id(i));
        for (double x : d.covariates(i)) {
            out += ',';
            out += format_number(x);
        }
        out += ',';
        out += std::to_string(d.arm(i));
        out += ',';
        out += format_number(d.followup_time(i));
        out += ',';
        out += std::to_string(static_cast<int>(d.event(i)));
        out += ',';
        if (d.outcome(i)) out += format_number(*d.outcome(i));
        out += '\n';
    }
    return out;
}

}  // namespace icetrial
