#pragma once

// Before-and-after-treatment repeated-measures trial data: a rectangular
// subject x visit outcome table with one arm label per subject.
//
// Visits are categorical labels 1..m. Visit 1 is the pre-randomization
// baseline and visit m is the milestone visit.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace etz {

/// A subject's outcomes; std::nullopt marks a missing visit.
struct SubjectRecord {
    std::string subject_id;
    std::string arm;
    std::vector<std::optional<double>> outcomes;

    bool operator==(const SubjectRecord&) const = default;
};

class TrialDataset {
public:
    /// Validates and takes ownership of the records. Throws etz::Error when
    /// m < 2, a record has the wrong length, an id repeats, a value is not
    /// finite, the control arm is absent, there is no non-control arm, or
    /// an arm has fewer than two subjects.
    static TrialDataset create(std::vector<SubjectRecord> subjects,
                               std::size_t visit_count,
                               std::string control_label);

    const std::vector<SubjectRecord>& subjects() const noexcept { return subjects_; }
    std::size_t visit_count() const noexcept { return visit_count_; }
    std::size_t milestone_visit() const noexcept { return visit_count_; }
    const std::string& control_label() const noexcept { return control_label_; }

    /// Arm labels in lexicographic order.
    const std::set<std::string>& arms() const noexcept { return arms_; }

    /// Non-control arms in lexicographic order.
    std::vector<std::string> treatment_arms() const;

    std::size_t size() const noexcept { return subjects_.size(); }

    /// Value of subject `i` at 1-based visit `v`.
    std::optional<double> value(std::size_t i, std::size_t v) const {
        return subjects_[i].outcomes[v - 1];
    }

    bool operator==(const TrialDataset&) const = default;

private:
    TrialDataset() = default;

    std::vector<SubjectRecord> subjects_;
    std::size_t visit_count_ = 0;
    std::string control_label_;
    std::set<std::string> arms_;
};

/// Header `subject_id,arm,y1,...,ym`; empty cell = missing.
TrialDataset parse_wide(std::string_view csv_text, const std::string& control_label);

/// Header `subject_id,arm,visit,value`. When `visit_count` is omitted, m is
/// the largest visit index present. Subjects keep first-appearance order.
TrialDataset parse_long(std::string_view csv_text, const std::string& control_label,
                        std::optional<std::size_t> visit_count = std::nullopt);

/// Dispatches on the header line to parse_wide or parse_long.
TrialDataset parse_csv(std::string_view csv_text, const std::string& control_label);

/// Values are written in shortest round-trip form, so parsing the output
/// reproduces the dataset bit for bit.
std::string export_wide(const TrialDataset& d);
std::string export_long(const TrialDataset& d);

struct CompleteCaseResult {
    TrialDataset data;
    std::map<std::string, std::size_t> dropped_per_arm;

    std::size_t dropped_total() const;
};

/// Listwise deletion over `visits_needed` (1-based). Throws
/// insufficient_subjects when an arm keeps fewer than two subjects.
CompleteCaseResult complete_cases(const TrialDataset& d,
                                  const std::set<std::size_t>& visits_needed);

/// complete_cases over {1, m}, the only visits the decomposition reads.
CompleteCaseResult complete_cases_baseline_milestone(const TrialDataset& d);

}  // namespace etz
