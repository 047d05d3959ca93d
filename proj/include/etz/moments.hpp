#pragma once

// Second-moment summaries of the baseline (visit 1) and milestone (visit m)
// outcomes. These are the (1,1), (m,m) and (1,m) entries of the within-arm
// covariance matrix, pooled over arms after removing arm x visit means.

#include "etz/kernels.hpp"
#include "etz/trial_data.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace etz {

struct VisitMoments {
    double var_baseline = 0.0;
    double var_milestone = 0.0;
    double var_change = 0.0;
    double cov_1m = 0.0;
    /// Subjects used per arm. Empty in summary-statistics mode.
    std::map<std::string, std::size_t> n_used;

    /// Summary-statistics mode: the "three numbers". cov_1m is derived as
    /// (var_baseline + var_milestone - var_change) / 2.
    static VisitMoments from_summary(double var_baseline, double var_milestone,
                                     double var_change);

    /// As above with an explicit covariance; throws invalid_argument when the
    /// four values disagree by more than `rel_tol` of the largest variance.
    static VisitMoments from_summary(double var_baseline, double var_milestone,
                                     double var_change, double cov_1m, double rel_tol = 1e-6);

    /// Baseline, milestone and covariance; var_change is derived.
    static VisitMoments from_covariance(double var_baseline, double var_milestone,
                                        double cov_1m);

    /// var_change - (var_baseline + var_milestone - 2 cov_1m).
    double identity_residual() const noexcept {
        return var_change - (var_baseline + var_milestone - 2.0 * cov_1m);
    }

    double sd_baseline() const;
    double sd_milestone() const;
    double sd_change() const;

    std::size_t total_used() const noexcept;
};

/// Throws unless every value is finite and every variance is >= 0.
void validate(const VisitMoments& m);

/// Pooled within-arm moments with divisor N - (#arms). The input must be
/// complete at visits 1 and m.
VisitMoments pooled_visit_moments(const TrialDataset& d, Execution exec = Execution::parallel);

/// Unpooled moments per arm (divisor n_arm - 1), for diagnostics.
std::map<std::string, VisitMoments> per_arm_visit_moments(const TrialDataset& d,
                                                          Execution exec = Execution::parallel);

struct ArmVisitMeans {
    /// means.at(arm)[v - 1]; nullopt when the cell has no observations.
    std::map<std::string, std::vector<std::optional<double>>> means;
    /// Mean change-from-baseline per arm over subjects observed at 1 and m.
    std::map<std::string, double> mean_change;
    std::string control_label;

    /// mean(change | arm) - mean(change | control).
    double tau_hat(const std::string& arm) const;
};

/// Throws empty_cell when an arm has no observation at visit 1 or m.
ArmVisitMeans arm_visit_means(const TrialDataset& d);

}  // namespace etz
