#pragma once

// Counterfactual uncertainty quantification.
//
// Three ways to compare Rx with C at the milestone visit:
//   factual milestone   Y_r^Rx[m] - Y_s^C[m], two subjects     2 Var(Ym)
//   factual change      change_r^Rx - change_s^C, two subjects 2 Var(Traj) + 4 Var(E)
//   counterfactual      change_i(Rx) - change_i(C), one subject
//                                               2 Var(Traj) + 2 Var(E) - 2 Cov(Traj^Rx, Traj^C)
//
// Reduction fractions share the denominator 2 Var(Ym).

#include "etz/decomposition.hpp"

#include <cstdint>
#include <vector>

namespace etz {

struct CuqReport {
    double var_factual_milestone = 0.0;
    double var_factual_change = 0.0;
    double var_counterfactual = 0.0;
    double traj_cov = 0.0;
    double frac_baselining = 0.0;
    double frac_selfcontrol = 0.0;
    double frac_total = 0.0;

    /// Pie-chart shares summing to 1.
    struct Pie {
        double baselining;
        double self_control;
        double residual;
    };
    Pie pie() const noexcept {
        return {frac_baselining, frac_selfcontrol, 1.0 - frac_baselining - frac_selfcontrol};
    }
};

/// Requires feasible components and 0 <= traj_cov <= var_traj.
/// frac_baselining is negative when Var(E) > Var(Z); it is reported as is.
CuqReport cuq_report(const EtzComponents& c, double traj_cov = 0.0);

/// Var(Ym) - Var(change) = Var(Z) - Var(E).
double baselining_gain(const EtzComponents& c);

/// False when measurement error dominates the intercept: change-from-baseline
/// is then noisier than the raw milestone outcome.
inline bool baselining_beneficial(const EtzComponents& c) { return baselining_gain(c) > 0.0; }

/// Smallest n with sd^2 (z_{1-alpha/2} + z_power)^2 / delta^2 <= n, where
/// sd^2 is the variance of one comparison. For factual comparisons n is the
/// number of subjects per arm; for the counterfactual one it is the number
/// of self-controlled subjects.
std::int64_t sample_size(double delta, double sd, double alpha, double power);

struct EntryCriterionRow {
    double var_z;
    double sd_baseline;
    double sd_change;
};

/// SD(baseline) and SD(change) as Var(Z) varies with Traj and E held fixed.
std::vector<EntryCriterionRow> entry_criterion_study(const EtzComponents& c,
                                                     const std::vector<double>& var_z_grid);

}  // namespace etz
