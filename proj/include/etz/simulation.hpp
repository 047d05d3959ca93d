#pragma once

// Seeded generative model for counterfactual trial data.
//
// Every subject has potential outcomes under both arms that share one
// intercept Z:
//
//   y1     = Z + E1
//   ym(Rx) = Z + Traj^Rx + E^Rx
//   ym(C)  = Z + Traj^C  + E^C
//   b      = Z + E^B                 (biomarker score)
//
// (Z, Traj^Rx, Traj^C) is jointly Gaussian with Var(Traj^Rx) = Var(Traj^C),
// Corr(Traj^Rx, Traj^C) = traj_corr and Cov(Z, Traj^arm) = cov_z_traj. The
// errors are independent N(0, var_e), and E^B ~ N(0, var_e_biomarker).
//
// Subject i of replicate r draws from the stream keyed (seed, r, i), so
// output is bit-identical for serial and parallel execution.

#include "etz/kernels.hpp"
#include "etz/trial_data.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace etz {

struct SimConfig {
    std::size_t n_subjects = 500;
    double alpha_z = 0.0;
    double var_z = 53.802;
    double mu_rx = -2.0;
    double mu_c = 0.0;
    double var_traj = 70.809;
    double traj_corr = 0.0;
    double var_e = 10.778;
    double cov_z_traj = 0.0;
    double var_e_biomarker = 10.778;
    std::uint64_t seed = 20240101;

    /// Throws invalid_argument on out-of-range fields and infeasible when the
    /// (Z, Traj^Rx, Traj^C) covariance is not positive semidefinite.
    void validate() const;
};

struct PotentialOutcomes {
    double z = 0.0;
    double b = 0.0;
    double y1 = 0.0;
    double ym_rx = 0.0;
    double ym_c = 0.0;
    double change_rx = 0.0;
    double change_c = 0.0;

    bool operator==(const PotentialOutcomes&) const = default;
};

/// Arm labels used by to_factual.
inline const std::string kRxLabel = "Rx";
inline const std::string kControlLabel = "C";

std::vector<PotentialOutcomes> simulate_counterfactual(const SimConfig& cfg,
                                                       std::uint64_t replicate = 0,
                                                       Execution exec = Execution::parallel);

/// 1:1 randomization: subject i goes to Rx with probability 1/2 using the
/// assignment stream keyed (seed, replicate, i). Returns a two-visit dataset
/// holding only the assigned arm's outcomes. Throws insufficient_subjects when
/// an arm receives fewer than two subjects.
TrialDataset to_factual(const std::vector<PotentialOutcomes>& sim, std::uint64_t seed,
                        std::uint64_t replicate = 0);

/// R^2 of change-from-baseline regressed on baseline with an arm-specific
/// intercept and slope; total sum of squares about the grand mean. Returns 0
/// when change is constant. Needs >= 3 complete subjects per arm.
double independence_diagnostic(const TrialDataset& d);

/// CSV with header subject_id,z,b,y1,ym_rx,ym_c,change_rx,change_c.
std::string export_potential_outcomes(const std::vector<PotentialOutcomes>& sim);

}  // namespace etz
