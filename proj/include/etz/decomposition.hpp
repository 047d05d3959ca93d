#pragma once

// ETZ decomposition: visit moments -> variance of the subject intercept Z,
// of the treatment trajectory Traj at the milestone visit, and of the
// measurement error E.
//
//   Var(Y1)      = Var(Z) + Var(E)
//   Var(Ym)      = Var(Z) + Var(Traj) + Var(E) + 2 Cov(Z, Traj)
//   Var(Ym - Y1) = Var(Traj) + 2 Var(E)
//   Cov(Y1, Ym)  = Var(Z) + Cov(Z, Traj)
//
// with Var(E) equal at visits 1 and m. The default path also takes
// Cov(Z, Traj) = 0.

#include "etz/error.hpp"
#include "etz/moments.hpp"

#include <string>
#include <vector>

namespace etz {

struct EtzComponents {
    double var_z = 0.0;
    double var_traj = 0.0;
    double var_e = 0.0;
    double assumed_cov_z_traj = 0.0;
};

/// Terms identifiable without assuming Z and Traj independent.
struct CovTermReport {
    double z_plus_covterm = 0.0;   // Var(Z) + Cov(Z, Traj)
    double traj_plus_2cov = 0.0;   // Var(Traj) + 2 Cov(Z, Traj)
};

struct FeasibilityVerdict {
    bool pass = true;
    std::vector<std::string> failing;  // component names below -tolerance
    std::string interpretation;        // empty when pass
};

/// Residuals of the three moment identities for a decomposition.
struct IdentityResiduals {
    double baseline = 0.0;   // var_z + var_e - var_baseline
    double milestone = 0.0;  // var_z + var_traj + var_e + 2 cov - var_milestone
    double change = 0.0;     // var_traj + 2 var_e - var_change
};

/// Default feasibility tolerance: 1e-9 relative to var_milestone.
double default_tolerance(const VisitMoments& m) noexcept;

CovTermReport cov_aware_terms(const VisitMoments& m);

/// Raw independent-case split; components may come out negative.
EtzComponents decompose_unchecked(const VisitMoments& m);

class InfeasibleDecomposition : public Error {
public:
    InfeasibleDecomposition(EtzComponents components, FeasibilityVerdict verdict);

    const EtzComponents& components() const noexcept { return components_; }
    const FeasibilityVerdict& verdict() const noexcept { return verdict_; }

private:
    EtzComponents components_;
    FeasibilityVerdict verdict_;
};

/// decompose_unchecked plus feasibility_check; throws InfeasibleDecomposition
/// (code infeasible) when a component is below -tolerance. A negative
/// tolerance selects default_tolerance(m). Components are never clamped.
EtzComponents decompose_independent(const VisitMoments& m, double tolerance = -1.0);

FeasibilityVerdict feasibility_check(const EtzComponents& c, double tolerance);

/// Moments implied by a set of components, including the Cov(Z, Traj) term.
VisitMoments reconstruct_moments(const EtzComponents& c);

IdentityResiduals identity_residuals(const EtzComponents& c, const VisitMoments& m);

/// Assumptions baked into decompose_independent, for reports.
const std::vector<std::string>& decomposition_assumptions();

}  // namespace etz
