#include "etz/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace etz {
namespace {

std::string infeasible_message(const EtzComponents& c, const FeasibilityVerdict& v) {
    std::string msg = "infeasible decomposition: negative";
    for (const auto& name : v.failing) {
        const double value = name == "var_z" ? c.var_z : name == "var_traj" ? c.var_traj : c.var_e;
        msg += " " + name + "=" + std::to_string(value);
    }
    return msg + "; " + v.interpretation;
}

}  // namespace

double default_tolerance(const VisitMoments& m) noexcept {
    return 1e-9 * std::max(m.var_milestone, 1e-300);
}

CovTermReport cov_aware_terms(const VisitMoments& m) {
    validate(m);
    return {(m.var_milestone + m.var_baseline - m.var_change) / 2.0,
            m.var_milestone - m.var_baseline};
}

EtzComponents decompose_unchecked(const VisitMoments& m) {
    validate(m);
    EtzComponents c;
    c.var_z = m.cov_1m;
    c.var_traj = m.var_milestone - m.var_baseline;
    c.var_e = m.var_baseline - c.var_z;
    c.assumed_cov_z_traj = 0.0;
    return c;
}

InfeasibleDecomposition::InfeasibleDecomposition(EtzComponents components,
                                                 FeasibilityVerdict verdict)
    : Error(ErrorCode::infeasible, infeasible_message(components, verdict)),
      components_(components),
      verdict_(std::move(verdict)) {}

EtzComponents decompose_independent(const VisitMoments& m, double tolerance) {
    const EtzComponents c = decompose_unchecked(m);
    const double tol = tolerance < 0.0 ? default_tolerance(m) : tolerance;
    FeasibilityVerdict verdict = feasibility_check(c, tol);
    if (!verdict.pass) throw InfeasibleDecomposition(c, std::move(verdict));
    return c;
}

FeasibilityVerdict feasibility_check(const EtzComponents& c, double tolerance) {
    if (!(tolerance >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "feasibility tolerance must be >= 0");
    }
    FeasibilityVerdict v;
    if (c.var_z < -tolerance) v.failing.emplace_back("var_z");
    if (c.var_traj < -tolerance) v.failing.emplace_back("var_traj");
    if (c.var_e < -tolerance) v.failing.emplace_back("var_e");
    v.pass = v.failing.empty();
    if (!v.pass) {
        v.interpretation =
            "either Var(E) differs between visit 1 and visit m, or Cov(Z, Traj) != 0; "
            "positive dependence between Z and Traj inflates var_z and var_traj and "
            "deflates var_e";
    }
    return v;
}

VisitMoments reconstruct_moments(const EtzComponents& c) {
    VisitMoments m;
    m.var_baseline = c.var_z + c.var_e;
    m.var_milestone = c.var_z + c.var_traj + c.var_e + 2.0 * c.assumed_cov_z_traj;
    m.var_change = c.var_traj + 2.0 * c.var_e;
    m.cov_1m = c.var_z + c.assumed_cov_z_traj;
    return m;
}

IdentityResiduals identity_residuals(const EtzComponents& c, const VisitMoments& m) {
    const VisitMoments r = reconstruct_moments(c);
    return {r.var_baseline - m.var_baseline, r.var_milestone - m.var_milestone,
            r.var_change - m.var_change};
}

const std::vector<std::string>& decomposition_assumptions() {
    static const std::vector<std::string> assumptions = {
        "Var(E) at visit 1 equals Var(E) at visit m",
        "Cov(Z, Traj) = 0 (intercept and trajectory independent)",
        "variance components equal across arms (pooled within-arm moments)",
    };
    return assumptions;
}

}  // namespace etz
