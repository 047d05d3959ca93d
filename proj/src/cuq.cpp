#include "etz/cuq.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <string>

namespace etz {
namespace {

void require_feasible(const EtzComponents& c) {
    const double scale = std::max(c.var_z + c.var_traj + c.var_e, 1e-300);
    auto verdict = feasibility_check(c, 1e-9 * scale);
    if (!verdict.pass) throw InfeasibleDecomposition(c, std::move(verdict));
    if (!std::isfinite(c.var_z) || !std::isfinite(c.var_traj) || !std::isfinite(c.var_e)) {
        throw Error(ErrorCode::non_finite, "components must be finite");
    }
}

}  // namespace

CuqReport cuq_report(const EtzComponents& c, double traj_cov) {
    require_feasible(c);
    if (!(traj_cov >= 0.0) || traj_cov > c.var_traj) {
        throw Error(ErrorCode::invalid_argument,
                    "traj_cov must lie in [0, var_traj] = [0, " + std::to_string(c.var_traj) + "]");
    }
    CuqReport r;
    r.traj_cov = traj_cov;
    r.var_factual_milestone = 2.0 * (c.var_z + c.var_traj + c.var_e);
    r.var_factual_change = 2.0 * c.var_traj + 4.0 * c.var_e;
    r.var_counterfactual = 2.0 * c.var_traj + 2.0 * c.var_e - 2.0 * traj_cov;
    if (r.var_factual_milestone <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "all variance components are zero");
    }
    r.frac_baselining = (r.var_factual_milestone - r.var_factual_change) / r.var_factual_milestone;
    r.frac_selfcontrol = (r.var_factual_change - r.var_counterfactual) / r.var_factual_milestone;
    r.frac_total = r.frac_baselining + r.frac_selfcontrol;
    return r;
}

double baselining_gain(const EtzComponents& c) {
    require_feasible(c);
    return c.var_z - c.var_e;
}

std::int64_t sample_size(double delta, double sd, double alpha, double power) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw Error(ErrorCode::invalid_argument, "delta must be > 0");
    }
    if (!(sd > 0.0) || !std::isfinite(sd)) throw Error(ErrorCode::invalid_argument, "sd must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
    }
    if (!(power > 0.0 && power < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "power must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> normal;
    const double z = boost::math::quantile(normal, 1.0 - alpha / 2.0) +
                     boost::math::quantile(normal, power);
    const double n = sd * sd * z * z / (delta * delta);
    // Absorb rounding when n is an exact integer in real arithmetic.
    const double nearest = std::round(n);
    const double ceiling = std::abs(n - nearest) <= 1e-9 * nearest ? nearest : std::ceil(n);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(ceiling));
}

std::vector<EntryCriterionRow> entry_criterion_study(const EtzComponents& c,
                                                     const std::vector<double>& var_z_grid) {
    require_feasible(c);
    const double sd_change = std::sqrt(c.var_traj + 2.0 * c.var_e);
    std::vector<EntryCriterionRow> rows;
    rows.reserve(var_z_grid.size());
    for (const double vz : var_z_grid) {
        if (!(vz >= 0.0) || !std::isfinite(vz)) {
            throw Error(ErrorCode::invalid_argument, "var_z grid values must be finite and >= 0");
        }
        rows.push_back({vz, std::sqrt(vz + c.var_e), sd_change});
    }
    return rows;
}

}  // namespace etz
