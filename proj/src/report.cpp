#include "etz/report.hpp"

#include "etz/error.hpp"

#include <charconv>
#include <cmath>

namespace etz::report {
namespace {

std::string num(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

Json to_json(const VisitMoments& m) {
    Json j;
    j["var_baseline"] = m.var_baseline;
    j["var_milestone"] = m.var_milestone;
    j["var_change"] = m.var_change;
    j["cov_1m"] = m.cov_1m;
    Json n = Json::object();
    for (const auto& [arm, k] : m.n_used) n[arm] = k;
    j["n_used"] = n;
    return j;
}

Json to_json(const VisitMoments& m, const ArmVisitMeans& means) {
    Json j = to_json(m);
    Json tau = Json::object();
    for (const auto& [arm, change] : means.mean_change) {
        if (arm != means.control_label) tau[arm] = means.tau_hat(arm);
    }
    if (tau.size() == 1) {
        j["tau_hat"] = tau.begin().value();
    } else {
        j["tau_hat"] = tau;
    }
    return j;
}

Json to_json(const CovTermReport& t) {
    return Json{{"z_plus_covterm", t.z_plus_covterm}, {"traj_plus_2cov", t.traj_plus_2cov}};
}

Json to_json(const EtzComponents& c, const VisitMoments& m, const FeasibilityVerdict& v) {
    const IdentityResiduals r = identity_residuals(c, m);
    Json j;
    j["var_z"] = c.var_z;
    j["var_traj"] = c.var_traj;
    j["var_e"] = c.var_e;
    j["cov_term_assumed"] = c.assumed_cov_z_traj;
    j["feasible"] = v.pass;
    j["failing_components"] = v.failing;
    if (!v.pass) j["interpretation"] = v.interpretation;
    j["identities_residuals"] = {
        {"baseline", r.baseline}, {"milestone", r.milestone}, {"change", r.change}};
    j["assumptions"] = decomposition_assumptions();
    return j;
}

Json to_json(const CuqReport& r) {
    const auto pie = r.pie();
    Json j;
    j["var_factual_milestone"] = r.var_factual_milestone;
    j["var_factual_change"] = r.var_factual_change;
    j["var_counterfactual"] = r.var_counterfactual;
    j["traj_cov"] = r.traj_cov;
    j["frac_baselining"] = r.frac_baselining;
    j["frac_selfcontrol"] = r.frac_selfcontrol;
    j["frac_total"] = r.frac_total;
    j["pie"] = {{"baselining", pie.baselining},
                {"self_control", pie.self_control},
                {"residual", pie.residual}};
    j["denominator"] = "var_factual_milestone";
    return j;
}

Json to_json(const std::vector<EntryCriterionRow>& rows) {
    Json arr = Json::array();
    for (const auto& row : rows) {
        arr.push_back(
            {{"var_z", row.var_z}, {"sd_baseline", row.sd_baseline}, {"sd_change", row.sd_change}});
    }
    return arr;
}

Json to_json(const BiasReport& b) {
    Json j;
    j["c_offset"] = b.c_offset;
    j["direction"] = b.direction;
    j["eval_point"] = b.eval_point;
    j["lambda"] = b.lambda;
    j["bias_control_side"] = b.bias_control_side;
    j["bias_equipoise"] = b.bias_equipoise;
    j["mc_control_side"] = {{"estimate", b.mc_control_side}, {"se", b.mc_control_side_se}};
    j["mc_equipoise"] = {{"estimate", b.mc_equipoise}, {"se", b.mc_equipoise_se}};
    return j;
}

Json to_json(const BiasStudy& s) {
    Json j;
    j["lambda"] = s.lambda;
    j["population_efficacy"] = s.population_efficacy;
    j["replicates"] = s.replicates.size();
    j["mean_slope_c_on_b"] = {{"estimate", s.mean_slope_c_on_b}, {"se", s.mean_slope_c_on_b_se}};
    j["mean_slope_rx_on_b"] = {{"estimate", s.mean_slope_rx_on_b},
                               {"se", s.mean_slope_rx_on_b_se}};
    Json reports = Json::array();
    for (const auto& r : s.reports) reports.push_back(to_json(r));
    j["reports"] = reports;
    return j;
}

Json to_json(const SimConfig& cfg) {
    Json j;
    j["n"] = cfg.n_subjects;
    j["alpha_z"] = cfg.alpha_z;
    j["var_z"] = cfg.var_z;
    j["mu_rx"] = cfg.mu_rx;
    j["mu_c"] = cfg.mu_c;
    j["var_traj"] = cfg.var_traj;
    j["traj_corr"] = cfg.traj_corr;
    j["var_e"] = cfg.var_e;
    j["cov_z_traj"] = cfg.cov_z_traj;
    j["var_e_biomarker"] = cfg.var_e_biomarker;
    j["seed"] = cfg.seed;
    return j;
}

Json to_json(const OutcomeModelParams& p) {
    Json j;
    j["model"] = p.parallel ? "parallel" : "targeted";
    j["intercept"] = p.intercept;
    j["effect_rx"] = p.effect_rx;
    j["effect_c"] = p.effect_c;
    j["slope_rx"] = p.slope_rx;
    j["slope_c"] = p.slope_c;
    j["residual_var"] = p.residual_var;
    return j;
}

void require_finite(const Json& j) {
    if (j.is_number_float()) {
        if (!std::isfinite(j.get<double>())) {
            throw Error(ErrorCode::non_finite, "report contains a non-finite number");
        }
    } else if (j.is_structured()) {
        for (const auto& v : j) require_finite(v);
    }
}

std::string dump(const Json& j) {
    require_finite(j);
    return j.dump(2) + "\n";
}

std::string entry_criterion_csv(const std::vector<EntryCriterionRow>& rows) {
    std::string out = "var_z,sd_baseline,sd_change\n";
    for (const auto& r : rows) {
        out += num(r.var_z) + ',' + num(r.sd_baseline) + ',' + num(r.sd_change) + '\n';
    }
    return out;
}

std::string replicate_csv(const BiasStudy& s) {
    std::string out =
        "replicate,c_offset,direction,eval_point,control_side_bias,equipoise_bias,"
        "slope_rx_on_z,slope_c_on_z,slope_rx_on_b,slope_c_on_b\n";
    for (const auto& rep : s.replicates) {
        for (std::size_t k = 0; k < s.reports.size(); ++k) {
            const auto& point = s.reports[k];
            out += std::to_string(rep.replicate) + ',' + num(point.c_offset) + ',' +
                   std::to_string(point.direction) + ',' + num(point.eval_point) + ',' +
                   num(rep.control_side_bias[k]) + ',' + num(rep.equipoise_bias[k]) + ',' +
                   num(rep.slope_rx_on_z) + ',' + num(rep.slope_c_on_z) + ',' +
                   num(rep.slope_rx_on_b) + ',' + num(rep.slope_c_on_b) + '\n';
        }
    }
    return out;
}

}  // namespace etz::report
