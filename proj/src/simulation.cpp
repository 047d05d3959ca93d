#include "etz/simulation.hpp"

#include "etz/error.hpp"
#include "etz/rng.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace etz {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Lower-triangular L with L L^T = a for a positive semidefinite a. Zero
// pivots are allowed when the rest of their column vanishes.
Mat3 cholesky_psd(const Mat3& a) {
    const double scale = std::max({a[0][0], a[1][1], a[2][2], 1.0});
    const double tol = 1e-12 * scale;
    Mat3 l{};
    for (std::size_t j = 0; j < 3; ++j) {
        double d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        if (d < -tol) {
            throw Error(ErrorCode::infeasible,
                        "simulation covariance of (Z, Traj^Rx, Traj^C) is not positive "
                        "semidefinite");
        }
        const bool zero_pivot = d <= tol;
        l[j][j] = zero_pivot ? 0.0 : std::sqrt(d);
        for (std::size_t i = j + 1; i < 3; ++i) {
            double r = a[i][j];
            for (std::size_t k = 0; k < j; ++k) r -= l[i][k] * l[j][k];
            if (zero_pivot) {
                if (std::abs(r) > std::sqrt(tol * scale)) {
                    throw Error(ErrorCode::infeasible,
                                "simulation covariance of (Z, Traj^Rx, Traj^C) is not positive "
                                "semidefinite");
                }
                l[i][j] = 0.0;
            } else {
                l[i][j] = r / l[j][j];
            }
        }
    }
    return l;
}

Mat3 latent_covariance(const SimConfig& cfg) {
    const double c = cfg.cov_z_traj;
    const double t = cfg.var_traj;
    return {{{cfg.var_z, c, c}, {c, t, cfg.traj_corr * t}, {c, cfg.traj_corr * t, t}}};
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

struct ArmSplit {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<int> group;
    std::vector<std::string> arm_names;
};

std::string format_value(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void SimConfig::validate() const {
    require(n_subjects >= 1, "n_subjects must be >= 1");
    for (double v : {alpha_z, var_z, mu_rx, mu_c, var_traj, traj_corr, var_e, cov_z_traj,
                     var_e_biomarker}) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "simulation parameter not finite");
    }
    require(var_z >= 0.0, "var_z must be >= 0");
    require(var_traj >= 0.0, "var_traj must be >= 0");
    require(var_e >= 0.0, "var_e must be >= 0");
    require(var_e_biomarker >= 0.0, "var_e_biomarker must be >= 0");
    require(traj_corr >= 0.0 && traj_corr <= 1.0, "traj_corr must lie in [0, 1]");
    if (std::abs(cov_z_traj) > std::sqrt(var_z * var_traj) * (1.0 + 1e-12)) {
        throw Error(ErrorCode::infeasible, "|cov_z_traj| exceeds sqrt(var_z * var_traj)");
    }
    cholesky_psd(latent_covariance(*this));
}

std::vector<PotentialOutcomes> simulate_counterfactual(const SimConfig& cfg,
                                                       std::uint64_t replicate, Execution exec) {
    cfg.validate();
    const Mat3 l = cholesky_psd(latent_covariance(cfg));
    const double sd_e = std::sqrt(cfg.var_e);
    const double sd_b = std::sqrt(cfg.var_e_biomarker);

    return kernels::map_indexed(
        cfg.n_subjects,
        [&](std::size_t i) {
            rng::SplitMix64 gen(cfg.seed, rng::Domain::outcomes, replicate, i);
            std::array<double, 3> u{};
            for (auto& x : u) x = rng::standard_normal(gen);
            const double e1 = sd_e * rng::standard_normal(gen);
            const double e_rx = sd_e * rng::standard_normal(gen);
            const double e_c = sd_e * rng::standard_normal(gen);
            const double e_b = sd_b * rng::standard_normal(gen);

            const double z = cfg.alpha_z + l[0][0] * u[0];
            const double traj_rx = cfg.mu_rx + l[1][0] * u[0] + l[1][1] * u[1];
            const double traj_c = cfg.mu_c + l[2][0] * u[0] + l[2][1] * u[1] + l[2][2] * u[2];

            PotentialOutcomes p;
            p.z = z;
            p.b = z + e_b;
            p.y1 = z + e1;
            p.ym_rx = z + traj_rx + e_rx;
            p.ym_c = z + traj_c + e_c;
            p.change_rx = p.ym_rx - p.y1;
            p.change_c = p.ym_c - p.y1;
            return p;
        },
        exec);
}

TrialDataset to_factual(const std::vector<PotentialOutcomes>& sim, std::uint64_t seed,
                        std::uint64_t replicate) {
    if (sim.empty()) throw Error(ErrorCode::invalid_argument, "empty simulation");
    std::vector<SubjectRecord> subjects;
    subjects.reserve(sim.size());
    std::size_t n_rx = 0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        rng::SplitMix64 gen(seed, rng::Domain::assignment, replicate, i);
        const bool rx = (gen() >> 63) != 0;
        n_rx += rx ? 1 : 0;
        const auto& p = sim[i];
        subjects.push_back({"s" + std::to_string(i + 1), rx ? kRxLabel : kControlLabel,
                            {p.y1, rx ? p.ym_rx : p.ym_c}});
    }
    const std::size_t n_c = sim.size() - n_rx;
    if (n_rx < 2 || n_c < 2) {
        throw Error(ErrorCode::insufficient_subjects,
                    "randomization left " + std::to_string(n_rx) + " Rx and " +
                        std::to_string(n_c) + " C subjects; at least 2 per arm are required");
    }
    return TrialDataset::create(std::move(subjects), 2, kControlLabel);
}

double independence_diagnostic(const TrialDataset& d) {
    ArmSplit s;
    s.arm_names.assign(d.arms().begin(), d.arms().end());
    const std::size_t m = d.milestone_visit();
    for (const auto& rec : d.subjects()) {
        const auto b = rec.outcomes.front();
        const auto y = rec.outcomes[m - 1];
        if (!b || !y) {
            throw Error(ErrorCode::invalid_argument,
                        "subject '" + rec.subject_id + "' is missing visit 1 or m");
        }
        const auto it = std::lower_bound(s.arm_names.begin(), s.arm_names.end(), rec.arm);
        s.x.push_back(*b);
        s.y.push_back(*y - *b);
        s.group.push_back(static_cast<int>(it - s.arm_names.begin()));
    }
    const auto acc = kernels::serial::accumulate_pairs(s.x, s.y, s.group,
                                                       static_cast<int>(s.arm_names.size()));
    kernels::PairAccumulator all;
    double sse = 0.0;
    for (std::size_t g = 0; g < acc.size(); ++g) {
        if (acc[g].count < 3.0) {
            throw Error(ErrorCode::insufficient_subjects,
                        "arm '" + s.arm_names[g] + "' needs at least 3 complete subjects");
        }
        if (acc[g].sxx <= 0.0) {
            throw Error(ErrorCode::degenerate_predictor,
                        "arm '" + s.arm_names[g] + "' has zero baseline variance");
        }
        sse += std::max(0.0, acc[g].syy - acc[g].sxy * acc[g].sxy / acc[g].sxx);
        all.merge(acc[g]);
    }
    const double sst = all.syy;
    if (sst <= 0.0) return 0.0;
    return std::clamp(1.0 - sse / sst, 0.0, 1.0);
}

std::string export_potential_outcomes(const std::vector<PotentialOutcomes>& sim) {
    std::string out = "subject_id,z,b,y1,ym_rx,ym_c,change_rx,change_c\n";
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const auto& p = sim[i];
        out += "s" + std::to_string(i + 1);
        for (double v : {p.z, p.b, p.y1, p.ym_rx, p.ym_c, p.change_rx, p.change_c}) {
            out += ',';
            out += format_value(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace etz
