#include "etz/moments.hpp"

#include "etz/error.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace etz {
namespace {

void require_nonnegative(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::non_finite, std::string(name) + " is not finite");
    }
    if (v < 0.0) {
        throw Error(ErrorCode::invalid_argument, std::string(name) + " must be >= 0");
    }
}

struct PackedPairs {
    std::vector<double> y1;
    std::vector<double> ym;
    std::vector<int> group;
    std::vector<std::string> arm_names;
};

PackedPairs pack(const TrialDataset& d) {
    PackedPairs p;
    p.arm_names.assign(d.arms().begin(), d.arms().end());
    p.y1.reserve(d.size());
    p.ym.reserve(d.size());
    p.group.reserve(d.size());
    const std::size_t m = d.milestone_visit();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.subjects()[i];
        const auto b = s.outcomes.front();
        const auto y = s.outcomes[m - 1];
        if (!b || !y) {
            throw Error(ErrorCode::invalid_argument,
                        "subject '" + s.subject_id +
                            "' is missing visit 1 or m; run complete_cases first");
        }
        const auto it = std::lower_bound(p.arm_names.begin(), p.arm_names.end(), s.arm);
        p.y1.push_back(*b);
        p.ym.push_back(*y);
        p.group.push_back(static_cast<int>(std::distance(p.arm_names.begin(), it)));
    }
    return p;
}

}  // namespace

VisitMoments VisitMoments::from_summary(double var_baseline, double var_milestone,
                                        double var_change) {
    VisitMoments m;
    m.var_baseline = var_baseline;
    m.var_milestone = var_milestone;
    m.var_change = var_change;
    m.cov_1m = (var_milestone + var_baseline - var_change) / 2.0;
    validate(m);
    return m;
}

VisitMoments VisitMoments::from_summary(double var_baseline, double var_milestone,
                                        double var_change, double cov_1m, double rel_tol) {
    VisitMoments m;
    m.var_baseline = var_baseline;
    m.var_milestone = var_milestone;
    m.var_change = var_change;
    m.cov_1m = cov_1m;
    validate(m);
    const double scale = std::max({var_baseline, var_milestone, var_change, 1.0});
    if (std::abs(m.identity_residual()) > rel_tol * scale) {
        throw Error(ErrorCode::invalid_argument,
                    "inconsistent summary: var_change must equal var_baseline + var_milestone - "
                    "2 cov_1m");
    }
    return m;
}

VisitMoments VisitMoments::from_covariance(double var_baseline, double var_milestone,
                                           double cov_1m) {
    VisitMoments m;
    m.var_baseline = var_baseline;
    m.var_milestone = var_milestone;
    m.cov_1m = cov_1m;
    m.var_change = var_baseline + var_milestone - 2.0 * cov_1m;
    // Cauchy-Schwarz can be violated by rounding only.
    if (m.var_change < 0.0 && m.var_change > -1e-12 * std::max(var_baseline, var_milestone)) {
        m.var_change = 0.0;
    }
    validate(m);
    return m;
}

double VisitMoments::sd_baseline() const { return std::sqrt(var_baseline); }
double VisitMoments::sd_milestone() const { return std::sqrt(var_milestone); }
double VisitMoments::sd_change() const { return std::sqrt(var_change); }

std::size_t VisitMoments::total_used() const noexcept {
    std::size_t n = 0;
    for (const auto& [arm, k] : n_used) n += k;
    return n;
}

void validate(const VisitMoments& m) {
    require_nonnegative(m.var_baseline, "var_baseline");
    require_nonnegative(m.var_milestone, "var_milestone");
    require_nonnegative(m.var_change, "var_change");
    if (!std::isfinite(m.cov_1m)) throw Error(ErrorCode::non_finite, "cov_1m is not finite");
}

VisitMoments pooled_visit_moments(const TrialDataset& d, Execution exec) {
    const PackedPairs p = pack(d);
    const int groups = static_cast<int>(p.arm_names.size());
    const auto acc = kernels::accumulate_pairs(p.y1, p.ym, p.group, groups, exec);

    double s11 = 0.0, smm = 0.0, s1m = 0.0, n_total = 0.0;
    VisitMoments out;
    for (std::size_t g = 0; g < acc.size(); ++g) {
        s11 += acc[g].sxx;
        smm += acc[g].syy;
        s1m += acc[g].sxy;
        n_total += acc[g].count;
        out.n_used[p.arm_names[g]] = static_cast<std::size_t>(acc[g].count);
    }
    const double dof = n_total - static_cast<double>(groups);
    if (dof <= 0.0) throw Error(ErrorCode::zero_dof, "no residual degrees of freedom");

    out.var_baseline = s11 / dof;
    out.var_milestone = smm / dof;
    out.cov_1m = s1m / dof;
    out.var_change = out.var_baseline + out.var_milestone - 2.0 * out.cov_1m;
    // The sample covariance matrix is PSD; only rounding can push this below 0.
    if (out.var_change < 0.0) out.var_change = 0.0;
    validate(out);
    return out;
}

std::map<std::string, VisitMoments> per_arm_visit_moments(const TrialDataset& d,
                                                          Execution exec) {
    const PackedPairs p = pack(d);
    const auto acc = kernels::accumulate_pairs(p.y1, p.ym, p.group,
                                               static_cast<int>(p.arm_names.size()), exec);
    std::map<std::string, VisitMoments> out;
    for (std::size_t g = 0; g < acc.size(); ++g) {
        const double dof = acc[g].count - 1.0;
        if (dof <= 0.0) {
            throw Error(ErrorCode::zero_dof, "arm '" + p.arm_names[g] + "' has one subject");
        }
        VisitMoments m;
        m.var_baseline = acc[g].sxx / dof;
        m.var_milestone = acc[g].syy / dof;
        m.cov_1m = acc[g].sxy / dof;
        m.var_change = std::max(0.0, m.var_baseline + m.var_milestone - 2.0 * m.cov_1m);
        m.n_used[p.arm_names[g]] = static_cast<std::size_t>(acc[g].count);
        validate(m);
        out.emplace(p.arm_names[g], std::move(m));
    }
    return out;
}

double ArmVisitMeans::tau_hat(const std::string& arm) const {
    const auto rx = mean_change.find(arm);
    const auto c = mean_change.find(control_label);
    if (rx == mean_change.end() || c == mean_change.end()) {
        throw Error(ErrorCode::invalid_argument, "unknown arm '" + arm + "'");
    }
    return rx->second - c->second;
}

ArmVisitMeans arm_visit_means(const TrialDataset& d) {
    const std::size_t m = d.visit_count();
    std::map<std::string, std::vector<double>> sums, counts;
    std::map<std::string, std::pair<double, double>> change;  // (sum, count)
    for (const auto& arm : d.arms()) {
        sums[arm].assign(m, 0.0);
        counts[arm].assign(m, 0.0);
        change[arm] = {0.0, 0.0};
    }
    for (const auto& s : d.subjects()) {
        auto& sum = sums[s.arm];
        auto& cnt = counts[s.arm];
        for (std::size_t v = 0; v < m; ++v) {
            if (s.outcomes[v]) {
                sum[v] += *s.outcomes[v];
                cnt[v] += 1.0;
            }
        }
        if (s.outcomes.front() && s.outcomes[m - 1]) {
            change[s.arm].first += *s.outcomes[m - 1] - *s.outcomes.front();
            change[s.arm].second += 1.0;
        }
    }

    ArmVisitMeans out;
    out.control_label = d.control_label();
    for (const auto& arm : d.arms()) {
        auto& cells = out.means[arm];
        cells.resize(m);
        for (std::size_t v = 0; v < m; ++v) {
            if (counts[arm][v] > 0.0) cells[v] = sums[arm][v] / counts[arm][v];
        }
        if (!cells.front() || !cells[m - 1] || change[arm].second == 0.0) {
            throw Error(ErrorCode::empty_cell,
                        "arm '" + arm + "' has no observation at visit 1 or visit m");
        }
        out.mean_change[arm] = change[arm].first / change[arm].second;
    }
    return out;
}

}  // namespace etz
