#include "etz/decomposition.hpp"
#include "etz/simulation.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace etz;

namespace {

using Sigma = std::array<std::array<double, 2>, 2>;

Sigma sigma_of(double vz, double vt, double ve, double cov = 0.0) {
    return {{{vz + ve, vz + cov}, {vz + cov, vz + vt + ve + 2 * cov}}};
}

VisitMoments simulated_moments(double vz, double vt, double ve, std::size_t n, std::uint64_t seed,
                               double cov = 0.0) {
    SimConfig cfg;
    cfg.n_subjects = n;
    cfg.var_z = vz;
    cfg.var_traj = vt;
    cfg.var_e = ve;
    cfg.cov_z_traj = cov;
    cfg.seed = seed;
    return pooled_visit_moments(to_factual(simulate_counterfactual(cfg), seed));
}

}  // namespace

TEST_CASE("reference summary moments decompose to the expected components") {
    const auto m = VisitMoments::from_summary(64.58, 135.39, 92.37);
    const auto c = decompose_independent(m);
    CHECK(std::abs(c.var_z - 53.80) <= 0.01);
    CHECK(std::abs(c.var_traj - 70.81) <= 0.01);
    CHECK(std::abs(c.var_e - 10.78) <= 0.01);
    CHECK(c.var_z == doctest::Approx(53.80).epsilon(1e-12));
    CHECK(c.var_traj == doctest::Approx(70.81).epsilon(1e-12));
    CHECK(c.var_e == doctest::Approx(10.78).epsilon(1e-12));

    const auto t = cov_aware_terms(m);
    CHECK(t.z_plus_covterm == doctest::Approx(53.80));
    CHECK(t.traj_plus_2cov == doctest::Approx(70.81));
}

TEST_CASE("pure measurement error and no-change cases") {
    const auto pure = decompose_independent(VisitMoments::from_summary(4.0, 4.0, 8.0));
    CHECK(pure.var_z == doctest::Approx(0.0));
    CHECK(pure.var_traj == doctest::Approx(0.0));
    CHECK(pure.var_e == doctest::Approx(4.0));

    // Identical visits: Var(change) = 0, everything is intercept.
    const auto same = decompose_independent(VisitMoments::from_summary(9.0, 9.0, 0.0));
    CHECK(same.var_z == doctest::Approx(9.0));
    CHECK(same.var_traj == doctest::Approx(0.0));
    CHECK(same.var_e == doctest::Approx(0.0));
}

TEST_CASE("infeasible decompositions are reported without clamping") {
    const auto m = VisitMoments::from_summary(100.0, 80.0, 30.0);
    try {
        decompose_independent(m);
        FAIL("expected InfeasibleDecomposition");
    } catch (const InfeasibleDecomposition& e) {
        CHECK(e.code() == ErrorCode::infeasible);
        CHECK(e.components().var_traj == doctest::Approx(-20.0));
        REQUIRE(e.verdict().failing.size() == 1);
        CHECK(e.verdict().failing.front() == "var_traj");
        CHECK_FALSE(e.verdict().interpretation.empty());
    }
    const auto raw = decompose_unchecked(m);
    CHECK(raw.var_traj == doctest::Approx(-20.0));

    const auto v = feasibility_check({-1.0, 70.0, 10.0, 0.0}, 1e-9);
    CHECK_FALSE(v.pass);
    REQUIRE(v.failing.size() == 1);
    CHECK(v.failing.front() == "var_z");
    CHECK(feasibility_check({0.0, 70.0, 10.0, 0.0}, 1e-9).pass);
    CHECK(feasibility_check({-1e-12, 70.0, 10.0, 0.0}, 1e-9).pass);
}

TEST_CASE("decompose then reconstruct recovers random moment triples") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const EtzComponents truth{u(gen), u(gen), u(gen), 0.0};
        const auto m = reconstruct_moments(truth);
        const auto c = decompose_independent(m);
        const double eps = 64 * 2.2e-16 * m.var_milestone;
        CHECK(std::abs(c.var_z - truth.var_z) <= eps);
        CHECK(std::abs(c.var_traj - truth.var_traj) <= eps);
        CHECK(std::abs(c.var_e - truth.var_e) <= eps);
        const auto r = identity_residuals(c, m);
        CHECK(std::abs(r.baseline) <= eps);
        CHECK(std::abs(r.milestone) <= eps);
        CHECK(std::abs(r.change) <= eps);
        ++checked;
    }
    CHECK(checked == 2000);
}

TEST_CASE("reconstruction includes the covariance term") {
    const auto m = reconstruct_moments({50.0, 70.0, 10.0, 5.0});
    CHECK(m.var_baseline == doctest::Approx(60.0));
    CHECK(m.var_milestone == doctest::Approx(140.0));
    CHECK(m.var_change == doctest::Approx(90.0));
    CHECK(m.cov_1m == doctest::Approx(55.0));
}

TEST_CASE("decomposition of simulated data recovers the generating components") {
    const std::size_t n = 10'000;
    const auto m = simulated_moments(53.802, 70.809, 10.778, n, 4242);
    const auto c = decompose_independent(m);
    const auto sigma = sigma_of(53.802, 70.809, 10.778);
    const double dof = n - 2.0;
    CHECK(std::abs(c.var_z - 53.802) < 3 * oracle::gaussian_moment_se(sigma, 0, 0, 1, dof));
    CHECK(std::abs(c.var_traj - 70.809) < 3 * oracle::gaussian_moment_se(sigma, -1, 1, 0, dof));
    CHECK(std::abs(c.var_e - 10.778) < 3 * oracle::gaussian_moment_se(sigma, 1, 0, -1, dof));
}

TEST_CASE("estimation error shrinks like 1/sqrt(N)") {
    std::vector<double> scaled;
    for (const std::size_t n : {500u, 5000u, 50000u}) {
        double ss = 0.0;
        const int seeds = 12;
        for (int s = 1; s <= seeds; ++s) {
            const auto c = decompose_unchecked(simulated_moments(50, 70, 10, n, 1000 * n + s));
            ss += (c.var_z - 50) * (c.var_z - 50);
        }
        scaled.push_back(std::sqrt(ss / seeds) * std::sqrt(static_cast<double>(n)));
    }
    // sqrt(N) * RMSE estimates the same constant at every N.
    const double expected = oracle::gaussian_moment_se(sigma_of(50, 70, 10), 0, 0, 1, 1.0);
    for (double v : scaled) {
        CHECK(v > 0.5 * expected);
        CHECK(v < 1.6 * expected);
    }
}

TEST_CASE("a Z-Traj covariance loads onto the intercept term") {
    const std::size_t n = 20'000;
    const auto m = simulated_moments(53.802, 70.809, 10.778, n, 5, 5.0);
    const auto c = decompose_independent(m);
    const auto sigma = sigma_of(53.802, 70.809, 10.778, 5.0);
    CHECK(std::abs(c.var_z - 58.802) < 3 * oracle::gaussian_moment_se(sigma, 0, 0, 1, n - 2.0));
    CHECK(cov_aware_terms(m).z_plus_covterm == doctest::Approx(c.var_z));
}

TEST_CASE("assumptions are listed") {
    CHECK(decomposition_assumptions().size() >= 2);
    CHECK(default_tolerance(VisitMoments::from_summary(64.58, 135.39, 92.37)) ==
          doctest::Approx(135.39e-9));
}
