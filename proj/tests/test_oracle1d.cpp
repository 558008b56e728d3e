#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace wplap;
using wplap::testing::shipped_spec;

namespace {

ProblemSpec linear_spec() {
    ProblemSpec sp;
    sp.f = Nonlinearity::from("t", std::string("t^2/2"));
    sp.g = Nonlinearity::zero();
    return sp;
}

}  // namespace

TEST(Oracle1D, ZeroSlopeGivesZero) {
    const ProblemSpec sp = shipped_spec();
    EXPECT_EQ(shoot(sp, 30.0, 0.05, 0.0, 512), 0.0);
}

TEST(Oracle1D, HyperbolicSine) {
    EXPECT_NEAR(shoot(linear_spec(), 0.0, 0.0, 1.0, 10000), std::sinh(1.0), 1e-8);
    EXPECT_NEAR(shoot(linear_spec(), 0.0, 0.0, -2.0, 10000), -2.0 * std::sinh(1.0), 2e-8);
}

TEST(Oracle1D, RungeKuttaOrder) {
    double prev = std::abs(shoot(linear_spec(), 0.0, 0.0, 1.0, 10) - std::sinh(1.0));
    for (int n : {20, 40, 80}) {
        const double err = std::abs(shoot(linear_spec(), 0.0, 0.0, 1.0, n) - std::sinh(1.0));
        const double ratio = prev / err;
        EXPECT_GE(ratio, 12.0) << n;
        EXPECT_LE(ratio, 20.0) << n;
        prev = err;
    }
}

TEST(Oracle1D, OddSymmetry) {
    ProblemSpec sp = shipped_spec();
    sp.g = Nonlinearity::zero();
    for (double s : {0.5, 3.0, 12.0}) EXPECT_EQ(shoot(sp, 30.0, 0.0, -s, 1024), -shoot(sp, 30.0, 0.0, s, 1024));
    sp.weight = WeightSpec::distance_power(0.5);
    for (double s : {0.5, 3.0}) {
        const double t = shoot(sp, 10.0, 0.0, s, 1024);
        EXPECT_TRUE(std::isfinite(t));
        EXPECT_EQ(shoot(sp, 10.0, 0.0, -s, 1024), -t);
    }
}

TEST(Oracle1D, UnforcedProblemHasOnlyTrivialRoot) {
    ShootingOptions opt;
    opt.n_scan = 401;
    opt.ode_steps = 512;
    const ShootingProfile prof = enumerate_solutions(shipped_spec(), 0.0, 0.0, opt);
    ASSERT_EQ(prof.roots.size(), 1u);
    EXPECT_EQ(prof.roots[0].sigma, 0.0);
    EXPECT_TRUE(prof.flat_intervals.empty());
}

TEST(Oracle1D, EigenvalueGivesFlatTerminalMap) {
    ShootingOptions opt;
    opt.sigma_min = -10.0;
    opt.sigma_max = 10.0;
    opt.n_scan = 201;
    opt.ode_steps = 2048;
    const double lam = 1.0 + std::numbers::pi * std::numbers::pi;
    const ShootingProfile prof = enumerate_solutions(linear_spec(), lam, 0.0, opt);
    ASSERT_FALSE(prof.flat_intervals.empty());
    EXPECT_LT(prof.flat_intervals.front().first, -5.0);
    EXPECT_GT(prof.flat_intervals.front().second, 5.0);
    // Away from the eigenvalue the map is not flat and only the trivial root remains.
    const ShootingProfile off = enumerate_solutions(linear_spec(), lam + 1.0, 0.0, opt);
    EXPECT_TRUE(off.flat_intervals.empty());
    ASSERT_EQ(off.roots.size(), 1u);
    EXPECT_NEAR(off.roots[0].sigma, 0.0, 1e-8);
}

TEST(Oracle1D, LinearBenchmarkSlope) {
    ProblemSpec sp;
    sp.f = Nonlinearity::from("(1 + pi^2) * sin(pi * x1)");
    sp.g = Nonlinearity::zero();
    ShootingOptions opt;
    opt.sigma_min = -10.0;
    opt.sigma_max = 10.0;
    opt.n_scan = 201;
    const ShootingProfile prof = enumerate_solutions(sp, 1.0, 0.0, opt);
    ASSERT_EQ(prof.roots.size(), 1u);
    EXPECT_NEAR(prof.roots[0].sigma, std::numbers::pi, 1e-6);
    EXPECT_NEAR(prof.roots[0].at(0.5), 1.0, 1e-6);
}

TEST(Oracle1D, ShippedInstanceRoots) {
    const ProblemSpec sp = shipped_spec();
    const ShootingProfile prof = enumerate_solutions(sp, 30.0, 0.0);
    EXPECT_GE(prof.roots.size(), 3u);
    for (std::size_t i = 0; i + 1 < prof.brackets.size(); ++i) EXPECT_LE(prof.brackets[i].second, prof.brackets[i + 1].first);
    // Uniform meshes whose vertices lie on the integration grid.
    auto coarse = wplap::testing::interval_disc(1.0 / 256);
    auto fine = wplap::testing::interval_disc(1.0 / 512);
    Energy ec(coarse, sp.f, sp.g, EnergyParams{2.0, 30.0, 0.0});
    Energy ef(fine, sp.f, sp.g, EnergyParams{2.0, 30.0, 0.0});
    for (const auto& root : prof.roots) {
        EXPECT_TRUE(root.converged);
        EXPECT_LE(std::abs(root.terminal), 1e-8);
        const auto uc = root_on_mesh(root, coarse->mesh_ptr());
        const auto uf = root_on_mesh(root, fine->mesh_ptr());
        const double rc = ec.residual_norm(weak_residual(ec, uc));
        const double rf = ef.residual_norm(weak_residual(ef, uf));
        EXPECT_LE(rc, 1e-4) << root.sigma;
        EXPECT_LE(rf, rc) << root.sigma;
        EXPECT_LE(profile_distance(root, uf), 1e-8);
    }
}

TEST(Oracle1D, RejectsUnsupportedInputs) {
    ProblemSpec sp = shipped_spec();
    sp.domain = Domain::box({0.0, 0.0}, {1.0, 1.0});
    EXPECT_THROW(enumerate_solutions(sp, 1.0, 0.0), DimensionUnsupported);
    sp = shipped_spec();
    sp.p = 1.5;
    EXPECT_THROW(enumerate_solutions(sp, 1.0, 0.0), RegimeError);
    ShootingOptions opt;
    opt.n_scan = 1;
    EXPECT_THROW(enumerate_solutions(shipped_spec(), 1.0, 0.0, opt), ArgumentError);
}

TEST(Oracle1D, BlowupIsFlagged) {
    const ProblemSpec sp = linear_spec();
    const ShootingSystem sys(sp, -1e4, 0.0);
    const ShotResult r = shoot(sys, 1.0, 64, false, 1e3);
    EXPECT_TRUE(r.diverged);
    EXPECT_EQ(r.terminal, 1e3);
    EXPECT_EQ(shoot(sys, -1.0, 64, false, 1e3).terminal, -1e3);
}
