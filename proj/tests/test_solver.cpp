#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace wplap;
using wplap::testing::ball_disc;
using wplap::testing::interval_disc;
using wplap::testing::shipped_spec;

namespace {

const double kPi = std::numbers::pi;

/// E(x, y) = (x^2 - 1)^2 + 2 (y - 0.3 x^2)^2 + 0.2 x: two wells joined by one saddle.
struct ToyEnergy {
    Eigen::SparseMatrix<double> K;
    ToyEnergy() : K(2, 2) { K.setIdentity(); }
    Eigen::Index size() const { return 2; }
    double value(const Eigen::VectorXd& v) const {
        const double x = v[0], y = v[1];
        return std::pow(x * x - 1, 2) + 2 * std::pow(y - 0.3 * x * x, 2) + 0.2 * x;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& v) const {
        const double x = v[0], y = v[1], w = y - 0.3 * x * x;
        return Eigen::Vector2d(4 * x * (x * x - 1) - 2.4 * x * w + 0.2, 4 * w);
    }
    Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd& v) const {
        const double x = v[0], y = v[1];
        Eigen::SparseMatrix<double> H(2, 2);
        H.insert(0, 0) = 12 * x * x - 4 - 2.4 * (y - 0.3 * x * x) + 1.44 * x * x;
        H.insert(0, 1) = -2.4 * x;
        H.insert(1, 0) = -2.4 * x;
        H.insert(1, 1) = 4;
        return H;
    }
    const Eigen::SparseMatrix<double>& metric() const { return K; }
    double residual_norm(const Eigen::VectorXd& r) const { return r.norm(); }
};

/// Zooming grid search for the point of smallest |grad E| in a box.
Eigen::Vector2d brute_force_critical_point(const ToyEnergy& e, Eigen::Vector2d lo, Eigen::Vector2d hi) {
    Eigen::Vector2d best = 0.5 * (lo + hi);
    for (int level = 0; level < 12; ++level) {
        double bv = std::numeric_limits<double>::infinity();
        const int n = 200;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                const Eigen::Vector2d x(lo[0] + (hi[0] - lo[0]) * i / n, lo[1] + (hi[1] - lo[1]) * j / n);
                const double g = e.gradient(x).norm();
                if (g < bv) {
                    bv = g;
                    best = x;
                }
            }
        const Eigen::Vector2d half = 0.05 * (hi - lo);
        lo = best - half;
        hi = best + half;
    }
    return best;
}

double dual_pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }

Energy linear_benchmark(double h, std::shared_ptr<const Discretization>* out = nullptr) {
    auto disc = interval_disc(h);
    if (out) *out = disc;
    return Energy(disc, Nonlinearity::from("(1 + pi^2) * sin(pi * x1)"), Nonlinearity::zero(), EnergyParams{2.0, 1.0, 0.0});
}

}  // namespace

TEST(Solver, SimonInequality) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int N = 1; N <= 3; ++N)
        for (double p : {2.0, 2.5, 3.0, 4.0})
            for (int k = 0; k < 2000; ++k) {
                double x[3] = {}, y[3] = {};
                double nx = 0, ny = 0, nd = 0;
                for (int i = 0; i < N; ++i) {
                    x[i] = g(rng);
                    y[i] = g(rng);
                    nx += x[i] * x[i];
                    ny += y[i] * y[i];
                    nd += (x[i] - y[i]) * (x[i] - y[i]);
                }
                nx = std::sqrt(nx);
                ny = std::sqrt(ny);
                nd = std::sqrt(nd);
                double lhs = 0;
                for (int i = 0; i < N; ++i)
                    lhs += (std::pow(nx, p - 2) * x[i] - std::pow(ny, p - 2) * y[i]) * (x[i] - y[i]);
                EXPECT_GE(lhs - std::pow(2.0, -p) * std::pow(nd, p), -1e-14);
            }
}

TEST(Solver, DiscreteUniformMonotonicity) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double p : {2.0, 3.0, 4.0}) {
        auto disc = interval_disc(1.0 / 64);
        Energy phi(disc, Nonlinearity::zero(), Nonlinearity::zero(), EnergyParams{p});
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd U(phi.size()), V(phi.size());
            for (Eigen::Index i = 0; i < U.size(); ++i) U[i] = u(rng), V[i] = u(rng);
            const double lhs = dual_pairing(phi.phi_gradient(U) - phi.phi_gradient(V), U - V);
            const double diff = weighted_norm(*disc, disc->from_dofs(U - V), p).full_norm;
            EXPECT_GE(lhs, std::pow(2.0, -p) * std::pow(diff, p) * (1 - 1e-10));
        }
    }
}

TEST(Solver, CoercivityProbe) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double p : {2.0, 3.0}) {
        auto disc = interval_disc(1.0 / 64, WeightSpec::distance_power(0.5));
        Energy phi(disc, Nonlinearity::zero(), Nonlinearity::zero(), EnergyParams{p});
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd U(phi.size());
            for (Eigen::Index i = 0; i < U.size(); ++i) U[i] = u(rng);
            const double n = weighted_norm(*disc, disc->from_dofs(U), p).full_norm;
            EXPECT_GE(dual_pairing(phi.phi_gradient(U), U) / n, std::pow(n, p - 1) * (1 - 1e-10));
        }
    }
}

TEST(Solver, InvertPhiPrimeZero) {
    auto disc = interval_disc(1.0 / 64);
    const auto u = invert_phi_prime(disc, 3.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(disc->num_dofs())));
    EXPECT_EQ(sup_norm(u), 0.0);
}

TEST(Solver, InvertPhiPrimeSine) {
    auto disc = interval_disc(1.0 / 256);
    const Eigen::VectorXd rhs = load_vector(*disc, [](const Point& x) { return std::sin(kPi * x[0]); });
    const auto u = invert_phi_prime(disc, 2.0, rhs);
    double err = 0.0;
    for (std::size_t v = 0; v < u.values.size(); ++v)
        err = std::max(err, std::abs(u.values[v] - std::sin(kPi * disc->mesh().vertices[v][0]) / (1 + kPi * kPi)));
    EXPECT_LT(err, 1e-4);
}

TEST(Solver, InvertPhiPrimeIsUnique) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SolverConfig cfg;
    for (double p : {2.0, 3.0}) {
        auto disc = interval_disc(1.0 / 64);
        const auto n = static_cast<Eigen::Index>(disc->num_dofs());
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd rhs(n), s1(n), s2(n);
            for (Eigen::Index i = 0; i < n; ++i) rhs[i] = 0.05 * u(rng), s1[i] = 3 * u(rng), s2[i] = 3 * u(rng);
            const auto a = invert_phi_prime(disc, p, rhs, cfg, true, s1);
            const auto b = invert_phi_prime(disc, p, rhs, cfg, true, s2);
            double d = 0.0;
            for (std::size_t v = 0; v < a.values.size(); ++v) d = std::max(d, std::abs(a.values[v] - b.values[v]));
            EXPECT_LE(d, 10 * cfg.tolerance);
        }
    }
}

TEST(Solver, MinimizeAtZeroParameters) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 128);
    Energy e(disc, sp.f, sp.g, EnergyParams{2.0, 0.0, 0.0});
    const auto us = build_ustar(sp.d, sp.ball, disc->mesh_ptr());
    const SolutionRecord r = minimize_energy(e, us, SolverConfig{});
    EXPECT_LT(sup_norm(r.u), 1e-8);
    EXPECT_NEAR(r.energy, 0.0, 1e-14);
}

TEST(Solver, MinimizeLinearBenchmark) {
    std::shared_ptr<const Discretization> disc;
    Energy e = linear_benchmark(1.0 / 256, &disc);
    const auto us = build_ustar(1.0, BallSpec{{0.5, 0.0}, 0.1, 0.2}, disc->mesh_ptr());
    const SolverConfig cfg;
    const SolutionRecord r = minimize_energy(e, us, cfg);
    EXPECT_LT(r.residual_norm, 1e-6);
    double err = 0.0;
    for (std::size_t v = 0; v < r.u.values.size(); ++v)
        err = std::max(err, std::abs(r.u.values[v] - std::sin(kPi * disc->mesh().vertices[v][0])));
    EXPECT_LT(err, 1e-3);
    // Quadratic energy: E(u) = -(1/2) ||u||^2 = -(1/2)(1 + pi^2)/2 at the exact solution.
    EXPECT_NEAR(r.energy, -0.25 * (1 + kPi * kPi), 1e-3);
    for (const auto& [name, x0] : multistart_seeds(e, us, cfg.seed)) EXPECT_LE(r.energy, e.value(x0) + 1e-12) << name;
}

TEST(Solver, RefinementConsistency) {
    std::vector<double> errs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        std::shared_ptr<const Discretization> disc;
        Energy e = linear_benchmark(h, &disc);
        const auto us = build_ustar(1.0, BallSpec{{0.5, 0.0}, 0.3, 0.4}, disc->mesh_ptr());
        const SolutionRecord r = minimize_energy(e, us, SolverConfig{});
        double err = 0.0;
        for (std::size_t v = 0; v < r.u.values.size(); ++v)
            err = std::max(err, std::abs(r.u.values[v] - std::sin(kPi * disc->mesh().vertices[v][0])));
        errs.push_back(err / h);
    }
    for (double c : errs) EXPECT_LT(c, 1.0);
    EXPECT_LE(errs[2], errs[0]);
}

TEST(Solver, SublevelWithoutConstraintMatchesGlobalMinimizer) {
    std::shared_ptr<const Discretization> disc;
    Energy e = linear_benchmark(1.0 / 128, &disc);
    const auto us = build_ustar(1.0, BallSpec{{0.5, 0.0}, 0.1, 0.2}, disc->mesh_ptr());
    const SolverConfig cfg;
    const SolutionRecord g = minimize_energy(e, us, cfg);
    const SolutionRecord s = sublevel_minimize(e, std::numeric_limits<double>::infinity(), cfg);
    EXPECT_FALSE(s.constraint_active);
    double d = 0.0;
    for (std::size_t v = 0; v < g.u.values.size(); ++v) d = std::max(d, std::abs(g.u.values[v] - s.u.values[v]));
    EXPECT_LT(d, 1e-6);
}

TEST(Solver, SublevelAtZeroParameters) {
    auto disc = interval_disc(1.0 / 64);
    Energy e(disc, Nonlinearity::zero(), Nonlinearity::zero(), EnergyParams{});
    const SolutionRecord s = sublevel_minimize(e, 0.1, SolverConfig{});
    EXPECT_EQ(sup_norm(s.u), 0.0);
    EXPECT_FALSE(s.constraint_active);
    EXPECT_THROW(sublevel_minimize(e, 0.0, SolverConfig{}), ArgumentError);
}

TEST(Solver, SublevelSolutionStaysBelowC) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    Energy e(disc, sp.f, sp.g, EnergyParams{2.0, 30.0, 0.0});
    const EmbeddingEstimate k = estimate_k(*disc, sp.p, sp.s);
    const double r = compute_r(sp.c, k.k_upper, sp.p);
    const SolutionRecord s = sublevel_minimize(e, r, SolverConfig{});
    EXPECT_LE(sup_norm(s.u), k.k_upper * std::pow(sp.p * r, 1.0 / sp.p) + 1e-6);
    EXPECT_LE(sup_norm(s.u), sp.c + 1e-6);
}

TEST(Solver, MountainPassOnToyEnergy) {
    const ToyEnergy toy;
    SolverConfig cfg;
    cfg.tolerance = 1e-12;
    const MinimizeResult a = minimize_from(toy, Eigen::Vector2d(-1.0, 0.3), cfg);
    const MinimizeResult b = minimize_from(toy, Eigen::Vector2d(1.0, 0.3), cfg);
    ASSERT_TRUE(a.converged && b.converged);
    const MinimizeResult s = mountain_pass_point(toy, a.x, b.x, cfg);
    const Eigen::Vector2d oracle = brute_force_critical_point(toy, {-0.5, -0.5}, {0.5, 0.5});
    EXPECT_LT((s.x - oracle).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_GE(s.energy, std::max(a.energy, b.energy) - cfg.tolerance);
    // The saddle has one negative Hessian eigenvalue.
    const Eigen::Matrix2d H = Eigen::Matrix2d(toy.hessian(s.x));
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues();
    EXPECT_LT(ev[0], 0.0);
    EXPECT_GT(ev[1], 0.0);
}

TEST(Solver, MountainPassNeedsDistinctEndpoints) {
    const ToyEnergy toy;
    const Eigen::Vector2d a(1.0, 0.3);
    EXPECT_THROW(mountain_pass_point(toy, a, a, SolverConfig{}), ArgumentError);
}

TEST(Solver, ConfigValidation) {
    SolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.string_images = 8;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = SolverConfig{};
    cfg.backtrack = 1.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Solver, ScanAtZeroParametersFindsOnlyZero) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 128);
    Energy e(disc, sp.f, sp.g, EnergyParams{});
    const auto us = build_ustar(sp.d, sp.ball, disc->mesh_ptr());
    const auto sets = scan(e, {0.0}, {0.0}, us, compute_r(sp.c, 0.5, sp.p), SolverConfig{});
    ASSERT_EQ(sets.size(), 1u);
    EXPECT_EQ(sets[0].distinct_count, 1);
    EXPECT_EQ(sets[0].distinct_nonzero, 0);
    EXPECT_TRUE(sets[0].failures.empty());
}

TEST(Solver, ShippedInstanceHasThreeSolutions) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    Energy e(disc, sp.f, sp.g, EnergyParams{});
    const auto us = build_ustar(sp.d, sp.ball, disc->mesh_ptr());
    const SolverConfig cfg;
    const SolutionSet set = solve_cell(e, 30.0, 0.0, us, compute_r(sp.c, 0.5, sp.p), cfg);
    EXPECT_GE(set.distinct_count, 3);
    double scale = 0.0;
    for (const auto& r : set.records) scale = std::max(scale, sup_norm(r.u));
    EXPECT_GT(set.min_pairwise_distance, cfg.distinct_tol * scale);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& rec : set.records) {
        EXPECT_LE(rec.residual_norm, cfg.tolerance);
        // Weak form against random test functions, not only the nodal basis.
        const Eigen::VectorXd R = weak_residual(e, rec.u);
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd V(R.size());
            for (Eigen::Index i = 0; i < V.size(); ++i) V[i] = u(rng);
            const double vn = weighted_norm(*disc, disc->from_dofs(V), 2.0).full_norm;
            EXPECT_LE(std::abs(R.dot(V)) / vn, 1e-6);
        }
    }
    const auto mp = std::find_if(set.records.begin(), set.records.end(),
                                 [](const SolutionRecord& r) { return r.classification == Classification::mountain_pass; });
    ASSERT_NE(mp, set.records.end());
    for (const auto& r : set.records) EXPECT_GE(mp->energy, r.energy - cfg.tolerance);
}
