#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace wplap;
using wplap::testing::ball_disc;
using wplap::testing::interval_disc;
using wplap::testing::shipped_spec;

namespace {

const BallSpec kBall{{0.5, 0.0}, 0.1, 0.2};

EmbeddingEstimate fixed_k(double k) {
    EmbeddingEstimate e;
    e.k_lower = k;
    e.k_upper = k;
    e.upper_mode = BoundMode::certified;
    return e;
}

}  // namespace

TEST(Certificate, AnnulusMassConstantWeight) {
    EXPECT_NEAR(annulus_weight_mass(WeightSpec::constant(1.0), kBall, Domain::interval(0.0, 1.0)), 0.2, 1e-15);
    const BallSpec big{{0.0, 0.0}, 1.0, 2.0};
    EXPECT_NEAR(annulus_weight_mass(WeightSpec::constant(1.0), big, Domain::ball({0.0, 0.0}, 3.0, 2)),
                3.0 * std::numbers::pi, 1e-12);
}

TEST(Certificate, AnnulusMassSingularWeightMatchesMidpointOracle) {
    const double got = annulus_weight_mass(WeightSpec::distance_power(0.5), kBall, Domain::interval(0.0, 1.0));
    const int n = 500000;
    double oracle = 0.0;
    for (double lo : {0.3, 0.6})
        for (int i = 0; i < n; ++i) {
            const double x = lo + (i + 0.5) * 0.1 / n;
            oracle += 0.1 / n / std::sqrt(std::min(x, 1.0 - x));
        }
    EXPECT_NEAR(got, oracle, 1e-6 * oracle);
}

TEST(Certificate, AnnulusMassTwoDimensionalDistanceWeight) {
    const Domain sq = Domain::box({0.0, 0.0}, {1.0, 1.0});
    const BallSpec b{{0.5, 0.5}, 0.1, 0.2};
    const double got = annulus_weight_mass(WeightSpec::distance_power(0.5), b, sq);
    // Polar midpoint oracle.
    const int nr = 400, nt = 4000;
    double oracle = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = 0.1 + (i + 0.5) * 0.1 / nr;
        for (int j = 0; j < nt; ++j) {
            const double th = (j + 0.5) * 2 * std::numbers::pi / nt;
            const double x = 0.5 + r * std::cos(th), y = 0.5 + r * std::sin(th);
            const double dist = std::min({x, 1 - x, y, 1 - y});
            oracle += r * (0.1 / nr) * (2 * std::numbers::pi / nt) / std::sqrt(dist);
        }
    }
    EXPECT_NEAR(got, oracle, 1e-5 * oracle);
}

TEST(Certificate, Xi) {
    EXPECT_NEAR(compute_xi(2.0, 0.1, 0.2, 0.5, 0.2), 0.1 / 0.03 * std::sqrt(0.2), 1e-14);
    EXPECT_NEAR(compute_xi(2.0, 0.1, 0.2, 0.5, 0.2), 1.49071, 1e-5);
    EXPECT_NEAR(compute_xi(2.0, 0.1, 0.2, 1.0, 0.2), 2.0 * compute_xi(2.0, 0.1, 0.2, 0.5, 0.2), 1e-14);
    EXPECT_EQ(compute_xi(2.0, 0.1, 0.2, 0.5, 0.0), 0.0);
    EXPECT_LT(compute_xi(3.0, 0.1, 0.2, 0.5, 1e-12), 1e-3);
    EXPECT_THROW(compute_xi(2.0, 0.2, 0.1, 0.5, 0.2), ArgumentError);
}

TEST(Certificate, Eta) {
    EXPECT_NEAR(compute_eta(2.0, 1, 0.1, 0.2, 0.5, 1.0, 0.2, 2.0), std::sqrt(8.0 / 0.9 + 0.1 + 0.05), 1e-13);
    EXPECT_NEAR(compute_eta(2.0, 1, 0.1, 0.2, 0.5, 1.0, 0.2, 2.0), 3.00646, 2e-5);
    for (double p : {2.0, 3.0})
        EXPECT_NEAR(compute_eta(p, 1, 0.1, 0.2, 1.0, 1.0, 0.2, 2.0) / compute_eta(p, 1, 0.1, 0.2, 0.5, 1.0, 0.2, 2.0),
                    2.0, 1e-14);
    // Third term vanishes as r1 -> 0.
    const double t3_small = std::pow(compute_eta(2.0, 1, 1e-9, 0.2, 0.5, 1.0, 0.2, 2.0), 2) -
                            0.25 * 4 * 0.04 / std::pow(0.04 - 1e-18, 2) * 0.2 - 0.25 * 2 * 0.2;
    EXPECT_NEAR(t3_small, 0.0, 1e-9);
    // Depends on d through the second term.
    EXPECT_GT(compute_eta(2.0, 1, 0.1, 0.2, 0.5, 2.0, 0.2, 2.0), compute_eta(2.0, 1, 0.1, 0.2, 0.5, 1.0, 0.2, 2.0));
}

TEST(Certificate, R) {
    EXPECT_NEAR(compute_r(1.0, 0.5, 2.0), 2.0, 1e-15);
    EXPECT_NEAR(compute_r(0.7, 0.7, 3.0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(compute_r(2.0, 1.0, 3.0), 8.0 / 3.0, 1e-14);
    EXPECT_THROW(compute_r(0.0, 1.0, 2.0), ArgumentError);
}

TEST(Certificate, UstarValues) {
    EXPECT_EQ(ustar_value(1.5, kBall, Point{0.5, 0.0}, 1), 1.5);
    EXPECT_NEAR(ustar_value(1.5, kBall, Point{0.7, 0.0}, 1), 0.0, 1e-14);
    EXPECT_EQ(ustar_value(1.5, kBall, Point{0.9, 0.0}, 1), 0.0);
    const double rho = std::sqrt((0.01 + 0.04) / 2.0);
    EXPECT_NEAR(ustar_value(1.5, kBall, Point{0.5 + rho, 0.0}, 1), 0.75, 1e-14);
    const BallSpec b2{{0.5, 0.5}, 0.1, 0.2};
    EXPECT_NEAR(ustar_value(2.0, b2, Point{0.5 + rho / std::sqrt(2.0), 0.5 - rho / std::sqrt(2.0)}, 2), 1.0, 1e-14);
}

TEST(Certificate, UstarNeedsResolvedBall) {
    EXPECT_THROW(build_ustar(1.0, kBall, wplap::testing::interval_mesh(1.0 / 64)), RefinementRequired);
    EXPECT_NO_THROW(build_ustar(1.0, kBall, wplap::testing::interval_mesh(1.0 / 100)));
}

TEST(Certificate, UstarNormWorkedInstance) {
    auto disc = ball_disc(kBall, WeightSpec::constant(1.0), 1.0 / 256);
    const UstarNorm n = ustar_norm_p(*disc, 1.0, kBall, 2.0);
    // Gradient part (8 / 0.0009) (0.008 - 0.001) / 3, inner mass 0.2, annulus mass 0.07852.
    const double grad = 8.0 / 0.0009 * 0.007 / 3.0;
    EXPECT_NEAR(grad, 20.7407, 1e-4);
    EXPECT_NEAR(n.direct, 21.019, 1e-3 * 21.019);
    EXPECT_NEAR(n.formula_NwN, n.direct, 1e-4 * n.direct);
    // N w_N and w_N coincide for N = 1.
    EXPECT_EQ(n.formula_wN, n.formula_NwN);
    const UstarNorm n2 = ustar_norm_p(*disc, 2.0, kBall, 2.0);
    EXPECT_NEAR(n2.direct, 4.0 * n.direct, 1e-12 * n2.direct);
}

TEST(Certificate, UstarNormFormulaVariantsInTwoDimensions) {
    const Domain sq = Domain::box({0.0, 0.0}, {1.0, 1.0});
    const BallSpec b{{0.5, 0.5}, 0.1, 0.2};
    auto disc = std::make_shared<const Discretization>(sq, std::make_shared<const Mesh>(build_mesh(sq, 1.0 / 80)),
                                                       WeightSpec::constant(1.0));
    const UstarNorm n = ustar_norm_p(*disc, 1.0, b, 2.0);
    EXPECT_LT(std::abs(n.formula_NwN - n.direct), 0.1 * n.direct);
    EXPECT_GT(n.formula_NwN, n.formula_wN);
}

TEST(Certificate, SandwichWorkedInstance) {
    auto disc = ball_disc(kBall, WeightSpec::constant(1.0), 1.0 / 256);
    const auto [lo, hi] = sandwich_bounds_kfree(2.0, 1, 0.1, 0.2, 1.0, 0.2);
    EXPECT_NEAR(lo, 8.889, 1e-3 * 8.889);
    EXPECT_NEAR(hi, 36.156, 1e-3 * 36.156);
    const SandwichResult s = sandwich_check(lo, ustar_norm_p(*disc, 1.0, kBall, 2.0).direct, hi);
    EXPECT_EQ(s.verdict, Verdict::pass);
    EXPECT_GT(s.lower_margin, 0.0);
    EXPECT_GT(s.upper_margin, 0.0);
    EXPECT_EQ(sandwich_check(1.0, 1.0, 2.0).verdict, Verdict::fail);
    EXPECT_EQ(sandwich_check(1.0, 3.0, 2.0).verdict, Verdict::fail);
}

TEST(Certificate, SandwichNarrowAnnulusSweep) {
    for (double r2 : {0.11, 0.15, 0.2}) {
        const BallSpec b{{0.5, 0.0}, 0.1, r2};
        auto disc = ball_disc(b, WeightSpec::constant(1.0), 1.0 / 512);
        const double mass = annulus_weight_mass(WeightSpec::constant(1.0), b, disc->domain());
        const auto [lo, hi] = sandwich_bounds_kfree(2.0, 1, 0.1, r2, 1.0, mass);
        EXPECT_EQ(sandwich_check(lo, ustar_norm_p(*disc, 1.0, b, 2.0).direct, hi).verdict, Verdict::pass) << r2;
    }
}

TEST(Certificate, SandwichRandomInstances) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 40; ++i) {
        const auto c = wplap::testing::random_sandwich_case(rng);
        auto disc = ball_disc(c.ball, c.weight, 1.0 / 256);
        const double mass = annulus_weight_mass(c.weight, c.ball, disc->domain());
        const auto [lo, hi] = sandwich_bounds_kfree(c.p, 1, c.ball.r1, c.ball.r2, c.d, mass);
        const UstarNorm n = ustar_norm_p(*disc, c.d, c.ball, c.p);
        EXPECT_EQ(sandwich_check(lo, n.direct, hi).verdict, Verdict::pass);
        EXPECT_NEAR(n.formula_NwN, n.direct, 1e-3 * n.direct);
    }
}

TEST(Certificate, KCancellation) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> k(0.1, 3.0);
    for (int i = 0; i < 50; ++i) {
        const auto c = wplap::testing::random_sandwich_case(rng);
        const double mass = annulus_weight_mass(c.weight, c.ball, Domain::interval(0.0, 1.0));
        const double kv = k(rng);
        const double xi = compute_xi(c.p, c.ball.r1, c.ball.r2, kv, mass);
        const double eta = compute_eta(c.p, 1, c.ball.r1, c.ball.r2, kv, c.d, mass, 2.0);
        const auto [lo, hi] = sandwich_bounds_kfree(c.p, 1, c.ball.r1, c.ball.r2, c.d, mass);
        EXPECT_NEAR(std::pow(xi * c.d / kv, c.p), lo, 1e-12 * lo);
        EXPECT_NEAR(std::pow(eta * c.d / kv, c.p), hi, 1e-12 * hi);
    }
}

TEST(Certificate, GuardBand) {
    EXPECT_EQ(strict_less(1.0, 2.0), Verdict::pass);
    EXPECT_EQ(strict_less(1.0, 1.0), Verdict::fail);
    EXPECT_EQ(strict_less(1.0, 1.0 + 1e-12), Verdict::inconclusive);
    EXPECT_EQ(weak_less(1.0, 1.0), Verdict::inconclusive);
    EXPECT_EQ(weak_less(1.0 + 1e-6, 1.0), Verdict::fail);
    EXPECT_EQ(to_string(Verdict::heuristic_pass), "heuristic-pass");
}

TEST(Certificate, H1) {
    const Domain d = Domain::interval(0.0, 1.0);
    EXPECT_EQ(check_H1(Nonlinearity::from("t^3"), d, kBall, 1.0).verdict, Verdict::pass);
    const CheckEntry neg = check_H1(Nonlinearity::from("-1"), d, kBall, 1.0);
    EXPECT_EQ(neg.verdict, Verdict::fail);
    EXPECT_NE(neg.detail.find("t = 1"), std::string::npos);
    EXPECT_EQ(check_H1(Nonlinearity::from("sin(t)"), d, kBall, std::numbers::pi).verdict, Verdict::pass);
    // Negative only inside the inner ball: not sampled.
    EXPECT_EQ(check_H1(Nonlinearity::from("-max(0.05 - max(x1 - 0.5, 0.5 - x1), 0)"), d, kBall, 1.0).verdict,
              Verdict::pass);
}

TEST(Certificate, H2) {
    auto disc = interval_disc(1.0 / 64);
    const Nonlinearity quartic = Nonlinearity::from("t^3", std::string("t^4/4"));
    // For F = t^4/4 the condition reduces to d > eta c.
    EXPECT_EQ(check_H2(*disc, quartic, 2.0, 0.4, 1.0, 2.0).verdict, Verdict::pass);
    EXPECT_EQ(check_H2(*disc, quartic, 2.0, 0.6, 1.0, 2.0).verdict, Verdict::fail);
    EXPECT_EQ(check_H2(*disc, quartic, 1.5, 1.0, 1.0, 2.0).verdict, Verdict::fail);
    EXPECT_EQ(check_H2(*disc, Nonlinearity::from("0"), 1.0, 1.0, 1.0, 2.0).verdict, Verdict::fail);
}

TEST(Certificate, H3) {
    const Domain d = Domain::interval(0.0, 1.0);
    Nonlinearity lin = Nonlinearity::from("t", std::string("t^2/2"));
    EXPECT_EQ(check_H3(lin, d, 3.0).verdict, Verdict::skipped);
    lin.growth_h = Expression::parse("1");
    lin.gamma = 2.0;
    EXPECT_EQ(check_H3(lin, d, 3.0).verdict, Verdict::heuristic_pass);
    EXPECT_EQ(check_H3(lin, d, 2.0).verdict, Verdict::fail);
    lin.gamma = 1.0;
    EXPECT_EQ(check_H3(lin, d, 3.0).verdict, Verdict::fail);
}

TEST(Certificate, H4) {
    const Domain d = Domain::interval(0.0, 1.0);
    EXPECT_EQ(check_H4(Nonlinearity::from("exp(t)"), d).verdict, Verdict::pass);
    EXPECT_EQ(check_H4(Nonlinearity::from("t", std::string("t^2/2")), d).verdict, Verdict::pass);
    EXPECT_EQ(check_H4(Nonlinearity::from("t", std::string("t^2/2 + x1")), d).verdict, Verdict::fail);
}

TEST(Certificate, H5) {
    const Domain d = Domain::interval(0.0, 1.0);
    Nonlinearity g = Nonlinearity::from("sin(t)");
    g.envelope = Expression::parse("1");
    EXPECT_EQ(check_H5(g, d, 0.15, 1.0).verdict, Verdict::pass);
    g.envelope = Expression::parse("0.5");
    EXPECT_EQ(check_H5(g, d, 0.15, 1.0).verdict, Verdict::fail);
    g.envelope = Expression::parse("min(t, 1)");
    EXPECT_EQ(check_H5(g, d, 0.15, 1.0).verdict, Verdict::pass);
    g.envelope.reset();
    EXPECT_EQ(check_H5(g, d, 0.15, 1.0).verdict, Verdict::heuristic_pass);
    EXPECT_EQ(check_H5(Nonlinearity::zero(), d, 0.15, 1.0).verdict, Verdict::pass);
}

TEST(Certificate, ShippedInstancePasses) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    const CertificateReport rep = certify(sp, *disc, estimate_k(*disc, sp.p, sp.s));
    EXPECT_EQ(rep.overall, Verdict::pass);
    EXPECT_EQ(rep.exit_code(), 0);
    for (const char* name : {"H1", "H2", "H4", "H5", "dxi_gt_c", "sandwich", "level_separation", "bona1"})
        EXPECT_EQ(rep.entry(name).verdict, Verdict::pass) << name;
    EXPECT_EQ(rep.entry("H3").verdict, Verdict::heuristic_pass);
    EXPECT_NEAR(rep.constants.k, 0.5, 1e-12);
    EXPECT_NEAR(rep.constants.xi, 1.49071, 1e-5);
    EXPECT_NEAR(rep.constants.eta, 3.00646, 2e-5);
    EXPECT_NEAR(rep.constants.phi_ustar, 21.019 / 2, 1e-3 * 10.51);
    EXPECT_TRUE(rep.failing().empty());
}

TEST(Certificate, LargeCFailsLevelCondition) {
    ProblemSpec sp = shipped_spec();
    sp.c = 1.6;
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    const CertificateReport rep = certify(sp, *disc, fixed_k(0.5));
    EXPECT_EQ(rep.entry("dxi_gt_c").verdict, Verdict::fail);
    EXPECT_EQ(rep.overall, Verdict::fail);
    EXPECT_EQ(rep.exit_code(), 2);
    const auto f = rep.failing();
    EXPECT_NE(std::find(f.begin(), f.end(), "dxi_gt_c"), f.end());
}

TEST(Certificate, QuadraticPrimitiveFailsBona1) {
    ProblemSpec sp = shipped_spec();
    sp.f = Nonlinearity::from("t", std::string("t^2/2"));
    sp.c = 1.0;
    sp.d = 1.0;
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    const CertificateReport rep = certify(sp, *disc, fixed_k(0.5));
    EXPECT_EQ(rep.entry("bona1").verdict, Verdict::fail);
    EXPECT_EQ(rep.overall, Verdict::fail);
}

TEST(Certificate, ImplicationChainOnRandomInstances) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const char* fs[][2] = {{"t^3", "t^4/4"}, {"clamp(t,-1,1)^3", nullptr}, {"sin(t)", "1-cos(t)"}, {"t", "t^2/2"},
                           {"exp(t) - 1", "exp(t) - 1 - t"}};
    for (int i = 0; i < 100; ++i) {
        const auto c = wplap::testing::random_sandwich_case(rng);
        ProblemSpec sp;
        sp.p = c.p;
        sp.weight = c.weight;
        sp.ball = c.ball;
        sp.d = c.d;
        sp.c = 0.05 + 2.0 * unit(rng);
        const auto& pick = fs[static_cast<std::size_t>(unit(rng) * 5) % 5];
        sp.f = pick[1] ? Nonlinearity::from(pick[0], std::string(pick[1])) : Nonlinearity::from(pick[0]);
        sp.g = Nonlinearity::zero();
        auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 128);
        const double k = 0.3 + 0.4 * unit(rng);
        const CertificateReport rep = certify(sp, *disc, fixed_k(k));
        if (rep.overall == Verdict::pass) {
            for (const char* name : {"H1", "H2", "dxi_gt_c", "level_separation", "bona1"}) {
                EXPECT_EQ(rep.entry(name).verdict, Verdict::pass) << name;
            }
        }
        const Constants& K = rep.constants;
        EXPECT_GT(K.r, 0.0);
        if (std::pow(sp.d * K.xi, sp.p) > std::pow(sp.c, sp.p)) { EXPECT_GT(K.phi_ustar, K.r); }
    }
}

TEST(Certificate, ReportRoundTrip) {
    const ProblemSpec sp = shipped_spec();
    auto disc = ball_disc(sp.ball, sp.weight, 1.0 / 256);
    const CertificateReport rep = certify(sp, *disc, fixed_k(0.5));
    const StructuredText st = report_text(rep);
    const StructuredText back = StructuredText::parse(st.str());
    EXPECT_EQ(back.str(), st.str());
    EXPECT_EQ(back.find("")->find("overall")->value, "pass");
    EXPECT_EQ(std::stod(back.find("constants")->find("xi")->value), rep.constants.xi);
    const CsvTable t = constants_table(rep);
    EXPECT_EQ(t.rows.size(), rep.constants.variants.size());
}
