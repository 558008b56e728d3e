#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <string>

#include "wplap/wplap.hpp"

#ifndef WPLAP_CONFIG_DIR
#define WPLAP_CONFIG_DIR "configs"
#endif

namespace wplap::testing {

inline std::shared_ptr<const Mesh> interval_mesh(double h, double a = 0.0, double b = 1.0, MeshOptions opt = {}) {
    return std::make_shared<const Mesh>(build_mesh(Domain::interval(a, b), h, opt));
}

inline std::shared_ptr<const Discretization> interval_disc(double h, const WeightSpec& w = WeightSpec::constant(1.0),
                                                           MeshOptions opt = {}) {
    const Domain d = Domain::interval(0.0, 1.0);
    return std::make_shared<const Discretization>(d, interval_mesh(h, 0.0, 1.0, std::move(opt)), w);
}

/// The shipped three-solution instance.
inline ProblemSpec shipped_spec() {
    ProblemSpec sp;
    sp.p = 2.0;
    sp.s = 2.0;
    sp.f = Nonlinearity::from("clamp(t,-1,1)^3",
                              std::string("clamp(t,-1,1)^4/4 + max(t,-t) - max(clamp(t,-1,1),-clamp(t,-1,1))"));
    sp.f.growth_h = Expression::parse("2");
    sp.f.gamma = 1.0;
    sp.g = Nonlinearity::from("sin(t)", std::string("1-cos(t)"));
    sp.g.envelope = Expression::parse("1");
    sp.c = 0.15;
    sp.d = 1.0;
    sp.ball = BallSpec{{0.5, 0.0}, 0.1, 0.2};
    return sp;
}

/// Random admissible 1D instance for the u* sandwich: a in {1, dist^-0.5},
/// a ball inside (0, 1), d in [0.5, 2] and p in {2, 3}.
struct SandwichCase {
    double p = 2.0;
    double d = 1.0;
    BallSpec ball;
    WeightSpec weight;
};

template <class Rng>
SandwichCase random_sandwich_case(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SandwichCase c;
    c.p = unit(rng) < 0.5 ? 2.0 : 3.0;
    c.d = 0.5 + 1.5 * unit(rng);
    c.weight = unit(rng) < 0.5 ? WeightSpec::constant(1.0) : WeightSpec::distance_power(0.5);
    const double r1 = 0.05 + 0.1 * unit(rng);
    const double r2 = r1 + 0.03 + 0.15 * unit(rng);
    const double margin = r2 + 0.01;
    c.ball = BallSpec{{margin + (1.0 - 2.0 * margin) * unit(rng), 0.0}, r1, r2};
    return c;
}

/// Discretization of (0, 1) whose vertices include the kinks of u*.
inline std::shared_ptr<const Discretization> ball_disc(const BallSpec& ball, const WeightSpec& w, double h) {
    MeshOptions opt;
    opt.breakpoints = ustar_breakpoints(ball);
    return interval_disc(std::min(h, ball.r1 / 8.0), w, opt);
}

inline std::string config_path(const std::string& name) { return std::string(WPLAP_CONFIG_DIR) + "/" + name; }

}  // namespace wplap::testing
