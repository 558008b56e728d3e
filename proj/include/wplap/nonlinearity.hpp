#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "wplap/error.hpp"
#include "wplap/expression.hpp"
#include "wplap/geometry.hpp"
#include "wplap/quadrature.hpp"

namespace wplap {

/// Right-hand side f(x, t) together with its primitive and growth data.
struct Nonlinearity {
    Expression f = Expression::constant_expr(0.0);
    Expression df = Expression::constant_expr(0.0);
    std::optional<Expression> primitive;  // closed-form F(x, t) = int_0^t f(x, s) ds
    /// Sublinear growth |f(x, t)| <= h(x) (1 + |t|^gamma); h is a function of x.
    double gamma = 0.0;
    std::optional<Expression> growth_h;
    /// Bound w_tau(x) >= sup_{|t| <= tau} |f(x, t)|; the variable t stands for tau.
    std::optional<Expression> envelope;

    static Nonlinearity from(const std::string& f_src, const std::optional<std::string>& F_src = std::nullopt) {
        Nonlinearity n;
        n.f = Expression::parse(f_src);
        n.df = n.f.derivative_t();
        if (F_src) n.primitive = Expression::parse(*F_src);
        return n;
    }

    static Nonlinearity zero() { return from("0", std::string("0")); }

    double value(const Point& x, double t) const { return f(t, x); }
    double derivative(const Point& x, double t) const { return df(t, x); }

    /// F(x, t): closed form when supplied, otherwise adaptive quadrature of f on [0, t].
    double F(const Point& x, double t) const {
        if (primitive) return (*primitive)(t, x);
        if (!f.depends_on_t()) return t * f(0.0, x);
        return integrate_adaptive([&](double s) { return f(s, x); }, 0.0, t, 1e-10);
    }

    /// True when F(x, t) may vary with x.
    bool depends_on_x() const { return f.depends_on_x() || (primitive && primitive->depends_on_x()); }

    bool is_zero() const { return f.is_constant() && f(0.0, Point{}) == 0.0; }
};

struct PrimitiveCheck {
    double max_relative_error = 0.0;
    double max_value_at_zero = 0.0;  // max |F(x, 0)|
    bool passed = true;
};

/// Compares d/dt of the supplied primitive with f at random (x, t) in the domain
/// and checks F(x, 0) = 0.
inline PrimitiveCheck verify_primitive(const Nonlinearity& nl, const Domain& d, unsigned seed = 1, int samples = 1000,
                                       double t_range = 10.0) {
    PrimitiveCheck out;
    if (!nl.primitive) return out;
    const Expression dF = nl.primitive->derivative_t();
    std::mt19937_64 rng(seed);
    auto [lo, hi] = d.bounds();
    std::uniform_real_distribution<double> ut(-t_range, t_range);
    int taken = 0;
    while (taken < samples) {
        Point x{};
        for (int k = 0; k < d.dim; ++k) x[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
        if (!d.contains(x)) continue;
        ++taken;
        const double t = ut(rng);
        const double fv = nl.f(t, x);
        const double err = std::abs(dF(t, x) - fv) / std::max(1.0, std::abs(fv));
        out.max_relative_error = std::max(out.max_relative_error, err);
        out.max_value_at_zero = std::max(out.max_value_at_zero, std::abs((*nl.primitive)(0.0, x)));
    }
    out.passed = out.max_relative_error < 1e-6 && out.max_value_at_zero < 1e-12;
    return out;
}

}  // namespace wplap
