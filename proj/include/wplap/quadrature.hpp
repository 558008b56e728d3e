#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <queue>
#include <vector>

#include "wplap/error.hpp"
#include "wplap/geometry.hpp"

namespace wplap {

struct QuadratureRule1D {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

namespace detail {

inline QuadratureRule1D compute_gauss_legendre(int n) {
    QuadratureRule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], exact for polynomials of degree 2n - 1.
inline const QuadratureRule1D& gauss_legendre(int n) {
    constexpr int max_order = 64;
    static const std::vector<QuadratureRule1D> table = [] {
        std::vector<QuadratureRule1D> t(max_order + 1);
        t[1] = {{0.0}, {2.0}};
        for (int k = 2; k <= max_order; ++k) t[k] = detail::compute_gauss_legendre(k);
        return t;
    }();
    if (n < 1 || n > max_order) throw ArgumentError("Gauss-Legendre order must lie in [1, 64]");
    return table[n];
}

/// Points in barycentric-free reference form: (xi, eta) on the unit triangle
/// {xi, eta >= 0, xi + eta <= 1}, weights summing to 1/2.
struct QuadratureRuleTriangle {
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
};

/// Collapsed (Duffy) product Gauss rule with n^2 points.
inline QuadratureRuleTriangle triangle_rule(int n) {
    const auto& g = gauss_legendre(n);
    QuadratureRuleTriangle r;
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (g.nodes[i] + 1.0);
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (g.nodes[j] + 1.0);
            r.points.push_back({u, v * (1.0 - u)});
            r.weights.push_back(0.25 * g.weights[i] * g.weights[j] * (1.0 - u));
        }
    }
    return r;
}

/// Quadrature points with physical weights on one simplex.
struct SimplexPoints {
    std::vector<Point> x;
    std::vector<double> w;
};

/// Maps a reference rule of the given order onto the simplex spanned by `verts`.
inline void append_simplex_rule(int dim, const std::array<Point, 3>& verts, int order, SimplexPoints& out) {
    if (dim == 1) {
        const auto& g = gauss_legendre(order);
        const double a = verts[0][0], b = verts[1][0];
        const double half = 0.5 * (b - a);
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            out.x.push_back({a + half * (g.nodes[q] + 1.0), 0.0});
            out.w.push_back(std::abs(half) * g.weights[q]);
        }
        return;
    }
    const auto r = triangle_rule(order);
    const Point& a = verts[0];
    const Point& b = verts[1];
    const Point& c = verts[2];
    const double jac = std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    for (std::size_t q = 0; q < r.points.size(); ++q) {
        const double s = r.points[q][0], t = r.points[q][1];
        out.x.push_back({a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])});
        out.w.push_back(jac * r.weights[q]);
    }
}

/// Integral over a simplex, refined recursively toward the vertices flagged
/// as singular (ratio-2 bisection in 1D, 4-way red refinement in 2D).
inline void append_graded_simplex_rule(int dim, const std::array<Point, 3>& verts, std::array<bool, 3> singular,
                                       int order, int depth, SimplexPoints& out) {
    const bool any = singular[0] || singular[1] || (dim == 2 && singular[2]);
    if (!any || depth <= 0) {
        append_simplex_rule(dim, verts, order, out);
        return;
    }
    auto mid = [](const Point& p, const Point& q) { return Point{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])}; };
    if (dim == 1) {
        const Point m = mid(verts[0], verts[1]);
        append_graded_simplex_rule(1, {verts[0], m, Point{}}, {singular[0], false, false}, order, depth - 1, out);
        append_graded_simplex_rule(1, {m, verts[1], Point{}}, {false, singular[1], false}, order, depth - 1, out);
        return;
    }
    const Point m01 = mid(verts[0], verts[1]);
    const Point m12 = mid(verts[1], verts[2]);
    const Point m02 = mid(verts[0], verts[2]);
    // A boundary edge has two singular endpoints; its midpoint is singular too.
    const bool s01 = singular[0] && singular[1];
    const bool s12 = singular[1] && singular[2];
    const bool s02 = singular[0] && singular[2];
    append_graded_simplex_rule(2, {verts[0], m01, m02}, {singular[0], s01, s02}, order, depth - 1, out);
    append_graded_simplex_rule(2, {m01, verts[1], m12}, {s01, singular[1], s12}, order, depth - 1, out);
    append_graded_simplex_rule(2, {m02, m12, verts[2]}, {s02, s12, singular[2]}, order, depth - 1, out);
    append_graded_simplex_rule(2, {m01, m12, m02}, {s01, s12, s02}, order, depth - 1, out);
}

/// Adaptive Gauss-Legendre integration of a scalar function over [a, b]
/// (b < a allowed, giving the signed integral). The panel with the largest
/// error estimate is bisected until the summed estimate meets the tolerance.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10,
                                 int max_depth = 80) {
    if (a == b) return 0.0;
    const auto& g = gauss_legendre(10);
    auto panel = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        double s = 0.0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(c + h * g.nodes[i]);
        return s * h;
    };
    struct Piece {
        double lo, hi, value, err;
        int depth;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    auto refine = [&](double lo, double hi, double whole, int depth) {
        const double m = 0.5 * (lo + hi);
        const double v = panel(lo, m) + panel(m, hi);
        if (!std::isfinite(v)) throw IntegrationError("non-finite integrand in adaptive quadrature");
        return Piece{lo, hi, v, std::abs(v - whole), depth};
    };
    std::priority_queue<Piece> heap;
    heap.push(refine(a, b, panel(a, b), 0));
    double total = heap.top().value, err = heap.top().err;
    for (;;) {
        if (err <= abs_tol || err <= 1e-15 * std::abs(total)) return total;
        const Piece worst = heap.top();
        if (worst.depth >= max_depth) throw IntegrationError("adaptive quadrature did not converge");
        heap.pop();
        const double m = 0.5 * (worst.lo + worst.hi);
        const Piece left = refine(worst.lo, m, panel(worst.lo, m), worst.depth + 1);
        const Piece right = refine(m, worst.hi, panel(m, worst.hi), worst.depth + 1);
        heap.push(left);
        heap.push(right);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
    }
}

}  // namespace wplap
