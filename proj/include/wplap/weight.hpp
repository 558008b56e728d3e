#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wplap/error.hpp"
#include "wplap/geometry.hpp"
#include "wplap/quadrature.hpp"

namespace wplap {

enum class WeightForm { constant, distance_power, tabulated };

inline std::string to_string(WeightForm f) {
    switch (f) {
        case WeightForm::constant: return "constant";
        case WeightForm::distance_power: return "distance_power";
        case WeightForm::tabulated: return "tabulated";
    }
    return "?";
}

/// The weight a(x) of the operator -div(a |grad u|^{p-2} grad u).
struct WeightSpec {
    WeightForm form = WeightForm::constant;
    double value = 1.0;     // constant
    double exponent = 0.0;  // distance_power: a = dist(x, boundary)^{-l}
    std::shared_ptr<const Mesh> table_mesh;  // tabulated: P1 interpolation of nodal values
    std::vector<double> table_values;

    static WeightSpec constant(double v) {
        if (!(v > 0.0)) throw ArgumentError("constant weight must be positive");
        WeightSpec w;
        w.form = WeightForm::constant;
        w.value = v;
        return w;
    }

    static WeightSpec distance_power(double l) {
        if (!(l >= 0.0)) throw ArgumentError("distance-power exponent must be >= 0");
        WeightSpec w;
        w.form = WeightForm::distance_power;
        w.exponent = l;
        return w;
    }

    static WeightSpec tabulated(std::shared_ptr<const Mesh> mesh, std::vector<double> values) {
        if (!mesh || values.size() != mesh->num_vertices())
            throw ArgumentError("tabulated weight needs one value per mesh vertex");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || values[i] < 0.0)
                throw ArgumentError("tabulated weight values must be finite and nonnegative");
            if (!mesh->on_boundary[i] && !(values[i] > 0.0))
                throw ArgumentError("tabulated weight must be positive at interior nodes");
        }
        WeightSpec w;
        w.form = WeightForm::tabulated;
        w.table_mesh = std::move(mesh);
        w.table_values = std::move(values);
        return w;
    }

    /// True when a blows up at the boundary, so quadrature must refine there.
    bool singular_at_boundary() const { return form == WeightForm::distance_power && exponent > 0.0; }

    /// a >= 1 everywhere (provable for constant >= 1 and for distance powers on domains of inradius <= 1).
    bool bounded_below_by_one(const Domain& d) const {
        switch (form) {
            case WeightForm::constant: return value >= 1.0;
            case WeightForm::distance_power: {
                if (exponent == 0.0) return true;
                double inradius = d.kind == DomainKind::ball ? d.radius : 0.5 * (d.upper[0] - d.lower[0]);
                if (d.kind == DomainKind::box)
                    for (int i = 1; i < d.dim; ++i) inradius = std::min(inradius, 0.5 * (d.upper[i] - d.lower[i]));
                return inradius <= 1.0;
            }
            case WeightForm::tabulated:
                return *std::min_element(table_values.begin(), table_values.end()) >= 1.0;
        }
        return false;
    }
};

namespace detail {

inline double interpolate_table(const WeightSpec& w, const Point& x) {
    const Mesh& m = *w.table_mesh;
    if (m.dim == 1) {
        // Vertices of 1D meshes are sorted.
        auto it = std::lower_bound(m.vertices.begin(), m.vertices.end(), x[0],
                                   [](const Point& v, double t) { return v[0] < t; });
        if (it == m.vertices.end()) it = std::prev(it);
        std::size_t hi = static_cast<std::size_t>(it - m.vertices.begin());
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        const double x0 = m.vertices[lo][0], x1 = m.vertices[hi][0];
        const double t = std::clamp((x[0] - x0) / (x1 - x0), 0.0, 1.0);
        return (1.0 - t) * w.table_values[lo] + t * w.table_values[hi];
    }
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto& v = m.cells[c];
        const Point& a = m.vertices[v[0]];
        const Point& b = m.vertices[v[1]];
        const Point& e = m.vertices[v[2]];
        const double det = (b[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (b[1] - a[1]);
        const double s = ((x[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (x[1] - a[1])) / det;
        const double t = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        constexpr double tol = -1e-12;
        if (s >= tol && t >= tol && 1.0 - s - t >= tol)
            return (1.0 - s - t) * w.table_values[v[0]] + s * w.table_values[v[1]] + t * w.table_values[v[2]];
    }
    throw DomainMembershipError("point lies outside the tabulated weight mesh");
}

}  // namespace detail

/// a(x); throws SingularityError on the boundary when a blows up there.
inline double eval_weight(const WeightSpec& w, const Domain& d, const Point& x) {
    switch (w.form) {
        case WeightForm::constant: return w.value;
        case WeightForm::distance_power: {
            if (w.exponent == 0.0) return 1.0;
            const double dist = distance_to_boundary(d, x);
            if (dist <= 0.0) throw SingularityError("distance-power weight evaluated on the boundary");
            return std::pow(dist, -w.exponent);
        }
        case WeightForm::tabulated: return detail::interpolate_table(w, x);
    }
    return 0.0;
}

/// p_s = p s / (s + 1).
inline double compute_ps(double p, double s) { return p * s / (s + 1.0); }

/// Smallest "comfortable" integrability exponent: N/(p-N) + 0.5.
inline double suggest_s(double p, int dim) {
    if (!(p > dim)) throw RegimeError("p must exceed N for the embedding regime");
    return dim / (p - dim) + 0.5;
}

enum class VerificationMode { closed_form, sampled };

inline std::string to_string(VerificationMode m) {
    return m == VerificationMode::closed_form ? "closed-form" : "sampled";
}

struct ExhaustionLevel {
    int j = 0;
    double delta = 0.0;            // K_j = {dist >= delta}
    double int_a = 0.0;            // int_{K_j} a
    double int_a_dual = 0.0;       // int_{K_j} a^{-1/(p-1)}
    double int_a_neg_s = 0.0;      // int_{K_j} a^{-s}
};

struct AdmissibilityReport {
    double p = 0.0;
    double s = 0.0;
    double ps = 0.0;
    bool regime_ok = false;  // s > N/(p-N), i.e. p > p_s > N
    VerificationMode mode = VerificationMode::sampled;

    std::vector<ExhaustionLevel> levels;
    double int_a_neg_s = 0.0;                  // quadrature estimate of int_Omega a^{-s}
    std::optional<double> int_a_neg_s_exact;   // closed form where available

    bool positive = false;
    bool a_locally_integrable = false;
    bool dual_locally_integrable = false;
    bool a_neg_s_integrable = false;
    /// Informational: whether int_Omega a itself appears finite (not required).
    bool a_globally_integrable = false;

    double mesh_h = 0.0;
    int quadrature_order = 0;
    double cauchy_tolerance = 0.0;

    bool all_pass() const { return positive && a_locally_integrable && dual_locally_integrable && a_neg_s_integrable; }
};

struct AdmissibilityOptions {
    int levels = 8;
    int quadrature_order = 5;
    /// Mesh size for the exhaustion quadrature, relative to diam(domain).
    double relative_h = 1.0 / 64.0;
    double cauchy_tolerance = 1e-3;
};

namespace detail {

/// The domain shrunk by delta: {x : dist(x, boundary) >= delta}.
inline Domain shrink(const Domain& d, double delta) {
    Domain k = d;
    if (d.kind == DomainKind::ball) {
        k.radius = d.radius - delta;
        return k;
    }
    for (int i = 0; i < d.dim; ++i) {
        k.lower[i] += delta;
        k.upper[i] -= delta;
    }
    return k;
}

inline double inradius(const Domain& d) {
    if (d.kind == DomainKind::ball) return d.radius;
    double r = 0.5 * (d.upper[0] - d.lower[0]);
    for (int i = 1; i < d.dim; ++i) r = std::min(r, 0.5 * (d.upper[i] - d.lower[i]));
    return r;
}

/// int_region g(a(x)) dx with a evaluated against the original domain `omega`;
/// cells touching the region boundary are refined `graded_depth` times.
template <class G>
double integrate_weight_function(const WeightSpec& w, const Domain& omega, const Domain& region, double h, int order,
                                 int graded_depth, G&& g) {
    Mesh m = build_mesh(region, std::min(h, 0.5 * region.diameter()));
    double sum = 0.0;
    SimplexPoints pts;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        pts.x.clear();
        pts.w.clear();
        std::array<Point, 3> verts{};
        std::array<bool, 3> sing{};
        for (std::size_t i = 0; i < m.vertices_per_cell(); ++i) {
            verts[i] = m.vertices[m.cells[c][i]];
            sing[i] = graded_depth > 0 && region.signed_distance(verts[i]) <= 1e-14 * region.diameter();
        }
        append_graded_simplex_rule(m.dim, verts, sing, order, graded_depth, pts);
        for (std::size_t q = 0; q < pts.x.size(); ++q) sum += pts.w[q] * g(eval_weight(w, omega, pts.x[q]));
    }
    return sum;
}

}  // namespace detail

/// Closed form of int_Omega a^q for constant weights and for distance powers on
/// intervals and balls (finite when q*l > -1). nullopt when no closed form is known.
inline std::optional<double> closed_form_weight_power_integral(const WeightSpec& w, const Domain& d, double q) {
    if (w.form == WeightForm::constant) return std::pow(w.value, q) * domain_measure(d);
    if (w.form != WeightForm::distance_power) return std::nullopt;
    const double e = -w.exponent * q;  // integrand dist^e
    if (e <= -1.0) return std::numeric_limits<double>::infinity();
    if (d.dim == 1) {
        auto [lo, hi] = d.bounds();
        const double half = 0.5 * (hi[0] - lo[0]);
        return 2.0 * std::pow(half, e + 1.0) / (e + 1.0);
    }
    if (d.kind == DomainKind::ball && d.dim == 2) {
        const double r = d.radius;
        return 2.0 * std::numbers::pi * std::pow(r, e + 2.0) / ((e + 1.0) * (e + 2.0));
    }
    return std::nullopt;
}

/// Numerical check of the standing assumptions on the weight for exponents p, s.
inline AdmissibilityReport check_admissibility(const WeightSpec& w, const Domain& d, double p, double s,
                                               const AdmissibilityOptions& opt = {}) {
    if (!(p > 1.0)) throw ArgumentError("p must exceed 1");
    if (!(s > 0.0)) throw ArgumentError("s must be positive");
    if (!(p > d.dim)) throw RegimeError("p must exceed N for the embedding regime");
    AdmissibilityReport r;
    r.p = p;
    r.s = s;
    r.ps = compute_ps(p, s);
    r.regime_ok = s > d.dim / (p - d.dim);
    r.mode = w.form == WeightForm::tabulated ? VerificationMode::sampled : VerificationMode::closed_form;
    r.quadrature_order = opt.quadrature_order;
    r.cauchy_tolerance = opt.cauchy_tolerance;
    const double h = opt.relative_h * d.diameter();
    r.mesh_h = h;

    const double dual = -1.0 / (p - 1.0);
    const double rin = detail::inradius(d);
    for (int j = 1; j <= opt.levels; ++j) {
        ExhaustionLevel lev;
        lev.j = j;
        lev.delta = std::ldexp(1.0, -j) * d.diameter() / 4.0;
        if (lev.delta >= rin) continue;
        const Domain k = detail::shrink(d, lev.delta);
        const int kd = d.dim == 1 ? 20 : 3;
        lev.int_a = detail::integrate_weight_function(w, d, k, h, opt.quadrature_order, kd, [](double a) { return a; });
        lev.int_a_dual = detail::integrate_weight_function(w, d, k, h, opt.quadrature_order, kd,
                                                           [dual](double a) { return std::pow(a, dual); });
        lev.int_a_neg_s = detail::integrate_weight_function(w, d, k, h, opt.quadrature_order, kd,
                                                            [s](double a) { return std::pow(a, -s); });
        r.levels.push_back(lev);
    }

    // Global a^{-s}: refine toward the boundary when a vanishes or blows up there.
    const int depth = d.dim == 1 ? 30 : 6;
    r.int_a_neg_s = detail::integrate_weight_function(w, d, d, h, opt.quadrature_order, depth,
                                                      [s](double a) { return std::pow(a, -s); });
    r.int_a_neg_s_exact = closed_form_weight_power_integral(w, d, -s);

    auto cauchy = [&](auto member) {
        if (r.levels.size() < 2) return false;
        const double last = r.levels.back().*member;
        const double prev = r.levels[r.levels.size() - 2].*member;
        return std::isfinite(last) && std::abs(last - prev) <= opt.cauchy_tolerance * std::max(1.0, std::abs(last));
    };
    auto finite_levels = [&](auto member) {
        return std::all_of(r.levels.begin(), r.levels.end(),
                           [&](const ExhaustionLevel& l) { return std::isfinite(l.*member); });
    };

    r.a_globally_integrable = cauchy(&ExhaustionLevel::int_a);
    switch (w.form) {
        case WeightForm::constant:
        case WeightForm::distance_power:
            // dist^{-l} is bounded above and below on every compact subset and
            // a^{-s} = dist^{ls} is bounded on Omega.
            r.positive = true;
            r.a_locally_integrable = finite_levels(&ExhaustionLevel::int_a);
            r.dual_locally_integrable = finite_levels(&ExhaustionLevel::int_a_dual);
            r.a_neg_s_integrable = std::isfinite(r.int_a_neg_s);
            break;
        case WeightForm::tabulated: {
            r.positive = true;
            const Mesh& m = *w.table_mesh;
            for (std::size_t i = 0; i < m.num_vertices(); ++i)
                if (!m.on_boundary[i] && !(w.table_values[i] > 0.0)) r.positive = false;
            r.a_locally_integrable = finite_levels(&ExhaustionLevel::int_a);
            r.dual_locally_integrable = finite_levels(&ExhaustionLevel::int_a_dual);
            r.a_neg_s_integrable = std::isfinite(r.int_a_neg_s) && cauchy(&ExhaustionLevel::int_a_neg_s);
            break;
        }
    }
    return r;
}

}  // namespace wplap
