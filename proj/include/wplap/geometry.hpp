#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "wplap/error.hpp"

namespace wplap {

/// Coordinates in R^N, N <= 2. Unused trailing components stay zero.
using Point = std::array<double, 2>;

inline double norm(const Point& x, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

inline double distance(const Point& x, const Point& y, int dim) {
    Point d{};
    for (int i = 0; i < dim; ++i) d[i] = x[i] - y[i];
    return norm(d, dim);
}

enum class DomainKind { interval, box, ball };

inline std::string to_string(DomainKind k) {
    switch (k) {
        case DomainKind::interval: return "interval";
        case DomainKind::box: return "box";
        case DomainKind::ball: return "ball";
    }
    return "?";
}

/// Bounded domain Omega. Intervals are boxes with N = 1 but keep their own tag
/// so configs and reports stay readable.
struct Domain {
    int dim = 1;
    DomainKind kind = DomainKind::interval;
    Point lower{};   // interval / box
    Point upper{};
    Point center{};  // ball
    double radius = 0.0;

    static Domain interval(double a, double b) {
        if (!(a < b)) throw ArgumentError("interval requires a < b");
        Domain d;
        d.dim = 1;
        d.kind = DomainKind::interval;
        d.lower = {a, 0.0};
        d.upper = {b, 0.0};
        return d;
    }

    static Domain box(const Point& lo, const Point& hi, int dim = 2) {
        if (dim < 1) throw ArgumentError("box dimension must be >= 1");
        if (dim > 2) throw DimensionUnsupported("box domains are supported for N <= 2");
        for (int i = 0; i < dim; ++i)
            if (!(lo[i] < hi[i])) throw ArgumentError("box requires lower < upper in every coordinate");
        Domain d;
        d.dim = dim;
        d.kind = dim == 1 ? DomainKind::interval : DomainKind::box;
        d.lower = lo;
        d.upper = hi;
        return d;
    }

    static Domain ball(const Point& c, double r, int dim) {
        if (dim < 1) throw ArgumentError("ball dimension must be >= 1");
        if (dim > 2) throw DimensionUnsupported("ball domains are supported for N <= 2");
        if (!(r > 0.0)) throw ArgumentError("ball radius must be positive");
        Domain d;
        d.dim = dim;
        d.kind = DomainKind::ball;
        d.center = c;
        d.radius = r;
        return d;
    }

    double diameter() const {
        if (kind == DomainKind::ball) return 2.0 * radius;
        Point e{};
        for (int i = 0; i < dim; ++i) e[i] = upper[i] - lower[i];
        return norm(e, dim);
    }

    /// Axis-aligned bounding box.
    std::pair<Point, Point> bounds() const {
        if (kind != DomainKind::ball) return {lower, upper};
        Point lo{}, hi{};
        for (int i = 0; i < dim; ++i) {
            lo[i] = center[i] - radius;
            hi[i] = center[i] + radius;
        }
        return {lo, hi};
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    double signed_distance(const Point& x) const {
        if (kind == DomainKind::ball) return radius - distance(x, center, dim);
        double s = std::numeric_limits<double>::infinity();
        bool inside = true;
        for (int i = 0; i < dim; ++i) {
            s = std::min({s, x[i] - lower[i], upper[i] - x[i]});
            inside = inside && x[i] >= lower[i] && x[i] <= upper[i];
        }
        if (inside) return s;
        // Outside a box: Euclidean distance to the box, negated.
        double o = 0.0;
        for (int i = 0; i < dim; ++i) {
            double e = std::max({lower[i] - x[i], 0.0, x[i] - upper[i]});
            o += e * e;
        }
        return -std::sqrt(o);
    }

    bool contains(const Point& x, double tol = 0.0) const { return signed_distance(x) >= -tol; }

    /// Corners of the bounding box that belong to the closed domain (for sup sampling).
    std::vector<Point> corners() const {
        std::vector<Point> out;
        if (kind == DomainKind::ball) {
            for (int i = 0; i < dim; ++i) {
                Point p = center, q = center;
                p[i] += radius;
                q[i] -= radius;
                out.push_back(p);
                out.push_back(q);
            }
            return out;
        }
        if (dim == 1) return {lower, upper};
        return {lower, upper, Point{lower[0], upper[1]}, Point{upper[0], lower[1]}};
    }
};

inline double unit_ball_volume(int n);

/// Lebesgue measure, closed form for every supported kind.
inline double domain_measure(const Domain& d) {
    if (d.kind == DomainKind::ball) return unit_ball_volume(d.dim) * std::pow(d.radius, d.dim);
    double m = 1.0;
    for (int i = 0; i < d.dim; ++i) m *= d.upper[i] - d.lower[i];
    return m;
}

/// w_N = pi^{N/2} / Gamma(N/2 + 1).
inline double unit_ball_volume(int n) {
    if (n <= 0) throw ArgumentError("unit_ball_volume requires N >= 1");
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Exact Euclidean distance from an interior (or boundary) point to the boundary.
inline double distance_to_boundary(const Domain& d, const Point& x) {
    double s = d.signed_distance(x);
    if (s < -1e-12 * d.diameter()) throw DomainMembershipError("point lies outside the domain");
    return std::max(s, 0.0);
}

enum class Region { inner, annulus, outside };

inline std::string to_string(Region r) {
    switch (r) {
        case Region::inner: return "inner";
        case Region::annulus: return "annulus";
        case Region::outside: return "outside";
    }
    return "?";
}

/// Concentric balls B(x0, r1) inside B(x0, r2).
struct BallSpec {
    Point center{};
    double r1 = 0.0;
    double r2 = 0.0;

    /// Throws unless 0 < r1 < r2 and B(x0, r2) sits compactly inside the domain.
    void validate(const Domain& d) const {
        if (!(r1 > 0.0 && r2 > r1)) throw ArgumentError("ball radii must satisfy 0 < r1 < r2");
        if (!d.contains(center)) throw ArgumentError("ball center lies outside the domain");
        double dist = distance_to_boundary(d, center);
        if (!(r2 + 1e-9 < dist))
            throw ArgumentError("outer ball B(x0, r2) is not compactly contained in the domain");
    }
};

inline Region region_of(const BallSpec& ball, const Point& x, int dim) {
    double r = distance(x, ball.center, dim);
    if (r <= ball.r1) return Region::inner;
    if (r <= ball.r2) return Region::annulus;
    return Region::outside;
}

/// Simplicial mesh: segments for N = 1, triangles for N = 2.
struct Mesh {
    int dim = 1;
    std::vector<Point> vertices;
    std::vector<std::array<std::size_t, 3>> cells;  // N = 1 uses the first two entries
    std::vector<char> on_boundary;
    double h = 0.0;

    std::size_t vertices_per_cell() const { return static_cast<std::size_t>(dim) + 1; }
    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_cells() const { return cells.size(); }

    double cell_measure(std::size_t c) const {
        const auto& v = cells[c];
        if (dim == 1) return std::abs(vertices[v[1]][0] - vertices[v[0]][0]);
        const Point& a = vertices[v[0]];
        const Point& b = vertices[v[1]];
        const Point& e = vertices[v[2]];
        return 0.5 * std::abs((b[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (b[1] - a[1]));
    }

    double cell_diameter(std::size_t c) const {
        const auto& v = cells[c];
        double d = 0.0;
        for (std::size_t i = 0; i < vertices_per_cell(); ++i)
            for (std::size_t j = i + 1; j < vertices_per_cell(); ++j)
                d = std::max(d, distance(vertices[v[i]], vertices[v[j]], dim));
        return d;
    }

    double total_measure() const {
        double s = 0.0;
        for (std::size_t c = 0; c < num_cells(); ++c) s += cell_measure(c);
        return s;
    }

    /// For each vertex, the cells containing it.
    std::vector<std::vector<std::size_t>> vertex_cells() const {
        std::vector<std::vector<std::size_t>> out(num_vertices());
        for (std::size_t c = 0; c < num_cells(); ++c)
            for (std::size_t i = 0; i < vertices_per_cell(); ++i) out[cells[c][i]].push_back(c);
        return out;
    }

    void update_size() {
        h = 0.0;
        for (std::size_t c = 0; c < num_cells(); ++c) h = std::max(h, cell_diameter(c));
    }
};

struct MeshOptions {
    /// Number of geometric (ratio 2) refinement levels toward the boundary.
    int grading_depth = 0;
    /// Extra vertices inserted into 1D meshes (ignored in 2D).
    std::vector<double> breakpoints;
};

namespace detail {

/// Breakpoints of [lo, hi] with spacing <= step and geometric grading at both ends.
inline std::vector<double> graded_axis(double lo, double hi, double step, int depth) {
    const double len = hi - lo;
    auto n = static_cast<std::size_t>(std::ceil(len / step - 1e-9));
    n = std::max<std::size_t>(n, 1);
    std::vector<double> x;
    x.reserve(n + 1 + 2 * static_cast<std::size_t>(depth));
    const double dx = len / static_cast<double>(n);
    x.push_back(lo);
    for (int j = depth; j >= 1; --j) x.push_back(lo + dx * std::ldexp(1.0, -j));
    for (std::size_t i = 1; i < n; ++i) x.push_back(lo + dx * static_cast<double>(i));
    for (int j = 1; j <= depth; ++j) x.push_back(hi - dx * std::ldexp(1.0, -j));
    x.push_back(hi);
    // n == 1 with grading: both ladders share the single cell and must stay sorted.
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return x;
}

inline Mesh mesh_interval(double a, double b, double h_target, int depth, const std::vector<double>& extra = {}) {
    Mesh m;
    m.dim = 1;
    auto xs = graded_axis(a, b, h_target, depth);
    if (!extra.empty()) {
        // A breakpoint within roundoff of an existing vertex replaces it; otherwise it splits the cell.
        for (double e : extra) {
            if (!(e > a && e < b)) continue;
            auto it = std::lower_bound(xs.begin(), xs.end(), e);
            const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
            const std::size_t lo = hi - 1;
            const double tol = 1e-9 * (xs[hi] - xs[lo]);
            if (lo != 0 && e - xs[lo] <= tol) xs[lo] = e;
            else if (hi + 1 != xs.size() && xs[hi] - e <= tol) xs[hi] = e;
            else xs.insert(it, e);
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    }
    for (double x : xs) m.vertices.push_back({x, 0.0});
    m.on_boundary.assign(xs.size(), 0);
    m.on_boundary.front() = m.on_boundary.back() = 1;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) m.cells.push_back({i, i + 1, 0});
    m.update_size();
    return m;
}

inline Mesh mesh_box(const Domain& d, double h_target, int depth) {
    // Right triangles with legs (hx, hy) have diameter sqrt(hx^2 + hy^2).
    const double leg = h_target / std::sqrt(2.0);
    auto xs = graded_axis(d.lower[0], d.upper[0], leg, depth);
    auto ys = graded_axis(d.lower[1], d.upper[1], leg, depth);
    Mesh m;
    m.dim = 2;
    const std::size_t nx = xs.size(), ny = ys.size();
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            m.vertices.push_back({xs[i], ys[j]});
            m.on_boundary.push_back(i == 0 || j == 0 || i + 1 == nx || j + 1 == ny);
        }
    auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            m.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    m.update_size();
    return m;
}

/// Concentric-ring triangulation of a disk; the outer ring lies on the circle.
inline Mesh mesh_disk(const Domain& d, double h_target) {
    const double two_pi = 2.0 * std::numbers::pi;
    for (double dr = h_target / 1.25;; dr *= 0.9) {
        Mesh m;
        m.dim = 2;
        auto nr = static_cast<std::size_t>(std::ceil(d.radius / dr - 1e-9));
        std::vector<std::vector<std::size_t>> rings(nr + 1);
        m.vertices.push_back(d.center);
        m.on_boundary.push_back(0);
        rings[0] = {0};
        for (std::size_t j = 1; j <= nr; ++j) {
            const double r = d.radius * static_cast<double>(j) / static_cast<double>(nr);
            const std::size_t count = 6 * j;
            for (std::size_t k = 0; k < count; ++k) {
                const double t = two_pi * static_cast<double>(k) / static_cast<double>(count);
                rings[j].push_back(m.vertices.size());
                m.vertices.push_back({d.center[0] + r * std::cos(t), d.center[1] + r * std::sin(t)});
                m.on_boundary.push_back(j == nr);
            }
        }
        for (std::size_t j = 1; j <= nr; ++j) {
            const auto& in = rings[j - 1];
            const auto& out = rings[j];
            if (j == 1) {
                for (std::size_t k = 0; k < out.size(); ++k)
                    m.cells.push_back({in[0], out[k], out[(k + 1) % out.size()]});
                continue;
            }
            // Merge-walk both rings by angle.
            std::size_t a = 0, b = 0;
            const auto na = in.size(), nb = out.size();
            while (a < na || b < nb) {
                const double ta = static_cast<double>(a + 1) / static_cast<double>(na);
                const double tb = static_cast<double>(b + 1) / static_cast<double>(nb);
                if (b < nb && (a >= na || tb <= ta)) {
                    m.cells.push_back({in[a % na], out[b % nb], out[(b + 1) % nb]});
                    ++b;
                } else {
                    m.cells.push_back({in[a % na], out[b % nb], in[(a + 1) % na]});
                    ++a;
                }
            }
        }
        m.update_size();
        if (m.h <= h_target) return m;
    }
}

}  // namespace detail

/// Quasi-uniform simplicial mesh with mesh size <= h_target, optionally graded
/// geometrically toward the boundary.
inline Mesh build_mesh(const Domain& d, double h_target, const MeshOptions& opt = {}) {
    if (d.dim > 2) throw DimensionUnsupported("meshes are supported for N <= 2");
    if (!(h_target > 0.0) || !(h_target < d.diameter()))
        throw ArgumentError("mesh size must satisfy 0 < h < diam(domain)");
    if (opt.grading_depth < 0) throw ArgumentError("grading depth must be >= 0");
    if (d.dim == 1) {
        auto [lo, hi] = d.bounds();
        return detail::mesh_interval(lo[0], hi[0], h_target, opt.grading_depth, opt.breakpoints);
    }
    if (d.kind == DomainKind::box) return detail::mesh_box(d, h_target, opt.grading_depth);
    // Grading is not applied to disks: ring spacing is already uniform in r.
    return detail::mesh_disk(d, h_target);
}

}  // namespace wplap
