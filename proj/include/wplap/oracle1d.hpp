#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wplap/certificate.hpp"
#include "wplap/error.hpp"

namespace wplap {

/// Shooting parameters.
struct ShootingOptions {
    double sigma_min = -50.0;
    double sigma_max = 50.0;
    int n_scan = 2001;
    int ode_steps = 2048;
    double root_tol = 1e-8;
    int max_bisections = 200;
    double blowup = 1e8;
};

struct ShotResult {
    double terminal = 0.0;
    bool diverged = false;
    std::vector<double> x;  // only filled when a profile is requested
    std::vector<double> u;
};

/// One root of the terminal map sigma -> u_sigma(b).
struct ShootingRoot {
    double sigma = 0.0;
    double terminal = 0.0;
    bool converged = false;
    std::vector<double> x;
    std::vector<double> u;

    /// Piecewise-linear profile value at x.
    double at(double xq) const {
        if (x.empty()) return 0.0;
        if (xq <= x.front()) return u.front();
        if (xq >= x.back()) return u.back();
        const auto it = std::upper_bound(x.begin(), x.end(), xq);
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        const double t = (xq - x[i - 1]) / (x[i] - x[i - 1]);
        return (1.0 - t) * u[i - 1] + t * u[i];
    }
};

struct ShootingProfile {
    std::vector<double> sigma;
    std::vector<double> terminal;
    std::vector<bool> diverged;
    std::vector<std::pair<double, double>> brackets;
    std::vector<ShootingRoot> roots;
    /// Slope intervals on which the terminal map vanishes identically up to tolerance.
    std::vector<std::pair<double, double>> flat_intervals;
};

/// Flux form of the 1D equation:
///     u' = |q/a|^{1/(p-1)} sign(q),   q' = |u|^{p-2} u - lambda f(x, u) - mu g(x, u).
class ShootingSystem {
public:
    ShootingSystem(const ProblemSpec& spec, double lambda, double mu) : spec_(spec), lambda_(lambda), mu_(mu) {
        if (spec.domain.dim != 1) throw DimensionUnsupported("the shooting oracle is one-dimensional");
        if (!(spec.p >= 2.0)) throw RegimeError("the shooting oracle requires p >= 2");
        lo_ = spec.domain.lower[0];
        hi_ = spec.domain.upper[0];
    }

    double lower() const { return lo_; }
    double upper() const { return hi_; }
    double p() const { return spec_.p; }

    bool singular_weight() const {
        return spec_.weight.form == WeightForm::distance_power && spec_.weight.exponent > 0.0;
    }

    double weight(double x) const { return eval_weight(spec_.weight, spec_.domain, Point{x, 0.0}); }

    double slope(double x, double q) const {
        const double v = std::abs(q / weight(x));
        const double m = spec_.p == 2.0 ? v : std::pow(v, 1.0 / (spec_.p - 1.0));
        return q < 0.0 ? -m : m;
    }

    double flux_rate(double x, double u) const {
        const Point pt{x, 0.0};
        double r = 0.0;
        if (spec_.zero_order_term) r += spec_.p == 2.0 ? u : std::pow(std::abs(u), spec_.p - 2.0) * u;
        if (lambda_ != 0.0) r -= lambda_ * spec_.f.value(pt, u);
        if (mu_ != 0.0) r -= mu_ * spec_.g.value(pt, u);
        return r;
    }

    double flux_of_slope(double x, double sigma) const {
        const double m = std::abs(sigma);
        const double pw = spec_.p == 2.0 ? m : std::pow(m, spec_.p - 1.0);
        return weight(x) * (sigma < 0.0 ? -pw : pw);
    }

private:
    const ProblemSpec& spec_;
    double lambda_;
    double mu_;
    double lo_ = 0.0;
    double hi_ = 1.0;
};

/// Integrates from u(a) = 0, u'(a) = sigma with classical RK4 over `steps`
/// uniform steps. For a weight singular at the boundary the integration runs on
/// [a + h, b - h], starting from u = sigma h, and the terminal value is linearly
/// extrapolated to b.
inline ShotResult shoot(const ShootingSystem& sys, double sigma, int steps, bool keep_profile = false,
                        double blowup = 1e8) {
    if (steps < 1) throw ArgumentError("ode step count must be positive");
    ShotResult out;
    const double a = sys.lower(), b = sys.upper();
    const bool singular = sys.singular_weight();
    const double h = (b - a) / steps;
    const double x0 = singular ? a + h : a;
    const double x1 = singular ? b - h : b;
    const int n = singular ? steps - 2 : steps;
    const double dt = (x1 - x0) / std::max(n, 1);
    double x = x0;
    double u = singular ? sigma * h : 0.0;
    double q = sys.flux_of_slope(x0, sigma);
    if (keep_profile) {
        out.x.reserve(static_cast<std::size_t>(n) + 3);
        out.u.reserve(static_cast<std::size_t>(n) + 3);
        if (singular) {
            out.x.push_back(a);
            out.u.push_back(0.0);
        }
        out.x.push_back(x);
        out.u.push_back(u);
    }
    for (int i = 0; i < n; ++i) {
        const double k1u = sys.slope(x, q), k1q = sys.flux_rate(x, u);
        const double xm = x + 0.5 * dt;
        const double k2u = sys.slope(xm, q + 0.5 * dt * k1q), k2q = sys.flux_rate(xm, u + 0.5 * dt * k1u);
        const double k3u = sys.slope(xm, q + 0.5 * dt * k2q), k3q = sys.flux_rate(xm, u + 0.5 * dt * k2u);
        const double xe = x + dt;
        const double k4u = sys.slope(xe, q + dt * k3q), k4q = sys.flux_rate(xe, u + dt * k3u);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        x = i + 1 == n ? x1 : x0 + (i + 1) * dt;
        if (!std::isfinite(u) || std::abs(u) > blowup) {
            out.diverged = true;
            out.terminal = (std::isnan(u) ? (sigma < 0.0 ? -1.0 : 1.0) : (u < 0.0 ? -1.0 : 1.0)) * blowup;
            return out;
        }
        if (keep_profile) {
            out.x.push_back(x);
            out.u.push_back(u);
        }
    }
    out.terminal = singular ? u + h * sys.slope(x1, q) : u;
    if (keep_profile && singular) {
        out.x.push_back(b);
        out.u.push_back(out.terminal);
    }
    return out;
}

inline double shoot(const ProblemSpec& spec, double lambda, double mu, double sigma, int steps) {
    return shoot(ShootingSystem(spec, lambda, mu), sigma, steps).terminal;
}

/// Scans n_scan slopes, brackets sign changes of the terminal value and refines
/// each bracket by bisection. A scanned slope whose terminal value already meets
/// the root tolerance counts as a root. Runs of three or more slopes with a
/// vanishing terminal value are reported as flat intervals instead of roots.
inline ShootingProfile enumerate_solutions(const ProblemSpec& spec, double lambda, double mu,
                                           const ShootingOptions& opt = {}) {
    if (spec.domain.dim != 1) throw DimensionUnsupported("the shooting oracle is one-dimensional");
    if (opt.n_scan < 2) throw ArgumentError("n_scan must be at least 2");
    if (!(opt.sigma_min < opt.sigma_max)) throw ArgumentError("sigma range must be increasing");
    const ShootingSystem sys(spec, lambda, mu);
    ShootingProfile prof;
    const std::size_t n = static_cast<std::size_t>(opt.n_scan);
    prof.sigma.resize(n);
    prof.terminal.resize(n);
    prof.diverged.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        double s = opt.sigma_min + t * (opt.sigma_max - opt.sigma_min);
        if (std::abs(s) < 1e-14 * (opt.sigma_max - opt.sigma_min)) s = 0.0;
        prof.sigma[i] = s;
        const ShotResult r = shoot(sys, s, opt.ode_steps, false, opt.blowup);
        prof.terminal[i] = r.terminal;
        prof.diverged[i] = r.diverged;
    }

    const auto tol_at = [&](double s) { return 1e-6 * (1.0 + std::abs(s)); };
    for (std::size_t i = 0; i < n;) {
        if (prof.sigma[i] != 0.0 && std::abs(prof.terminal[i]) <= tol_at(prof.sigma[i])) {
            std::size_t j = i;
            while (j + 1 < n && std::abs(prof.terminal[j + 1]) <= tol_at(prof.sigma[j + 1])) ++j;
            if (j >= i + 2) prof.flat_intervals.emplace_back(prof.sigma[i], prof.sigma[j]);
            i = j + 1;
        } else {
            ++i;
        }
    }

    const auto make_root = [&](double s, double term, bool conv) {
        ShootingRoot root;
        root.sigma = s;
        root.terminal = term;
        root.converged = conv;
        ShotResult r = shoot(sys, s, opt.ode_steps, true, opt.blowup);
        root.x = std::move(r.x);
        root.u = std::move(r.u);
        prof.roots.push_back(std::move(root));
    };

    const auto in_flat = [&](double s) {
        for (const auto& [a, b] : prof.flat_intervals)
            if (s >= a && s <= b) return true;
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double fi = prof.terminal[i];
        if (in_flat(prof.sigma[i])) continue;
        if (!prof.diverged[i] && std::abs(fi) <= opt.root_tol) {
            make_root(prof.sigma[i], fi, true);
            continue;
        }
        if (i + 1 >= n) break;
        const double fj = prof.terminal[i + 1];
        if (std::abs(fj) <= opt.root_tol && !prof.diverged[i + 1]) continue;
        if ((fi < 0.0) == (fj < 0.0)) continue;
        if (prof.diverged[i] && prof.diverged[i + 1]) continue;
        prof.brackets.emplace_back(prof.sigma[i], prof.sigma[i + 1]);
        double lo = prof.sigma[i], hi = prof.sigma[i + 1], flo = fi;
        double mid = 0.5 * (lo + hi), fm = 0.0;
        bool done = false;
        for (int it = 0; it < opt.max_bisections; ++it) {
            mid = 0.5 * (lo + hi);
            const ShotResult r = shoot(sys, mid, opt.ode_steps, false, opt.blowup);
            fm = r.terminal;
            if (!r.diverged && std::abs(fm) <= opt.root_tol) {
                done = true;
                break;
            }
            if (mid <= lo || mid >= hi) break;
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        make_root(mid, fm, done);
    }
    return prof;
}

/// Maximum over mesh vertices of |root profile - nodal values|.
inline double profile_distance(const ShootingRoot& root, const DiscreteFunction& u) {
    double m = 0.0;
    for (std::size_t v = 0; v < u.mesh->num_vertices(); ++v)
        m = std::max(m, std::abs(root.at(u.mesh->vertices[v][0]) - u.values[v]));
    return m;
}

/// Root profile interpolated onto a mesh.
inline DiscreteFunction root_on_mesh(const ShootingRoot& root, std::shared_ptr<const Mesh> mesh) {
    return DiscreteFunction::interpolate(mesh, [&](const Point& x) { return root.at(x[0]); }, true);
}

}  // namespace wplap
