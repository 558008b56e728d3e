#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wplap/discretization.hpp"
#include "wplap/error.hpp"
#include "wplap/geometry.hpp"
#include "wplap/nonlinearity.hpp"
#include "wplap/quadrature.hpp"
#include "wplap/space.hpp"
#include "wplap/structured_text.hpp"
#include "wplap/weight.hpp"

namespace wplap {

/// Data of one problem instance together with the certificate parameters.
struct ProblemSpec {
    double p = 2.0;
    Domain domain = Domain::interval(0.0, 1.0);
    WeightSpec weight = WeightSpec::constant(1.0);
    double s = 2.0;
    Nonlinearity f;
    Nonlinearity g;
    double c = 1.0;
    double d = 1.0;
    BallSpec ball;
    bool zero_order_term = true;

    void validate() const {
        const int N = domain.dim;
        if (!(p > 1.0)) throw ArgumentError("p must exceed 1");
        if (!(p > N)) throw RegimeError("p must exceed the dimension N");
        if (!(s > N / (p - N))) throw RegimeError("s must exceed N / (p - N)");
        if (!(c > 0.0) || !(d > 0.0)) throw ArgumentError("c and d must be positive");
        ball.validate(domain);
    }
};

enum class Verdict { pass, fail, heuristic_pass, inconclusive, skipped };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::heuristic_pass: return "heuristic-pass";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::skipped: return "skipped";
    }
    return "?";
}

/// Strict lhs < rhs with a relative guard band; equality fails.
inline Verdict strict_less(double lhs, double rhs) {
    const double margin = rhs - lhs;
    if (!(margin > 0.0)) return Verdict::fail;
    if (margin < 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) return Verdict::inconclusive;
    return Verdict::pass;
}

/// lhs <= rhs with the same guard band.
inline Verdict weak_less(double lhs, double rhs) {
    const double margin = rhs - lhs;
    const double band = 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (margin < -band) return Verdict::fail;
    if (margin < band) return Verdict::inconclusive;
    return Verdict::pass;
}

struct CheckEntry {
    std::string name;
    Verdict verdict = Verdict::skipped;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    std::string mode;  // exact, sampled, heuristic
    std::string detail;
    /// Heuristic entries do not block an overall pass.
    bool heuristic = false;
};

/// xi, eta, r and the sandwich bounds for one choice of k.
struct KVariant {
    std::string label;
    double k = 0.0;
    double xi = 0.0;
    double eta = 0.0;
    double r = 0.0;
    double sandwich_lower = 0.0;  // xi^p d^p / k^p
    double sandwich_upper = 0.0;  // eta^p d^p / k^p
};

struct Constants {
    double w_N = 0.0;
    double a_L1_annulus = 0.0;
    double k = 0.0;
    BoundMode k_mode = BoundMode::heuristic;
    std::string k_source;
    double k_lower = 0.0;
    double k_upper = 0.0;
    double xi = 0.0;
    double eta = 0.0;
    double r = 0.0;
    double ustar_norm_p = 0.0;          // direct quadrature of the interpolant
    double ustar_formula_wN = 0.0;      // three-term formula as printed
    double ustar_formula_NwN = 0.0;     // with the sphere measure N w_N in the second term
    double sandwich_lower = 0.0;        // k-free forms
    double sandwich_upper = 0.0;
    double phi_ustar = 0.0;
    std::vector<KVariant> variants;
};

struct CertificateReport {
    Constants constants;
    std::vector<CheckEntry> entries;
    Verdict overall = Verdict::inconclusive;
    std::vector<std::string> notes;

    const CheckEntry& entry(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e;
        throw ArgumentError("no certificate entry named '" + name + "'");
    }

    /// Names of the entries whose verdict is fail.
    std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (e.verdict == Verdict::fail) out.push_back(e.name);
        return out;
    }

    int exit_code() const { return overall == Verdict::pass ? 0 : overall == Verdict::fail ? 2 : 3; }
};

namespace detail {

/// int over the annulus r1 < |x - x0| < r2 of fn(x), in polar form for N = 2.
template <class Fn>
double annulus_integral(const BallSpec& ball, int dim, Fn&& fn, double tol = 1e-11) {
    const Point& x0 = ball.center;
    if (dim == 1) {
        auto left = [&](double x) { return fn(Point{x, 0.0}); };
        return integrate_adaptive(left, x0[0] - ball.r2, x0[0] - ball.r1, tol) +
               integrate_adaptive(left, x0[0] + ball.r1, x0[0] + ball.r2, tol);
    }
    const double two_pi = 2.0 * std::numbers::pi;
    auto radial = [&](double rho) {
        auto ang = [&](double th) { return fn(Point{x0[0] + rho * std::cos(th), x0[1] + rho * std::sin(th)}); };
        return rho * integrate_adaptive(ang, 0.0, two_pi, tol);
    };
    return integrate_adaptive(radial, ball.r1, ball.r2, tol);
}

}  // namespace detail

/// ||a||_{L^1} over B(x0, r2) \ B(x0, r1).
inline double annulus_weight_mass(const WeightSpec& w, const BallSpec& ball, const Domain& domain) {
    ball.validate(domain);
    if (w.form == WeightForm::constant)
        return w.value * unit_ball_volume(domain.dim) * (std::pow(ball.r2, domain.dim) - std::pow(ball.r1, domain.dim));
    if (w.form == WeightForm::distance_power && domain.dim == 1) {
        auto [lo, hi] = domain.bounds();
        const double x0 = ball.center[0], l = w.exponent;
        return detail::interval_distance_power_mass(x0 - ball.r2, x0 - ball.r1, lo[0], hi[0], l) +
               detail::interval_distance_power_mass(x0 + ball.r1, x0 + ball.r2, lo[0], hi[0], l);
    }
    return detail::annulus_integral(ball, domain.dim, [&](const Point& x) { return eval_weight(w, domain, x); });
}

/// (2 k r1 / (r2^2 - r1^2)) ||a||^{1/p}.
inline double compute_xi(double p, double r1, double r2, double k, double a_mass) {
    if (!(r2 > r1 && r1 > 0.0 && k > 0.0 && a_mass >= 0.0)) throw ArgumentError("compute_xi: invalid inputs");
    return 2.0 * k * r1 / (r2 * r2 - r1 * r1) * std::pow(a_mass, 1.0 / p);
}

/// (2^p k^p r2^p / (r2^2 - r1^2)^p ||a|| + k^p d^p w_N r2^N / N + k^p w_N r1^N)^{1/p}.
inline double compute_eta(double p, int N, double r1, double r2, double k, double d, double a_mass, double w_N) {
    if (!(r2 > r1 && r1 > 0.0 && k > 0.0 && d > 0.0)) throw ArgumentError("compute_eta: invalid inputs");
    const double kp = std::pow(k, p);
    const double t1 = std::pow(2.0, p) * kp * std::pow(r2, p) / std::pow(r2 * r2 - r1 * r1, p) * a_mass;
    const double t2 = kp * std::pow(d, p) * w_N * std::pow(r2, N) / N;
    const double t3 = kp * w_N * std::pow(r1, N);
    return std::pow(t1 + t2 + t3, 1.0 / p);
}

inline double compute_r(double c, double k, double p) {
    if (!(c > 0.0 && k > 0.0)) throw ArgumentError("compute_r needs c, k > 0");
    return std::pow(c / k, p) / p;
}

/// u*(x): d on B(x0, r1), d (r2^2 - |x - x0|^2) / (r2^2 - r1^2) on the annulus, 0 outside.
inline double ustar_value(double d, const BallSpec& ball, const Point& x, int dim) {
    const double rho = distance(x, ball.center, dim);
    if (rho <= ball.r1) return d;
    if (rho >= ball.r2) return 0.0;
    return d * (ball.r2 * ball.r2 - rho * rho) / (ball.r2 * ball.r2 - ball.r1 * ball.r1);
}

/// Nodal interpolant of u*; needs h <= r1 / 8.
inline DiscreteFunction build_ustar(double d, const BallSpec& ball, std::shared_ptr<const Mesh> mesh) {
    if (mesh->h > ball.r1 / 8.0)
        throw RefinementRequired("mesh does not resolve the inner ball: need h <= r1 / 8 = " +
                                 std::to_string(ball.r1 / 8.0));
    const int dim = mesh->dim;
    return DiscreteFunction::interpolate(mesh, [&](const Point& x) { return ustar_value(d, ball, x, dim); });
}

/// Breakpoints x0 +- r1, x0 +- r2 that make 1D meshes follow the kinks of u*.
inline std::vector<double> ustar_breakpoints(const BallSpec& ball) {
    const double x0 = ball.center[0];
    return {x0 - ball.r2, x0 - ball.r1, x0 + ball.r1, x0 + ball.r2};
}

struct UstarNorm {
    double direct = 0.0;
    double formula_wN = 0.0;
    double formula_NwN = 0.0;
};

/// ||u*||^p computed from the interpolant and from the three-term closed expression.
inline UstarNorm ustar_norm_p(const Discretization& disc, double d, const BallSpec& ball, double p,
                              bool zero_order_term = true) {
    UstarNorm out;
    const DiscreteFunction u = build_ustar(d, ball, disc.mesh_ptr());
    const NormReport nr = weighted_norm(disc, u, p);
    out.direct = nr.grad_part + (zero_order_term ? nr.lp_part : 0.0);

    const int N = disc.dim();
    const double w_N = unit_ball_volume(N);
    const double den = std::pow(ball.r2 * ball.r2 - ball.r1 * ball.r1, p);
    const double pd = std::pow(d, p);
    const WeightSpec& w = disc.weight();
    const Domain& dom = disc.domain();
    const double grad_integral = detail::annulus_integral(
        ball, N, [&](const Point& x) { return eval_weight(w, dom, x) * std::pow(distance(x, ball.center, N), p); });
    const double t1 = std::pow(2.0, p) * pd / den * grad_integral;
    const double radial = integrate_adaptive(
        [&](double r) { return std::pow(ball.r2 * ball.r2 - r * r, p) * std::pow(r, N - 1); }, ball.r1, ball.r2, 1e-13);
    const double t2 = pd / den * radial;
    const double t3 = pd * w_N * std::pow(ball.r1, N);
    out.formula_wN = t1 + (zero_order_term ? w_N * t2 + t3 : 0.0);
    out.formula_NwN = t1 + (zero_order_term ? N * w_N * t2 + t3 : 0.0);
    return out;
}

/// Lower and upper bounds of the sandwich with k cancelled.
inline std::pair<double, double> sandwich_bounds_kfree(double p, int N, double r1, double r2, double d, double a_mass) {
    const double den = r2 * r2 - r1 * r1;
    const double w_N = unit_ball_volume(N);
    const double pd = std::pow(d, p);
    const double lower = std::pow(2.0 * r1 / den, p) * a_mass * pd;
    const double upper =
        pd * (std::pow(2.0, p) * std::pow(r2, p) / std::pow(den, p) * a_mass + pd * w_N * std::pow(r2, N) / N +
              w_N * std::pow(r1, N));
    return {lower, upper};
}

struct SandwichResult {
    Verdict verdict = Verdict::fail;
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
    double lower_margin = 0.0;
    double upper_margin = 0.0;
};

inline SandwichResult sandwich_check(double lower, double value, double upper) {
    SandwichResult r;
    r.lower = lower;
    r.upper = upper;
    r.value = value;
    r.lower_margin = value - lower;
    r.upper_margin = upper - value;
    const Verdict a = strict_less(lower, value), b = strict_less(value, upper);
    r.verdict = (a == Verdict::fail || b == Verdict::fail)             ? Verdict::fail
                : (a == Verdict::inconclusive || b == Verdict::inconclusive) ? Verdict::inconclusive
                                                                             : Verdict::pass;
    return r;
}

namespace detail {

/// Evenly spaced sample points of the closed domain, optionally excluding the open ball B(x0, r1).
inline std::vector<Point> domain_samples(const Domain& dom, std::size_t target, const BallSpec* exclude) {
    std::vector<Point> out;
    auto [lo, hi] = dom.bounds();
    const auto keep = [&](const Point& x) {
        return dom.contains(x, 1e-12) && !(exclude && distance(x, exclude->center, dom.dim) < exclude->r1);
    };
    if (dom.dim == 1) {
        for (std::size_t i = 0; i < target; ++i) {
            const Point x{lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(target - 1), 0.0};
            if (keep(x)) out.push_back(x);
        }
        return out;
    }
    const auto n = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(target))));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const Point x{lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(n - 1),
                          lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / static_cast<double>(n - 1)};
            if (keep(x)) out.push_back(x);
        }
    return out;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

/// sup of F over (quadrature nodes and corners) x [-c, c] on 400 t-samples.
inline double sampled_sup_F(const Discretization& disc, const Nonlinearity& f, double c) {
    std::vector<Point> xs;
    if (f.depends_on_x()) {
        xs = disc.qp_x();
        for (const auto& x : disc.domain().corners()) xs.push_back(x);
    } else {
        xs.push_back(disc.qp_x().front());
    }
    const auto ts = linspace(-c, c, 400);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& x : xs)
        for (double t : ts) best = std::max(best, f.F(x, t));
    return best;
}

inline double integrate_on_mesh(const Discretization& disc, const std::function<double(std::size_t c, std::size_t q)>& fn) {
    double s = 0.0;
    for (std::size_t c = 0; c < disc.cells().size(); ++c) {
        const CellData& cd = disc.cells()[c];
        for (std::size_t q = cd.q_begin; q < cd.q_end; ++q) s += disc.qp_w()[q] * fn(c, q);
    }
    return s;
}

}  // namespace detail

/// F(x, t) >= 0 on (closure of Omega minus B(x0, r1)) x [0, d], sampled on a 200 x 200 grid.
inline CheckEntry check_H1(const Nonlinearity& f, const Domain& dom, const BallSpec& ball, double d) {
    CheckEntry e;
    e.name = "H1";
    e.mode = "sampled";
    const auto xs = detail::domain_samples(dom, 200, &ball);
    const auto ts = detail::linspace(0.0, d, 200);
    double worst = std::numeric_limits<double>::infinity();
    Point wx{};
    double wt = 0.0;
    for (const auto& x : xs)
        for (double t : ts) {
            const double v = f.F(x, t);
            if (v < worst) {
                worst = v;
                wx = x;
                wt = t;
            }
        }
    e.lhs = 0.0;
    e.rhs = worst;
    e.margin = worst;
    if (worst >= -1e-12) e.verdict = Verdict::pass;
    else if (worst < -1e-9) e.verdict = Verdict::fail;
    else e.verdict = Verdict::inconclusive;
    e.detail = "min F = " + fmt_double(worst) + " at x1 = " + fmt_double(wx[0]) +
               (dom.dim == 2 ? ", x2 = " + fmt_double(wx[1]) : std::string()) + ", t = " + fmt_double(wt);
    return e;
}

/// d^p eta^p |Omega| sup F(x, t) over Omega x [-c, c]  <  c^p int F(x, d).
inline CheckEntry check_H2(const Discretization& disc, const Nonlinearity& f, double eta, double c, double d, double p) {
    CheckEntry e;
    e.name = "H2";
    e.mode = "sampled";
    const double supF = detail::sampled_sup_F(disc, f, c);
    const double intFd = detail::integrate_on_mesh(disc, [&](std::size_t, std::size_t q) { return f.F(disc.qp_x()[q], d); });
    e.lhs = std::pow(d * eta, p) * domain_measure(disc.domain()) * supF;
    e.rhs = std::pow(c, p) * intFd;
    e.margin = e.rhs - e.lhs;
    e.verdict = strict_less(e.lhs, e.rhs);
    e.detail = "sup F = " + fmt_double(supF) + ", int F(x, d) = " + fmt_double(intFd);
    return e;
}

/// F(x, t) < h(x) (1 + |t|^gamma) at |t| in {1e2, 1e3, 1e4}; gamma < p is required for coercivity.
inline CheckEntry check_H3(const Nonlinearity& f, const Domain& dom, double p) {
    CheckEntry e;
    e.name = "H3";
    e.mode = "heuristic";
    e.heuristic = true;
    if (!f.growth_h) {
        e.verdict = Verdict::skipped;
        e.detail = "no growth data supplied";
        return e;
    }
    const auto xs = detail::domain_samples(dom, 50, nullptr);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& x : xs)
        for (double t : {1e2, 1e3, 1e4, -1e2, -1e3, -1e4}) {
            const double bound = (*f.growth_h)(0.0, x) * (1.0 + std::pow(std::abs(t), f.gamma));
            worst = std::min(worst, bound - f.F(x, t));
        }
    e.margin = worst;
    e.lhs = 0.0;
    e.rhs = worst;
    if (!(f.gamma < p)) {
        e.verdict = Verdict::fail;
        e.detail = "gamma = " + fmt_double(f.gamma) + " is not below p, so the bound does not give coercivity";
    } else {
        e.verdict = worst > 0.0 ? Verdict::heuristic_pass : Verdict::fail;
        e.detail = "sampled at |t| in {1e2, 1e3, 1e4}, gamma = " + fmt_double(f.gamma);
    }
    return e;
}

/// F(x, 0) = 0: automatic for the quadrature primitive, sampled for a closed form.
inline CheckEntry check_H4(const Nonlinearity& f, const Domain& dom) {
    CheckEntry e;
    e.name = "H4";
    if (!f.primitive) {
        e.verdict = Verdict::pass;
        e.mode = "exact";
        e.detail = "primitive integrated from 0";
        return e;
    }
    e.mode = "sampled";
    double worst = 0.0;
    for (const auto& x : detail::domain_samples(dom, 1000, nullptr)) worst = std::max(worst, std::abs(f.F(x, 0.0)));
    e.lhs = worst;
    e.margin = -worst;
    e.verdict = worst <= 1e-12 ? Verdict::pass : Verdict::fail;
    e.detail = "max |F(x, 0)| = " + fmt_double(worst);
    return e;
}

/// sup_{|t| <= tau} |g(x, t)| <= w_tau(x) for tau in {1, c, d, 10} on a 100 x 100 grid.
inline CheckEntry check_H5(const Nonlinearity& g, const Domain& dom, double c, double d) {
    CheckEntry e;
    e.name = "H5";
    e.mode = "sampled";
    if (g.is_zero()) {
        e.verdict = Verdict::pass;
        e.mode = "exact";
        e.detail = "g is identically zero";
        return e;
    }
    const auto xs = detail::domain_samples(dom, 100, nullptr);
    double worst = std::numeric_limits<double>::infinity();
    bool finite = true;
    for (double tau : {1.0, c, d, 10.0}) {
        const auto ts = detail::linspace(-tau, tau, 100);
        for (const auto& x : xs) {
            double m = 0.0;
            for (double t : ts) m = std::max(m, std::abs(g.value(x, t)));
            if (!std::isfinite(m)) finite = false;
            if (g.envelope) worst = std::min(worst, (*g.envelope)(tau, x) * (1.0 + 1e-12) + 1e-14 - m);
        }
    }
    e.margin = g.envelope ? worst : 0.0;
    e.rhs = e.margin;
    if (!finite) {
        e.verdict = Verdict::fail;
        e.detail = "g is not finite on the sample grid";
    } else if (g.envelope) {
        e.verdict = worst >= 0.0 ? Verdict::pass : Verdict::fail;
        e.detail = "envelope checked for tau in {1, c, d, 10}";
    } else {
        e.verdict = Verdict::heuristic_pass;
        e.heuristic = true;
        e.mode = "heuristic";
        e.detail = "no envelope supplied; sampled maxima used as the envelope";
    }
    return e;
}

/// Constants of the certificate. `k_est` supplies the k values; the certified
/// (or heuristic) upper bound is the one used for the verdicts.
inline Constants compute_constants(const ProblemSpec& spec, const Discretization& disc, const EmbeddingEstimate& k_est) {
    Constants k;
    const int N = spec.domain.dim;
    const double p = spec.p;
    k.w_N = unit_ball_volume(N);
    k.a_L1_annulus = annulus_weight_mass(spec.weight, spec.ball, spec.domain);
    k.k_lower = k_est.k_lower;
    k.k_upper = k_est.k_upper;
    k.k = k_est.k_upper;
    k.k_mode = k_est.upper_mode;
    k.k_source = to_string(k_est.upper_mode) + " upper bound";
    const double r1 = spec.ball.r1, r2 = spec.ball.r2;
    k.xi = compute_xi(p, r1, r2, k.k, k.a_L1_annulus);
    k.eta = compute_eta(p, N, r1, r2, k.k, spec.d, k.a_L1_annulus, k.w_N);
    k.r = compute_r(spec.c, k.k, p);
    const UstarNorm un = ustar_norm_p(disc, spec.d, spec.ball, p, spec.zero_order_term);
    k.ustar_norm_p = un.direct;
    k.ustar_formula_wN = un.formula_wN;
    k.ustar_formula_NwN = un.formula_NwN;
    std::tie(k.sandwich_lower, k.sandwich_upper) = sandwich_bounds_kfree(p, N, r1, r2, spec.d, k.a_L1_annulus);
    k.phi_ustar = k.ustar_norm_p / p;
    auto variant = [&](const std::string& label, double kv) {
        KVariant v;
        v.label = label;
        v.k = kv;
        v.xi = compute_xi(p, r1, r2, kv, k.a_L1_annulus);
        v.eta = compute_eta(p, N, r1, r2, kv, spec.d, k.a_L1_annulus, k.w_N);
        v.r = compute_r(spec.c, kv, p);
        v.sandwich_lower = std::pow(v.xi * spec.d / kv, p);
        v.sandwich_upper = std::pow(v.eta * spec.d / kv, p);
        k.variants.push_back(v);
    };
    variant("k_upper", k_est.k_upper);
    if (k_est.k_lower > 0.0) variant("k_lower", k_est.k_lower);
    return k;
}

/// Runs every check and assembles the report.
inline CertificateReport certify(const ProblemSpec& spec, const Discretization& disc, const EmbeddingEstimate& k_est) {
    spec.validate();
    CertificateReport rep;
    Constants& K = rep.constants;
    K = compute_constants(spec, disc, k_est);
    const double p = spec.p;

    rep.entries.push_back(check_H1(spec.f, spec.domain, spec.ball, spec.d));
    rep.entries.push_back(check_H2(disc, spec.f, K.eta, spec.c, spec.d, p));
    rep.entries.push_back(check_H3(spec.f, spec.domain, p));
    rep.entries.push_back(check_H4(spec.f, spec.domain));
    rep.entries.push_back(check_H5(spec.g, spec.domain, spec.c, spec.d));

    {
        CheckEntry e;
        e.name = "dxi_gt_c";
        e.mode = "exact";
        e.lhs = std::pow(spec.c, p);
        e.rhs = std::pow(spec.d * K.xi, p);
        e.margin = e.rhs - e.lhs;
        e.verdict = strict_less(e.lhs, e.rhs);
        e.detail = "d^p xi^p > c^p";
        rep.entries.push_back(e);
    }
    {
        const SandwichResult s = sandwich_check(K.sandwich_lower, K.ustar_norm_p, K.sandwich_upper);
        CheckEntry e;
        e.name = "sandwich";
        e.mode = "exact";
        e.lhs = s.lower;
        e.rhs = s.upper;
        e.margin = std::min(s.lower_margin, s.upper_margin);
        e.verdict = s.verdict;
        e.detail = "lower < ||u*||^p = " + fmt_double(s.value) + " < upper";
        rep.entries.push_back(e);
    }
    {
        CheckEntry e;
        e.name = "level_separation";
        e.mode = "exact";
        e.lhs = K.r;
        e.rhs = K.phi_ustar;
        e.margin = std::min(K.r, K.phi_ustar - K.r);
        const Verdict a = strict_less(0.0, K.r), b = strict_less(K.r, K.phi_ustar);
        e.verdict = (a == Verdict::fail || b == Verdict::fail) ? Verdict::fail
                    : (a == Verdict::pass && b == Verdict::pass) ? Verdict::pass
                                                                 : Verdict::inconclusive;
        e.detail = "phi(0) = 0 < r < phi(u*)";
        rep.entries.push_back(e);
    }
    {
        const DiscreteFunction u = build_ustar(spec.d, spec.ball, disc.mesh_ptr());
        const double maxF = detail::sampled_sup_F(disc, spec.f, spec.c);
        const double intFu = detail::integrate_on_mesh(disc, [&](std::size_t c, std::size_t q) {
            return spec.f.F(disc.qp_x()[q], disc.value_at_qp(u.values, c, q));
        });
        CheckEntry e;
        e.name = "bona1";
        e.mode = "sampled";
        e.lhs = domain_measure(spec.domain) * maxF;
        e.rhs = std::pow(spec.c / (K.k * std::pow(K.ustar_norm_p, 1.0 / p)), p) * intFu;
        e.margin = e.rhs - e.lhs;
        e.verdict = weak_less(e.lhs, e.rhs);
        e.detail = "|Omega| max F <= (c / (k ||u*||))^p int F(x, u*)";
        rep.entries.push_back(e);
    }

    bool any_fail = false, all_pass = true;
    for (const auto& e : rep.entries) {
        if (e.verdict == Verdict::fail) any_fail = true;
        if (!e.heuristic && e.verdict != Verdict::pass) all_pass = false;
    }
    rep.overall = any_fail ? Verdict::fail : all_pass ? Verdict::pass : Verdict::inconclusive;

    const double rel = std::abs(K.ustar_formula_NwN - K.ustar_norm_p) / K.ustar_norm_p;
    rep.notes.push_back("||u*||^p formula with N w_N in the second term differs from direct quadrature by " +
                        fmt_double(rel) + " (relative)");
    rep.notes.push_back("||u*||^p formula with w_N as printed differs from direct quadrature by " +
                        fmt_double(std::abs(K.ustar_formula_wN - K.ustar_norm_p) / K.ustar_norm_p) + " (relative)");
    rep.notes.push_back("eta depends on d through its second term");
    if (K.k_mode == BoundMode::heuristic) rep.notes.push_back("k is a heuristic upper bound");
    if (k_est.inconsistent) rep.notes.push_back("k_lower exceeds k_upper: embedding estimate is inconsistent");
    return rep;
}

/// Structured-text form of the report.
inline StructuredText report_text(const CertificateReport& rep) {
    StructuredText st;
    const Constants& K = rep.constants;
    st.set("", "overall", to_string(rep.overall));
    const auto failing = rep.failing();
    std::string names;
    for (const auto& n : failing) names += (names.empty() ? "" : ", ") + n;
    st.set("", "failing", names.empty() ? "none" : names);
    st.set("constants", "w_N", fmt_double(K.w_N));
    st.set("constants", "a_L1_annulus", fmt_double(K.a_L1_annulus));
    st.set("constants", "k", fmt_double(K.k));
    st.set("constants", "k_mode", to_string(K.k_mode));
    st.set("constants", "k_lower", fmt_double(K.k_lower));
    st.set("constants", "k_upper", fmt_double(K.k_upper));
    st.set("constants", "xi", fmt_double(K.xi));
    st.set("constants", "eta", fmt_double(K.eta));
    st.set("constants", "r", fmt_double(K.r));
    st.set("constants", "ustar_norm_p", fmt_double(K.ustar_norm_p));
    st.set("constants", "ustar_formula_wN", fmt_double(K.ustar_formula_wN));
    st.set("constants", "ustar_formula_NwN", fmt_double(K.ustar_formula_NwN));
    st.set("constants", "sandwich_lower", fmt_double(K.sandwich_lower));
    st.set("constants", "sandwich_upper", fmt_double(K.sandwich_upper));
    st.set("constants", "phi_ustar", fmt_double(K.phi_ustar));
    for (const auto& e : rep.entries) {
        const std::string sec = "check." + e.name;
        st.set(sec, "verdict", to_string(e.verdict));
        st.set(sec, "mode", e.mode.empty() ? "exact" : e.mode);
        st.set(sec, "lhs", fmt_double(e.lhs));
        st.set(sec, "rhs", fmt_double(e.rhs));
        st.set(sec, "margin", fmt_double(e.margin));
        if (!e.detail.empty()) st.set(sec, "detail", e.detail);
    }
    for (std::size_t i = 0; i < rep.notes.size(); ++i) st.set("notes", "note" + std::to_string(i + 1), rep.notes[i]);
    return st;
}

/// constants.csv: one row per k variant.
inline CsvTable constants_table(const CertificateReport& rep) {
    const Constants& K = rep.constants;
    CsvTable t;
    t.header = {"k_label", "k", "xi", "eta", "r", "sandwich_lower", "sandwich_upper", "ustar_norm_p",
                "lower_margin", "upper_margin"};
    for (const auto& v : K.variants)
        t.add_row({v.label, fmt_double(v.k), fmt_double(v.xi), fmt_double(v.eta), fmt_double(v.r),
                   fmt_double(v.sandwich_lower), fmt_double(v.sandwich_upper), fmt_double(K.ustar_norm_p),
                   fmt_double(K.ustar_norm_p - v.sandwich_lower), fmt_double(v.sandwich_upper - K.ustar_norm_p)});
    return t;
}

}  // namespace wplap
