#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wplap/csv.hpp"
#include "wplap/discretization.hpp"
#include "wplap/error.hpp"
#include "wplap/weight.hpp"

namespace wplap {

struct NormReport {
    double lp_part = 0.0;    // int |u|^p
    double grad_part = 0.0;  // int a |grad u|^p
    double full_norm = 0.0;
    double a_norm = 0.0;
};

/// Per-cell contributions to int |u|^p and int a |grad u|^p.
inline std::pair<double, double> cell_norm_parts(const Discretization& disc, const std::vector<double>& nodal,
                                                 std::size_t c, double p) {
    const CellData& cd = disc.cells()[c];
    const Point g = disc.cell_gradient(nodal, c);
    const double gn = norm(g, disc.dim());
    const double grad = cd.weight_mass * std::pow(gn, p);
    double lp = 0.0;
    for (std::size_t q = cd.q_begin; q < cd.q_end; ++q)
        lp += disc.qp_w()[q] * std::pow(std::abs(disc.value_at_qp(nodal, c, q)), p);
    return {lp, grad};
}

inline NormReport weighted_norm(const Discretization& disc, const DiscreteFunction& u, double p) {
    if (!(p > 1.0)) throw ArgumentError("p must exceed 1");
    disc.check_mesh(u);
    NormReport r;
    for (std::size_t c = 0; c < disc.cells().size(); ++c) {
        auto [lp, grad] = cell_norm_parts(disc, u.values, c, p);
        if (!std::isfinite(lp) || !std::isfinite(grad)) throw QuadratureFailure("non-finite norm contribution", c);
        r.lp_part += lp;
        r.grad_part += grad;
    }
    r.full_norm = std::pow(r.lp_part + r.grad_part, 1.0 / p);
    r.a_norm = std::pow(r.grad_part, 1.0 / p);
    return r;
}

/// Convenience form that builds the discretization for u's mesh.
inline NormReport weighted_norm(const DiscreteFunction& u, const Domain& domain, const WeightSpec& w, double p) {
    Discretization disc(domain, u.mesh, w);
    return weighted_norm(disc, u, p);
}

inline double sup_norm(const DiscreteFunction& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::abs(v));
    return m;
}

/// N^{-1/ps} pi^{-1/2} Gamma(1+N/2)^{1/N} ((ps-1)/(ps-N))^{1-1/ps} |Omega|^{1/N-1/ps}.
inline double talenti_bound(int N, double ps, double omega_measure) {
    if (N < 1) throw ArgumentError("dimension must be >= 1");
    if (!(ps > N)) throw RegimeError("the Talenti bound needs p_s > N");
    if (!(omega_measure > 0.0)) throw ArgumentError("domain measure must be positive");
    const double n = N;
    return std::pow(n, -1.0 / ps) / std::sqrt(std::numbers::pi) * std::pow(std::tgamma(1.0 + 0.5 * n), 1.0 / n) *
           std::pow((ps - 1.0) / (ps - n), 1.0 - 1.0 / ps) * std::pow(omega_measure, 1.0 / n - 1.0 / ps);
}

enum class BoundMode { certified, heuristic };

inline std::string to_string(BoundMode m) { return m == BoundMode::certified ? "certified" : "heuristic"; }

struct EmbeddingEstimate {
    double k_lower = 0.0;
    double k_upper = 0.0;
    double talenti = 0.0;        // sup|u| <= talenti * ||grad u||_{ps}
    double holder_factor = 0.0;  // (int a^{-s})^{1/(p s)}
    BoundMode upper_mode = BoundMode::heuristic;
    DiscreteFunction witness;
    int ascent_steps = 0;
    bool ascent_diverged = false;
    bool inconsistent = false;   // k_lower > k_upper
};

struct EmbeddingOptions {
    int ascent_iterations = 50;
    /// Upper limit on the number of peak locations tried (all interior nodes in 1D).
    std::size_t max_centers = 256;
    /// Same limit for two-dimensional meshes.
    std::size_t max_centers_2d = 32;
};

namespace detail {

/// Evaluates max|u| / ||u|| with cached per-cell contributions so that single
/// nodal perturbations are cheap.
class RatioEvaluator {
public:
    RatioEvaluator(const Discretization& disc, double p, bool zero_order)
        : disc_(disc), p_(p), zero_order_(zero_order), vc_(disc.mesh().vertex_cells()) {}

    double cell(const std::vector<double>& v, std::size_t c) const {
        auto [lp, grad] = cell_norm_parts(disc_, v, c, p_);
        return zero_order_ ? lp + grad : grad;
    }

    double total(const std::vector<double>& v) const {
        double s = 0.0;
        for (std::size_t c = 0; c < disc_.cells().size(); ++c) s += cell(v, c);
        return s;
    }

    double ratio(const std::vector<double>& v) const {
        const double n = total(v);
        if (!(n > 0.0)) return 0.0;
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m / std::pow(n, 1.0 / p_);
    }

    /// Central finite-difference gradient of the ratio with respect to interior nodal values.
    std::vector<double> gradient(std::vector<double> v, double eps) const {
        const std::size_t nv = v.size();
        std::vector<double> cells(disc_.cells().size());
        double tot = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) tot += cells[c] = cell(v, c);
        // Largest and second largest |v| so the sup of a perturbed vector is O(1).
        std::size_t imax = 0;
        for (std::size_t i = 0; i < nv; ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        double second = 0.0;
        for (std::size_t i = 0; i < nv; ++i)
            if (i != imax) second = std::max(second, std::abs(v[i]));
        std::vector<double> g(nv, 0.0);
        for (std::size_t i = 0; i < nv; ++i) {
            if (disc_.mesh().on_boundary[i]) continue;
            const double base = v[i];
            double r[2];
            for (int side = 0; side < 2; ++side) {
                v[i] = base + (side == 0 ? eps : -eps);
                double t = tot;
                for (std::size_t c : vc_[i]) t += cell(v, c) - cells[c];
                const double sup = i == imax ? std::max(second, std::abs(v[i])) : std::max(std::abs(v[imax]), std::abs(v[i]));
                r[side] = t > 0.0 ? sup / std::pow(t, 1.0 / p_) : 0.0;
            }
            v[i] = base;
            g[i] = (r[0] - r[1]) / (2.0 * eps);
        }
        return g;
    }

private:
    const Discretization& disc_;
    double p_;
    bool zero_order_;
    std::vector<std::vector<std::size_t>> vc_;
};

}  // namespace detail

/// Lower and upper estimates of k = sup max|u| / ||u||. The lower estimate comes
/// from tents and cones peaked at interior nodes, refined by gradient ascent; the
/// upper estimate combines the Talenti constant with Hoelder's inequality
/// ||grad u||_{ps} <= (int a^{-s})^{1/(p s)} ||u||_a.
inline EmbeddingEstimate estimate_k(const Discretization& disc, double p, double s, bool zero_order_term = true,
                                    const EmbeddingOptions& opt = {}) {
    const Domain& dom = disc.domain();
    const Mesh& mesh = disc.mesh();
    const int N = dom.dim;
    const double ps = compute_ps(p, s);
    if (!(ps > N)) throw RegimeError("estimate_k needs p_s > N");
    if (disc.num_dofs() == 0) throw ArgumentError("mesh has no interior vertices");

    EmbeddingEstimate est;
    est.talenti = talenti_bound(N, ps, domain_measure(dom));
    auto exact = closed_form_weight_power_integral(disc.weight(), dom, -s);
    double int_neg_s = 0.0;
    if (exact) {
        int_neg_s = *exact;
        est.upper_mode = BoundMode::certified;
    } else {
        const double hq = std::min(disc.h(), dom.diameter() / 64.0);
        int_neg_s = detail::integrate_weight_function(disc.weight(), dom, dom, hq, 5, 0,
                                                      [s](double a) { return std::pow(a, -s); });
        est.upper_mode = BoundMode::heuristic;
    }
    est.holder_factor = std::pow(int_neg_s, 1.0 / (p * s));
    est.k_upper = est.talenti * est.holder_factor;

    detail::RatioEvaluator eval(disc, p, zero_order_term);
    std::vector<double> best(mesh.num_vertices(), 0.0);
    double best_ratio = 0.0;
    auto consider = [&](std::vector<double>&& v) {
        const double r = eval.ratio(v);
        if (r > best_ratio) {
            best_ratio = r;
            best = std::move(v);
        }
    };

    const std::size_t centers = std::max<std::size_t>(1, N == 1 ? opt.max_centers : opt.max_centers_2d);
    const std::size_t stride = std::max<std::size_t>(1, (disc.num_dofs() + centers - 1) / centers);
    for (std::size_t i = 0; i < disc.num_dofs(); i += stride) {
        const Point& x0 = mesh.vertices[disc.vertex_of_dof(i)];
        const double rho0 = distance_to_boundary(dom, x0);
        if (dom.kind != DomainKind::ball) {
            // Pyramid with apex x0 that vanishes on every face of the box.
            std::vector<double> v(mesh.num_vertices(), 0.0);
            for (std::size_t k = 0; k < mesh.num_vertices(); ++k) {
                if (mesh.on_boundary[k]) continue;
                double m = 1.0;
                const Point& x = mesh.vertices[k];
                for (int d = 0; d < N; ++d) {
                    if (x[d] <= x0[d]) m = std::min(m, (x[d] - dom.lower[d]) / (x0[d] - dom.lower[d]));
                    else m = std::min(m, (dom.upper[d] - x[d]) / (dom.upper[d] - x0[d]));
                }
                v[k] = std::max(0.0, m);
            }
            consider(std::move(v));
        }
        for (double rho = rho0; rho >= 0.5 * mesh.h; rho *= 0.5) {
            std::vector<double> v(mesh.num_vertices(), 0.0);
            for (std::size_t k = 0; k < mesh.num_vertices(); ++k)
                if (!mesh.on_boundary[k]) v[k] = std::max(0.0, 1.0 - distance(mesh.vertices[k], x0, N) / rho);
            consider(std::move(v));
        }
    }

    // Normalized gradient ascent from the best candidate.
    for (int it = 0; it < opt.ascent_iterations; ++it) {
        double vnorm = 0.0;
        double sup = 0.0;
        for (double x : best) {
            vnorm += x * x;
            sup = std::max(sup, std::abs(x));
        }
        vnorm = std::sqrt(vnorm);
        const auto g = eval.gradient(best, 1e-6 * std::max(sup, 1e-300));
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        if (!std::isfinite(gn)) {
            est.ascent_diverged = true;
            break;
        }
        if (gn == 0.0) break;
        double step = 1e-3 * vnorm;
        bool improved = false;
        for (int half = 0; half < 20 && !improved; ++half, step *= 0.5) {
            std::vector<double> trial = best;
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += step * g[k] / gn;
            const double r = eval.ratio(trial);
            if (!std::isfinite(r)) {
                est.ascent_diverged = true;
                continue;
            }
            if (r > best_ratio) {
                best_ratio = r;
                best = std::move(trial);
                improved = true;
            }
        }
        ++est.ascent_steps;
        if (!improved) break;
    }

    est.k_lower = best_ratio;
    est.witness = DiscreteFunction::zero(disc.mesh_ptr());
    est.witness.values = best;
    est.inconsistent = !(est.k_lower > 0.0 && est.k_lower <= est.k_upper);
    return est;
}

/// Smallest and largest ||u|| / ||u||_a over a family of functions.
inline std::pair<double, double> norm_equivalence_probe(const Discretization& disc,
                                                        const std::vector<DiscreteFunction>& family, double p) {
    if (family.empty()) throw ArgumentError("empty function family");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& u : family) {
        if (sup_norm(u) == 0.0) throw ArgumentError("function family contains the zero function");
        const NormReport r = weighted_norm(disc, u, p);
        if (!(r.a_norm > 0.0)) throw ArgumentError("function family contains a function with zero gradient");
        const double q = r.full_norm / r.a_norm;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    return {lo, hi};
}

/// One row per vertex: coordinates, then the value.
inline void write_function_csv(const std::string& path, const DiscreteFunction& u) {
    CsvTable t;
    t.header = u.mesh->dim == 1 ? std::vector<std::string>{"x1", "u"} : std::vector<std::string>{"x1", "x2", "u"};
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const Point& x = u.mesh->vertices[i];
        if (u.mesh->dim == 1) t.add_row({fmt_double(x[0]), fmt_double(u.values[i])});
        else t.add_row({fmt_double(x[0]), fmt_double(x[1]), fmt_double(u.values[i])});
    }
    write_csv(path, t);
}

/// Reads values written by write_function_csv back onto the same mesh.
inline DiscreteFunction read_function_csv(const std::string& path, std::shared_ptr<const Mesh> mesh) {
    const CsvTable t = read_csv(path);
    if (t.rows.size() != mesh->num_vertices()) throw ArgumentError("csv row count differs from vertex count");
    const std::size_t col = t.column("u");
    DiscreteFunction u = DiscreteFunction::zero(mesh);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (int d = 0; d < mesh->dim; ++d)
            if (std::abs(t.number(i, static_cast<std::size_t>(d)) - mesh->vertices[i][d]) > 1e-12)
                throw ArgumentError("csv coordinates do not match the mesh");
        u.values[i] = t.number(i, col);
    }
    u.boundary_zero = true;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        if (mesh->on_boundary[i] && u.values[i] != 0.0) u.boundary_zero = false;
    return u;
}

}  // namespace wplap
