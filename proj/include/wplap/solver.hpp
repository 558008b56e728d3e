#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "wplap/certificate.hpp"
#include "wplap/energy.hpp"
#include "wplap/error.hpp"

namespace wplap {

/// What the solvers need from a functional on R^n.
template <class E>
concept SmoothEnergy = requires(const E& e, const Eigen::VectorXd& x) {
    { e.size() } -> std::convertible_to<Eigen::Index>;
    { e.value(x) } -> std::convertible_to<double>;
    { e.gradient(x) } -> std::convertible_to<Eigen::VectorXd>;
    { e.hessian(x) } -> std::convertible_to<Eigen::SparseMatrix<double>>;
    { e.metric() } -> std::convertible_to<Eigen::SparseMatrix<double>>;
    { e.residual_norm(x) } -> std::convertible_to<double>;
};

struct SolverConfig {
    double tolerance = 1e-8;
    int max_iterations = 5000;
    double backtrack = 0.5;
    double armijo = 1e-4;
    double eps_reg = 1e-8;
    int string_images = 33;
    int string_steps = 2000;
    double string_step = 0.1;
    double distinct_tol = 1e-3;
    unsigned seed = 42;

    void validate() const {
        if (!(tolerance > 0.0)) throw ArgumentError("solver tolerance must be positive");
        if (max_iterations < 1) throw ArgumentError("max_iterations must be >= 1");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw ArgumentError("backtracking factor must lie in (0, 1)");
        if (!(armijo > 0.0 && armijo < 1.0)) throw ArgumentError("sufficient-decrease constant must lie in (0, 1)");
        if (!(eps_reg > 0.0)) throw ArgumentError("eps_reg must be positive");
        if (string_images < 5 || string_images % 2 == 0) throw ArgumentError("string size must be odd and >= 5");
        if (string_steps < 1) throw ArgumentError("string_steps must be >= 1");
        if (!(string_step > 0.0)) throw ArgumentError("string step must be positive");
        if (!(distinct_tol > 0.0)) throw ArgumentError("distinctness threshold must be positive");
    }
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double energy = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// Cached factorization of the metric, for preconditioned gradients.
class MetricSolver {
public:
    explicit MetricSolver(const Eigen::SparseMatrix<double>& K) {
        llt_.compute(K);
        if (llt_.info() != Eigen::Success) throw SolverFailure("metric matrix is not positive definite", {}, 0.0);
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const { return llt_.solve(r); }

private:
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

/// Descent direction -(H + sigma K)^{-1} R with the smallest sigma in {0, 1e-4, 1e-3, ...}
/// making the shifted Hessian positive definite.
inline Eigen::VectorXd modified_newton_direction(const Eigen::SparseMatrix<double>& H, const Eigen::SparseMatrix<double>& K,
                                                 const Eigen::VectorXd& R, const MetricSolver& metric) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    double sigma = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        const Eigen::SparseMatrix<double> A = sigma == 0.0 ? H : Eigen::SparseMatrix<double>(H + sigma * K);
        ldlt.compute(A);
        if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
            Eigen::VectorXd dx = -ldlt.solve(R);
            if (dx.allFinite() && dx.dot(R) < 0.0) return dx;
        }
        sigma = sigma == 0.0 ? 1e-4 : sigma * 10.0;
    }
    return -metric.solve(R);
}

}  // namespace detail

/// Damped modified-Newton descent from x0 with Armijo backtracking.
template <SmoothEnergy E>
MinimizeResult minimize_from(const E& e, Eigen::VectorXd x, const SolverConfig& cfg) {
    cfg.validate();
    const auto& K = e.metric();
    detail::MetricSolver metric(K);
    MinimizeResult out;
    double fx = e.value(x);
    Eigen::VectorXd best = x;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Eigen::VectorXd R = e.gradient(x);
        const double res = e.residual_norm(R);
        if (res < best_res) {
            best_res = res;
            best = x;
        }
        out.iterations = it;
        if (res <= cfg.tolerance) {
            out.x = x;
            out.energy = fx;
            out.residual_norm = res;
            out.converged = true;
            return out;
        }
        if (fx < -1.0 / cfg.tolerance)
            throw CoercivityViolation("energy decreases without bound; the growth hypothesis is likely violated",
                                      std::vector<double>(x.data(), x.data() + x.size()), res);
        Eigen::VectorXd dx = detail::modified_newton_direction(e.hessian(x), K, R, metric);
        double slope = R.dot(dx);
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= cfg.backtrack) {
            const Eigen::VectorXd trial = x + t * dx;
            const double ft = e.value(trial);
            if (std::isfinite(ft) && ft <= fx + cfg.armijo * t * slope) {
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Energy differences are at roundoff level: accept a full step that reduces the residual.
            const Eigen::VectorXd trial = x + dx;
            const double rt = e.residual_norm(e.gradient(trial));
            if (rt < res) {
                x = trial;
                fx = e.value(x);
            } else {
                // Preconditioned gradient step as a last resort.
                dx = -metric.solve(R);
                slope = R.dot(dx);
                t = 1.0;
                for (int ls = 0; ls < 60; ++ls, t *= cfg.backtrack) {
                    const Eigen::VectorXd tr = x + t * dx;
                    const double ft = e.value(tr);
                    if (std::isfinite(ft) && ft <= fx + cfg.armijo * t * slope) {
                        x = tr;
                        fx = ft;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) break;
            }
        }
    }
    const Eigen::VectorXd R = e.gradient(x);
    const double res = e.residual_norm(R);
    if (res < best_res) {
        best_res = res;
        best = x;
    }
    throw SolverFailure("minimization did not reach the residual tolerance",
                        std::vector<double>(best.data(), best.data() + best.size()), best_res);
}

/// Newton iteration on the residual (no energy descent), for saddle points.
template <SmoothEnergy E>
MinimizeResult newton_polish(const E& e, Eigen::VectorXd x, const SolverConfig& cfg, int max_iterations = 100) {
    MinimizeResult out;
    Eigen::VectorXd R = e.gradient(x);
    double res = e.residual_norm(R);
    for (int it = 0; it < max_iterations && res > cfg.tolerance; ++it) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        Eigen::SparseMatrix<double> H = e.hessian(x);
        H.makeCompressed();
        lu.compute(H);
        if (lu.info() != Eigen::Success) break;
        const Eigen::VectorXd dx = -lu.solve(R);
        if (!dx.allFinite()) break;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            const Eigen::VectorXd trial = x + t * dx;
            const Eigen::VectorXd Rt = e.gradient(trial);
            const double rt = e.residual_norm(Rt);
            if (std::isfinite(rt) && rt < res) {
                x = trial;
                R = Rt;
                res = rt;
                accepted = true;
                break;
            }
        }
        out.iterations = it + 1;
        if (!accepted) break;
    }
    out.x = x;
    out.energy = e.value(x);
    out.residual_norm = res;
    out.converged = res <= cfg.tolerance;
    return out;
}

/// Functional U -> E(U) - b.U, whose critical points solve grad E(U) = b.
template <SmoothEnergy E>
class ShiftedEnergy {
public:
    ShiftedEnergy(const E& e, Eigen::VectorXd b) : e_(e), b_(std::move(b)) {}
    Eigen::Index size() const { return e_.size(); }
    double value(const Eigen::VectorXd& x) const { return e_.value(x) - b_.dot(x); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return e_.gradient(x) - b_; }
    Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd& x) const { return e_.hessian(x); }
    const Eigen::SparseMatrix<double>& metric() const { return e_.metric(); }
    double residual_norm(const Eigen::VectorXd& r) const { return e_.residual_norm(r); }

private:
    const E& e_;
    Eigen::VectorXd b_;
};

/// Solves phi'(u) = rhs, i.e. minimizes phi(u) - rhs.u, which is uniformly convex for p >= 2.
/// rhs lives in the dual space: one entry per interior node (tested against the nodal basis).
inline DiscreteFunction invert_phi_prime(std::shared_ptr<const Discretization> disc, double p, const Eigen::VectorXd& rhs,
                                         const SolverConfig& cfg = {}, bool zero_order_term = true,
                                         std::optional<Eigen::VectorXd> start = std::nullopt) {
    EnergyParams par;
    par.p = p;
    par.zero_order_term = zero_order_term;
    par.eps_reg = cfg.eps_reg;
    Energy phi(disc, Nonlinearity::zero(), Nonlinearity::zero(), par);
    if (rhs.size() != phi.size()) throw ArgumentError("rhs has the wrong length");
    ShiftedEnergy<Energy> shifted(phi, rhs);
    const Eigen::VectorXd x0 = start ? *start : Eigen::VectorXd::Zero(phi.size());
    const MinimizeResult r = minimize_from(shifted, x0, cfg);
    return disc->from_dofs(r.x);
}

/// Load vector int fn(x) phi_i(x) dx over the interior basis functions.
inline Eigen::VectorXd load_vector(const Discretization& disc, const std::function<double(const Point&)>& fn) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(disc.num_dofs()));
    const std::size_t nv = disc.mesh().vertices_per_cell();
    for (std::size_t c = 0; c < disc.cells().size(); ++c) {
        const CellData& cd = disc.cells()[c];
        for (std::size_t q = cd.q_begin; q < cd.q_end; ++q) {
            const double v = disc.qp_w()[q] * fn(disc.qp_x()[q]);
            for (std::size_t i = 0; i < nv; ++i) {
                const auto di = disc.dof_of_vertex(cd.v[i]);
                if (di >= 0) b[di] += v * disc.qp_phi()[q][i];
            }
        }
    }
    return b;
}

enum class Classification { global_min_candidate, sublevel_min, mountain_pass };

inline std::string to_string(Classification c) {
    switch (c) {
        case Classification::global_min_candidate: return "global-min-candidate";
        case Classification::sublevel_min: return "sublevel-min";
        case Classification::mountain_pass: return "mountain-pass";
    }
    return "?";
}

struct SolutionRecord {
    DiscreteFunction u;
    double lambda = 0.0;
    double mu = 0.0;
    double residual_norm = 0.0;
    double energy = 0.0;
    Classification classification = Classification::global_min_candidate;
    double norm = 0.0;
    /// sublevel-min: the constraint phi <= r is active at the returned point.
    bool constraint_active = false;
    /// mountain-pass: Newton refinement reached the tolerance.
    bool polished = true;
    std::string seed_label;
};

namespace detail {

inline SolutionRecord make_record(const Energy& e, const Eigen::VectorXd& x, Classification cls) {
    SolutionRecord r;
    r.u = e.disc().from_dofs(x);
    r.lambda = e.params().lambda;
    r.mu = e.params().mu;
    r.residual_norm = e.residual_norm(e.gradient(x));
    r.energy = e.value(x);
    r.classification = cls;
    const NormReport nr = weighted_norm(e.disc(), r.u, e.p());
    r.norm = e.params().zero_order_term ? nr.full_norm : nr.a_norm;
    return r;
}

}  // namespace detail

/// Multistart seeds: 0, +-u*, +-4u*, +-16u* and a seeded random vector.
inline std::vector<std::pair<std::string, Eigen::VectorXd>> multistart_seeds(const Energy& e, const DiscreteFunction& ustar,
                                                                             unsigned seed) {
    const Eigen::VectorXd us = e.disc().to_dofs(ustar);
    std::vector<std::pair<std::string, Eigen::VectorXd>> out;
    out.emplace_back("zero", Eigen::VectorXd::Zero(e.size()));
    for (double s : {1.0, 4.0, 16.0}) {
        const std::string tag = s == 1.0 ? "u*" : fmt_double(s) + "u*";
        out.emplace_back("+" + tag, s * us);
        out.emplace_back("-" + tag, -s * us);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd rnd(e.size());
    for (Eigen::Index i = 0; i < rnd.size(); ++i) rnd[i] = uni(rng);
    out.emplace_back("random", rnd);
    return out;
}

/// Lowest-energy critical point over the multistart seeds.
inline SolutionRecord minimize_energy(const Energy& e, const DiscreteFunction& ustar, const SolverConfig& cfg) {
    std::optional<MinimizeResult> best;
    std::string label;
    std::optional<SolverFailure> last_failure;
    for (auto& [name, x0] : multistart_seeds(e, ustar, cfg.seed)) {
        try {
            MinimizeResult r = minimize_from(e, x0, cfg);
            if (!best || r.energy < best->energy - 1e-12 * (1.0 + std::abs(r.energy))) {
                best = std::move(r);
                label = name;
            }
        } catch (const CoercivityViolation&) {
            throw;
        } catch (const SolverFailure& f) {
            last_failure = f;
        }
    }
    if (!best) throw *last_failure;
    SolutionRecord rec = detail::make_record(e, best->x, Classification::global_min_candidate);
    rec.seed_label = label;
    return rec;
}

/// Minimizes E over the sublevel set {phi <= r} by projected descent with radial
/// projection u -> (r / phi(u))^{1/p} u.
inline SolutionRecord sublevel_minimize(const Energy& e, double r, const SolverConfig& cfg,
                                        std::optional<Eigen::VectorXd> start = std::nullopt) {
    cfg.validate();
    if (!(r > 0.0)) throw ArgumentError("sublevel radius r must be positive");
    const double p = e.p();
    auto project = [&](Eigen::VectorXd x) {
        const double ph = e.parts(x).phi;
        if (std::isfinite(r) && ph > r) x *= std::pow(r / ph, 1.0 / p);
        return x;
    };
    detail::MetricSolver metric(e.metric());
    Eigen::VectorXd x = project(start ? *start : Eigen::VectorXd::Zero(e.size()));
    double fx = e.value(x);
    bool active = false;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Eigen::VectorXd R = e.gradient(x);
        const double res = e.residual_norm(R);
        const double ph = e.parts(x).phi;
        active = std::isfinite(r) && ph >= r * (1.0 - 1e-12);
        if (res <= cfg.tolerance && !active) break;
        bool moved = false;
        for (int kind = 0; kind < 2 && !moved; ++kind) {
            const Eigen::VectorXd dx =
                kind == 0 ? detail::modified_newton_direction(e.hessian(x), e.metric(), R, metric) : Eigen::VectorXd(-metric.solve(R));
            double t = 1.0;
            for (int ls = 0; ls < 60; ++ls, t *= cfg.backtrack) {
                const Eigen::VectorXd trial = project(x + t * dx);
                const double ft = e.value(trial);
                if (std::isfinite(ft) && ft <= fx + cfg.armijo * R.dot(trial - x) && ft < fx) {
                    moved = (trial - x).norm() > 1e-15 * (1.0 + x.norm());
                    x = trial;
                    fx = ft;
                    break;
                }
            }
        }
        if (!moved) {
            // No descent left: either a constrained minimum on the sphere or roundoff near an interior one.
            if (!active) {
                const MinimizeResult pol = newton_polish(e, x, cfg, 20);
                if (pol.converged && e.parts(pol.x).phi <= r) x = pol.x;
            }
            break;
        }
    }
    SolutionRecord rec = detail::make_record(e, x, Classification::sublevel_min);
    rec.constraint_active = std::isfinite(r) && e.parts(x).phi >= r * (1.0 - 1e-12);
    return rec;
}

struct StringResult {
    std::vector<Eigen::VectorXd> images;
    std::vector<double> energies;
    int steps = 0;
    std::size_t peak = 0;
};

namespace detail {

/// Redistributes images equally in arclength (metric K), piecewise linearly.
inline void reparametrize(std::vector<Eigen::VectorXd>& img, const Eigen::SparseMatrix<double>& K) {
    const std::size_t M = img.size();
    std::vector<double> s(M, 0.0);
    for (std::size_t i = 1; i < M; ++i) {
        const Eigen::VectorXd d = img[i] - img[i - 1];
        s[i] = s[i - 1] + std::sqrt(std::max(0.0, d.dot(K * d)));
    }
    if (!(s.back() > 0.0)) return;
    std::vector<Eigen::VectorXd> out(M);
    out.front() = img.front();
    out.back() = img.back();
    std::size_t seg = 1;
    for (std::size_t i = 1; i + 1 < M; ++i) {
        const double target = s.back() * static_cast<double>(i) / static_cast<double>(M - 1);
        while (seg < M - 1 && s[seg] < target) ++seg;
        const double span = s[seg] - s[seg - 1];
        const double t = span > 0.0 ? (target - s[seg - 1]) / span : 0.0;
        out[i] = (1.0 - t) * img[seg - 1] + t * img[seg];
    }
    img = std::move(out);
}

}  // namespace detail

/// String method between two fixed endpoints: images follow the component of the
/// preconditioned gradient normal to the path and are redistributed by arclength.
template <SmoothEnergy E>
StringResult straight_string(const E& e, const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SolverConfig& cfg) {
    const std::size_t M = static_cast<std::size_t>(cfg.string_images);
    StringResult out;
    out.images.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(M - 1);
        out.images[i] = (1.0 - t) * a + t * b;
    }
    out.energies.assign(M, 0.0);
    out.energies.front() = e.value(a);
    out.energies.back() = e.value(b);
    out.peak = M / 2;
    return out;
}

/// Advances the string by at most `steps` steepest-descent steps of the component
/// of the Sobolev gradient normal to the string. Returns true once the largest
/// normal move falls below 1e-6 times the endpoint separation.
template <SmoothEnergy E>
bool advance_string(const E& e, StringResult& out, int steps, const SolverConfig& cfg) {
    const auto& K = e.metric();
    detail::MetricSolver metric(K);
    const std::size_t M = out.images.size();
    const Eigen::VectorXd d = out.images.back() - out.images.front();
    const double scale = std::sqrt(std::max(1e-300, d.dot(K * d)));
    bool settled = false;
    for (int step = 0; step < steps; ++step) {
        double worst = 0.0;
        std::vector<Eigen::VectorXd> next = out.images;
        for (std::size_t i = 1; i + 1 < M; ++i) {
            Eigen::VectorXd tau = out.images[i + 1] - out.images[i - 1];
            const double tn = std::sqrt(std::max(1e-300, tau.dot(K * tau)));
            tau /= tn;
            const Eigen::VectorXd g = metric.solve(e.gradient(out.images[i]));
            const double along = g.dot(K * tau);
            const Eigen::VectorXd move = g - along * tau;
            worst = std::max(worst, std::sqrt(std::max(0.0, move.dot(K * move))));
            next[i] = out.images[i] - cfg.string_step * move;
        }
        out.images = std::move(next);
        detail::reparametrize(out.images, K);
        ++out.steps;
        if (worst <= 1e-6 * scale) {
            settled = true;
            break;
        }
    }
    for (std::size_t i = 1; i + 1 < M; ++i) out.energies[i] = e.value(out.images[i]);
    out.peak = 1;
    for (std::size_t i = 2; i + 1 < M; ++i)
        if (out.energies[i] > out.energies[out.peak]) out.peak = i;
    return settled;
}

/// Relaxes the straight segment from a to b for up to cfg.string_steps steps.
template <SmoothEnergy E>
StringResult relax_string(const E& e, const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SolverConfig& cfg) {
    StringResult out = straight_string(e, a, b, cfg);
    advance_string(e, out, cfg.string_steps, cfg);
    return out;
}

/// Saddle point between two distinct critical points. The string is relaxed in
/// blocks of 25 steps; after each block the highest image is refined by Newton's
/// method and accepted once the refinement converges at an energy above both ends.
template <SmoothEnergy E>
MinimizeResult mountain_pass_point(const E& e, const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SolverConfig& cfg) {
    cfg.validate();
    const double sep = (a - b).cwiseAbs().maxCoeff();
    if (!(sep > cfg.distinct_tol * std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()})))
        throw ArgumentError("mountain pass endpoints are not distinct");
    StringResult s = straight_string(e, a, b, cfg);
    const double floor_e = std::max(s.energies.front(), s.energies.back());
    const auto dist_to_ends = [&](const Eigen::VectorXd& x) {
        return std::min((x - a).cwiseAbs().maxCoeff(), (x - b).cwiseAbs().maxCoeff());
    };
    MinimizeResult best;
    bool have = false;
    constexpr int block = 25;
    while (s.steps < cfg.string_steps) {
        const bool settled = advance_string(e, s, std::min(block, cfg.string_steps - s.steps), cfg);
        MinimizeResult r = newton_polish(e, s.images[s.peak], cfg);
        const bool above = r.energy > floor_e + 1e-12 * (1.0 + std::abs(floor_e));
        const bool separate = dist_to_ends(r.x) > cfg.distinct_tol * std::max(1.0, r.x.cwiseAbs().maxCoeff());
        if (r.converged && above && separate) return r;
        if (!have || r.residual_norm < best.residual_norm) {
            best = std::move(r);
            have = true;
        }
        if (settled) break;
    }
    if (!have) best = newton_polish(e, s.images[s.peak], cfg);
    return best;
}

inline SolutionRecord mountain_pass(const Energy& e, const SolutionRecord& ua, const SolutionRecord& ub, const SolverConfig& cfg) {
    const Eigen::VectorXd a = e.disc().to_dofs(ua.u), b = e.disc().to_dofs(ub.u);
    const MinimizeResult r = mountain_pass_point(e, a, b, cfg);
    SolutionRecord rec = detail::make_record(e, r.x, Classification::mountain_pass);
    rec.polished = r.converged;
    return rec;
}

/// Critical points found at one (lambda, mu) and their pairwise sup-norm distances.
struct SolutionSet {
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<SolutionRecord> records;
    std::vector<std::vector<double>> distance;
    int distinct_count = 0;          // including u = 0
    int distinct_nonzero = 0;        // excluding u = 0
    double rho_observed = 0.0;       // max norm
    double min_pairwise_distance = 0.0;
    /// Index of the first record of each distinct group.
    std::vector<std::size_t> representatives;
    std::vector<std::string> failures;
    /// Best iterates of the failed searches.
    std::vector<SolutionRecord> rejected;
    std::vector<std::string> notes;
};

/// Groups records whose sup-norm distance is at most distinct_tol * (largest sup-norm).
inline void classify_distinct(SolutionSet& set, double distinct_tol) {
    const std::size_t n = set.records.size();
    set.distance.assign(n, std::vector<double>(n, 0.0));
    double scale = 0.0;
    for (const auto& r : set.records) scale = std::max(scale, sup_norm(r.u));
    const double thr = distinct_tol * std::max(scale, 1e-300);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double m = 0.0;
            for (std::size_t k = 0; k < set.records[i].u.values.size(); ++k)
                m = std::max(m, std::abs(set.records[i].u.values[k] - set.records[j].u.values[k]));
            set.distance[i][j] = m;
        }
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < n; ++i) {
        bool fresh = true;
        for (std::size_t r : reps)
            if (set.distance[i][r] <= thr) fresh = false;
        if (fresh) reps.push_back(i);
    }
    set.representatives = reps;
    set.distinct_count = static_cast<int>(reps.size());
    set.distinct_nonzero = 0;
    for (std::size_t r : reps)
        if (sup_norm(set.records[r].u) > thr) ++set.distinct_nonzero;
    set.min_pairwise_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j)
            set.min_pairwise_distance = std::min(set.min_pairwise_distance, set.distance[reps[i]][reps[j]]);
    if (reps.size() < 2) set.min_pairwise_distance = 0.0;
    set.rho_observed = 0.0;
    for (const auto& r : set.records) set.rho_observed = std::max(set.rho_observed, r.norm);
}

/// Global minimizer, sublevel minimizer and a mountain pass between them at one (lambda, mu).
/// Records that miss the residual tolerance are listed as failures, not solutions.
inline SolutionSet solve_cell(Energy& e, double lambda, double mu, const DiscreteFunction& ustar, double r,
                              const SolverConfig& cfg) {
    e.set_lambda_mu(lambda, mu);
    SolutionSet set;
    set.lambda = lambda;
    set.mu = mu;
    auto accept = [&](SolutionRecord rec) {
        if (rec.residual_norm <= cfg.tolerance) {
            set.records.push_back(std::move(rec));
        } else {
            set.failures.push_back(to_string(rec.classification) + ": residual " + fmt_double(rec.residual_norm) +
                                   " above tolerance");
            set.rejected.push_back(std::move(rec));
        }
    };
    auto reject = [&](Classification cls, const SolverFailure& f) {
        set.failures.push_back(to_string(cls) + ": " + f.what());
        if (static_cast<Eigen::Index>(f.best_iterate().size()) == e.size()) {
            const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.best_iterate().data(), e.size());
            set.rejected.push_back(detail::make_record(e, x, cls));
        }
    };
    std::optional<SolutionRecord> gmin, smin;
    try {
        gmin = minimize_energy(e, ustar, cfg);
        accept(*gmin);
    } catch (const SolverFailure& f) {
        reject(Classification::global_min_candidate, f);
    }
    try {
        smin = sublevel_minimize(e, r, cfg);
        if (smin->constraint_active) {
            set.notes.push_back("sublevel-min: constraint phi <= r is active, the point is not a critical point");
            smin.reset();
        } else {
            accept(*smin);
        }
    } catch (const SolverFailure& f) {
        reject(Classification::sublevel_min, f);
    }
    if (gmin && smin && gmin->residual_norm <= cfg.tolerance && smin->residual_norm <= cfg.tolerance) {
        double sep = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < gmin->u.values.size(); ++k) {
            sep = std::max(sep, std::abs(gmin->u.values[k] - smin->u.values[k]));
            scale = std::max({scale, std::abs(gmin->u.values[k]), std::abs(smin->u.values[k])});
        }
        if (sep > cfg.distinct_tol * std::max(scale, 1e-300)) {
            try {
                accept(mountain_pass(e, *smin, *gmin, cfg));
            } catch (const Error& f) {
                set.failures.push_back(std::string("mountain-pass: ") + f.what());
            }
        }
    }
    classify_distinct(set, cfg.distinct_tol);
    return set;
}

/// Runs solve_cell on every (lambda, mu) pair in grid order.
inline std::vector<SolutionSet> scan(Energy& e, const std::vector<double>& lambdas, const std::vector<double>& mus,
                                     const DiscreteFunction& ustar, double r, const SolverConfig& cfg) {
    std::vector<SolutionSet> out;
    for (double lam : lambdas)
        for (double mu : mus) {
            try {
                out.push_back(solve_cell(e, lam, mu, ustar, r, cfg));
            } catch (const Error& err) {
                SolutionSet s;
                s.lambda = lam;
                s.mu = mu;
                s.failures.push_back(err.what());
                out.push_back(std::move(s));
            }
        }
    return out;
}

}  // namespace wplap
