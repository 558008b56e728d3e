#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "wplap/discretization.hpp"
#include "wplap/error.hpp"
#include "wplap/nonlinearity.hpp"
#include "wplap/space.hpp"

namespace wplap {

struct EnergyParams {
    double p = 2.0;
    double lambda = 0.0;
    double mu = 0.0;
    bool zero_order_term = true;
    /// Smoothing of |v|^{p-2} v at v = 0, used only for p < 2.
    double eps_reg = 1e-8;
};

struct EnergyParts {
    double phi = 0.0;
    double Phi = 0.0;
    double Upsilon = 0.0;
};

/// Value, residual and Hessian data of a P1 function at a given (lambda, mu).
struct EnergyState {
    DiscreteFunction u;
    double phi_val = 0.0;
    double Phi_val = 0.0;
    double Upsilon_val = 0.0;
    double total = 0.0;
    std::vector<double> residual;
    double residual_norm = 0.0;
};

/// The functional E = phi + lambda Phi + mu Upsilon on the interior nodal values,
/// with phi(u) = (1/p) ||u||^p, Phi(u) = -int F(x, u), Upsilon(u) = -int G(x, u).
/// Its gradient is the weak residual tested against the nodal basis functions.
class Energy {
public:
    using Vector = Eigen::VectorXd;
    using Matrix = Eigen::SparseMatrix<double>;

    Energy(std::shared_ptr<const Discretization> disc, Nonlinearity f, Nonlinearity g, EnergyParams params)
        : disc_(std::move(disc)), f_(std::move(f)), g_(std::move(g)), par_(params) {
        if (!(par_.p > 1.0)) throw ArgumentError("p must exceed 1");
        if (!(par_.eps_reg > 0.0)) throw ArgumentError("regularization epsilon must be positive");
        build_metric();
    }

    const Discretization& disc() const { return *disc_; }
    const std::shared_ptr<const Discretization>& disc_ptr() const { return disc_; }
    const EnergyParams& params() const { return par_; }
    const Nonlinearity& f() const { return f_; }
    const Nonlinearity& g() const { return g_; }
    double p() const { return par_.p; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(disc_->num_dofs()); }

    void set_lambda_mu(double lambda, double mu) {
        par_.lambda = lambda;
        par_.mu = mu;
    }

    EnergyParts parts(const Vector& U) const {
        const auto nodal = to_nodal(U);
        const Discretization& d = *disc_;
        EnergyParts e;
        const double p = par_.p;
        for (std::size_t c = 0; c < d.cells().size(); ++c) {
            const CellData& cd = d.cells()[c];
            const Point gr = d.cell_gradient(nodal, c);
            double phi = cd.weight_mass * power_energy(norm(gr, d.dim()));
            for (std::size_t q = cd.q_begin; q < cd.q_end; ++q) {
                const double uq = d.value_at_qp(nodal, c, q);
                const double w = d.qp_w()[q];
                if (par_.zero_order_term) phi += w * power_energy(std::abs(uq));
                if (!f_.is_zero()) e.Phi -= w * f_.F(d.qp_x()[q], uq);
                if (!g_.is_zero()) e.Upsilon -= w * g_.F(d.qp_x()[q], uq);
            }
            if (!std::isfinite(phi)) throw QuadratureFailure("non-finite energy contribution", c);
            e.phi += phi / p;
        }
        return e;
    }

    double value(const Vector& U) const {
        const EnergyParts e = parts(U);
        return e.phi + par_.lambda * e.Phi + par_.mu * e.Upsilon;
    }

    /// d/dU of phi alone.
    Vector phi_gradient(const Vector& U) const { return assemble_gradient(U, false); }

    /// d/dU of the total energy: the weak residual.
    Vector gradient(const Vector& U) const { return assemble_gradient(U, true); }

    Matrix hessian(const Vector& U) const {
        const auto nodal = to_nodal(U);
        const Discretization& d = *disc_;
        const double p = par_.p;
        std::vector<Eigen::Triplet<double>> trip;
        const std::size_t nv = d.mesh().vertices_per_cell();
        for (std::size_t c = 0; c < d.cells().size(); ++c) {
            const CellData& cd = d.cells()[c];
            const Point gr = d.cell_gradient(nodal, c);
            const double gn = norm(gr, d.dim());
            double rho, rho2;  // coefficients of grad phi_i . grad phi_j and (g . grad phi_i)(g . grad phi_j)
            if (p < 2.0) {
                const double s = gn * gn + par_.eps_reg * par_.eps_reg;
                rho = std::pow(s, 0.5 * (p - 2.0));
                rho2 = (p - 2.0) * std::pow(s, 0.5 * (p - 4.0));
            } else if (gn > 0.0) {
                rho = std::pow(gn, p - 2.0);
                rho2 = (p - 2.0) * std::pow(gn, p - 4.0);
            } else {
                rho = p == 2.0 ? 1.0 : 0.0;
                rho2 = 0.0;
            }
            for (std::size_t i = 0; i < nv; ++i) {
                const auto di = d.dof_of_vertex(cd.v[i]);
                if (di < 0) continue;
                for (std::size_t j = 0; j < nv; ++j) {
                    const auto dj = d.dof_of_vertex(cd.v[j]);
                    if (dj < 0) continue;
                    double gij = 0.0, gi = 0.0, gj = 0.0;
                    for (int k = 0; k < d.dim(); ++k) {
                        gij += cd.grad[i][k] * cd.grad[j][k];
                        gi += gr[k] * cd.grad[i][k];
                        gj += gr[k] * cd.grad[j][k];
                    }
                    double v = cd.weight_mass * (rho * gij + rho2 * gi * gj);
                    for (std::size_t q = cd.q_begin; q < cd.q_end; ++q) {
                        const double uq = d.value_at_qp(nodal, c, q);
                        const Point& x = d.qp_x()[q];
                        double coef = 0.0;
                        if (par_.zero_order_term) coef += power_second(uq);
                        coef -= par_.lambda * f_.derivative(x, uq) + par_.mu * g_.derivative(x, uq);
                        v += d.qp_w()[q] * coef * d.qp_phi()[q][i] * d.qp_phi()[q][j];
                    }
                    trip.emplace_back(di, dj, v);
                }
            }
        }
        Matrix H(size(), size());
        H.setFromTriplets(trip.begin(), trip.end());
        return H;
    }

    /// Stiffness plus mass matrix of the p = 2 problem with the same weight:
    /// the inner product used for preconditioned gradients.
    const Matrix& metric() const { return metric_; }

    /// Euclidean norm of the residual scaled by h^{N/2}.
    double residual_norm(const Vector& R) const { return R.norm() * std::pow(disc_->h(), 0.5 * disc_->dim()); }

    EnergyState state(const Vector& U) const {
        EnergyState s;
        s.u = disc_->from_dofs(U);
        const EnergyParts e = parts(U);
        s.phi_val = e.phi;
        s.Phi_val = e.Phi;
        s.Upsilon_val = e.Upsilon;
        s.total = e.phi + par_.lambda * e.Phi + par_.mu * e.Upsilon;
        const Vector R = gradient(U);
        s.residual.assign(R.data(), R.data() + R.size());
        s.residual_norm = residual_norm(R);
        return s;
    }

    std::vector<double> to_nodal(const Vector& U) const {
        if (U.size() != size()) throw ArgumentError("dof vector has the wrong length");
        std::vector<double> nodal(disc_->mesh().num_vertices(), 0.0);
        for (std::size_t i = 0; i < disc_->num_dofs(); ++i) nodal[disc_->vertex_of_dof(i)] = U[static_cast<Eigen::Index>(i)];
        return nodal;
    }

private:
    /// psi with psi'(r) = r^{p-1}: r^p, or its smoothed form for p < 2.
    double power_energy(double r) const {
        const double p = par_.p;
        if (p >= 2.0) return std::pow(r, p);
        const double e2 = par_.eps_reg * par_.eps_reg;
        return std::pow(r * r + e2, 0.5 * p) - std::pow(e2, 0.5 * p);
    }

    /// rho(r) with d/dv psi(|v|) = p rho(|v|) v.
    double power_rho(double r) const {
        const double p = par_.p;
        if (p >= 2.0) return r == 0.0 ? (p == 2.0 ? 1.0 : 0.0) : std::pow(r, p - 2.0);
        return std::pow(r * r + par_.eps_reg * par_.eps_reg, 0.5 * (p - 2.0));
    }

    /// d/du (rho(|u|) u).
    double power_second(double u) const {
        const double p = par_.p;
        if (p >= 2.0) return u == 0.0 ? (p == 2.0 ? 1.0 : 0.0) : (p - 1.0) * std::pow(std::abs(u), p - 2.0);
        const double s = u * u + par_.eps_reg * par_.eps_reg;
        return std::pow(s, 0.5 * (p - 2.0)) + (p - 2.0) * u * u * std::pow(s, 0.5 * (p - 4.0));
    }

    Vector assemble_gradient(const Vector& U, bool with_rhs) const {
        const auto nodal = to_nodal(U);
        const Discretization& d = *disc_;
        Vector R = Vector::Zero(size());
        const std::size_t nv = d.mesh().vertices_per_cell();
        for (std::size_t c = 0; c < d.cells().size(); ++c) {
            const CellData& cd = d.cells()[c];
            const Point gr = d.cell_gradient(nodal, c);
            const double rho = power_rho(norm(gr, d.dim()));
            std::array<double, 3> loc{};
            for (std::size_t i = 0; i < nv; ++i) {
                double gi = 0.0;
                for (int k = 0; k < d.dim(); ++k) gi += gr[k] * cd.grad[i][k];
                loc[i] = cd.weight_mass * rho * gi;
            }
            for (std::size_t q = cd.q_begin; q < cd.q_end; ++q) {
                const double uq = d.value_at_qp(nodal, c, q);
                const Point& x = d.qp_x()[q];
                double coef = 0.0;
                if (par_.zero_order_term) coef += power_rho(std::abs(uq)) * uq;
                if (with_rhs) coef -= par_.lambda * f_.value(x, uq) + par_.mu * g_.value(x, uq);
                for (std::size_t i = 0; i < nv; ++i) loc[i] += d.qp_w()[q] * coef * d.qp_phi()[q][i];
            }
            for (std::size_t i = 0; i < nv; ++i) {
                const auto di = d.dof_of_vertex(cd.v[i]);
                if (di >= 0) R[di] += loc[i];
            }
            for (std::size_t i = 0; i < nv; ++i)
                if (!std::isfinite(loc[i])) throw QuadratureFailure("non-finite residual contribution", c);
        }
        return R;
    }

    void build_metric() {
        const Discretization& d = *disc_;
        std::vector<Eigen::Triplet<double>> trip;
        const std::size_t nv = d.mesh().vertices_per_cell();
        for (std::size_t c = 0; c < d.cells().size(); ++c) {
            const CellData& cd = d.cells()[c];
            for (std::size_t i = 0; i < nv; ++i) {
                const auto di = d.dof_of_vertex(cd.v[i]);
                if (di < 0) continue;
                for (std::size_t j = 0; j < nv; ++j) {
                    const auto dj = d.dof_of_vertex(cd.v[j]);
                    if (dj < 0) continue;
                    double v = 0.0;
                    for (int k = 0; k < d.dim(); ++k) v += cd.grad[i][k] * cd.grad[j][k];
                    v *= cd.weight_mass;
                    for (std::size_t q = cd.q_begin; q < cd.q_end; ++q)
                        v += d.qp_w()[q] * d.qp_phi()[q][i] * d.qp_phi()[q][j];
                    trip.emplace_back(di, dj, v);
                }
            }
        }
        metric_.resize(size(), size());
        metric_.setFromTriplets(trip.begin(), trip.end());
    }

    std::shared_ptr<const Discretization> disc_;
    Nonlinearity f_;
    Nonlinearity g_;
    EnergyParams par_;
    Matrix metric_;
};

/// (1/p) (int a |grad u|^p + int |u|^p), or (1/p) int a |grad u|^p without the zero-order term.
inline double phi(const Discretization& disc, const DiscreteFunction& u, double p, bool zero_order_term = true) {
    const NormReport r = weighted_norm(disc, u, p);
    return (r.grad_part + (zero_order_term ? r.lp_part : 0.0)) / p;
}

/// -int F(x, u).
inline double capital_Phi(const Discretization& disc, const DiscreteFunction& u, const Nonlinearity& nl) {
    disc.check_mesh(u);
    double s = 0.0;
    for (std::size_t c = 0; c < disc.cells().size(); ++c) {
        const CellData& cd = disc.cells()[c];
        for (std::size_t q = cd.q_begin; q < cd.q_end; ++q)
            s -= disc.qp_w()[q] * nl.F(disc.qp_x()[q], disc.value_at_qp(u.values, c, q));
    }
    return s;
}

inline double capital_Upsilon(const Discretization& disc, const DiscreteFunction& u, const Nonlinearity& nl) {
    return capital_Phi(disc, u, nl);
}

/// Weak residual of u, one entry per interior node.
inline Eigen::VectorXd weak_residual(const Energy& E, const DiscreteFunction& u) {
    return E.gradient(E.disc().to_dofs(u));
}

/// Largest |R_i - central difference of E along e_i| / (1 + |R_i|) over interior nodes.
/// For p < 2, nodes next to a cell with |grad u| < 1e-8 are skipped.
inline double gradient_check(const Energy& E, const Eigen::VectorXd& U) {
    const Eigen::VectorXd R = E.gradient(U);
    const auto nodal = E.to_nodal(U);
    const Discretization& d = E.disc();
    std::vector<char> skip(d.num_dofs(), 0);
    if (E.p() < 2.0)
        for (std::size_t c = 0; c < d.cells().size(); ++c)
            if (norm(d.cell_gradient(nodal, c), d.dim()) < 1e-8)
                for (std::size_t i = 0; i < d.mesh().vertices_per_cell(); ++i) {
                    const auto di = d.dof_of_vertex(d.cells()[c].v[i]);
                    if (di >= 0) skip[static_cast<std::size_t>(di)] = 1;
                }
    const double eps = 1e-6 * (1.0 + U.cwiseAbs().maxCoeff());
    double worst = 0.0;
    Eigen::VectorXd V = U;
    for (Eigen::Index i = 0; i < U.size(); ++i) {
        if (skip[static_cast<std::size_t>(i)]) continue;
        V[i] = U[i] + eps;
        const double ep = E.value(V);
        V[i] = U[i] - eps;
        const double em = E.value(V);
        V[i] = U[i];
        const double fd = (ep - em) / (2.0 * eps);
        worst = std::max(worst, std::abs(R[i] - fd) / (1.0 + std::abs(R[i])));
    }
    return worst;
}

}  // namespace wplap
