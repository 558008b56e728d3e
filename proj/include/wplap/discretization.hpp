#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "wplap/error.hpp"
#include "wplap/geometry.hpp"
#include "wplap/quadrature.hpp"
#include "wplap/weight.hpp"

namespace wplap {

/// Piecewise-linear function on a mesh, stored by nodal values.
struct DiscreteFunction {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> values;
    bool boundary_zero = true;

    static DiscreteFunction zero(std::shared_ptr<const Mesh> m) {
        DiscreteFunction u;
        u.values.assign(m->num_vertices(), 0.0);
        u.mesh = std::move(m);
        return u;
    }

    /// Nodal interpolant of fn. Boundary nodes are set to 0 when boundary_zero is requested.
    static DiscreteFunction interpolate(std::shared_ptr<const Mesh> m, const std::function<double(const Point&)>& fn,
                                        bool boundary_zero = true) {
        DiscreteFunction u;
        u.boundary_zero = boundary_zero;
        u.values.resize(m->num_vertices());
        for (std::size_t i = 0; i < m->num_vertices(); ++i)
            u.values[i] = boundary_zero && m->on_boundary[i] ? 0.0 : fn(m->vertices[i]);
        u.mesh = std::move(m);
        return u;
    }

    DiscreteFunction scaled(double c) const {
        DiscreteFunction v = *this;
        for (double& x : v.values) x *= c;
        return v;
    }

    /// Throws unless the stored data satisfies the type invariants.
    void validate() const {
        if (!mesh) throw ArgumentError("discrete function has no mesh");
        if (values.size() != mesh->num_vertices()) throw ArgumentError("value count differs from vertex count");
        if (boundary_zero)
            for (std::size_t i = 0; i < values.size(); ++i)
                if (mesh->on_boundary[i] && values[i] != 0.0)
                    throw ArgumentError("boundary-zero function has a nonzero boundary value");
    }
};

struct DiscretizationOptions {
    int quadrature_order = 5;
    /// Refinement levels toward the boundary when integrating a singular weight (-1: 40 in 1D, 6 in 2D).
    int singular_depth = -1;
};

/// Per-cell data of the P1 space.
struct CellData {
    std::array<std::size_t, 3> v{};
    std::array<Point, 3> grad{};  // gradients of the local basis functions
    double measure = 0.0;
    double weight_mass = 0.0;     // int_K a
    std::size_t q_begin = 0;
    std::size_t q_end = 0;
};

namespace detail {

/// int_x0^x1 (x - a)^{-l} dx for a <= x0 <= x1.
inline double power_antiderivative_span(double x0, double x1, double a, double l) {
    if (l == 1.0) return std::log((x1 - a) / (x0 - a));
    return (std::pow(x1 - a, 1.0 - l) - std::pow(x0 - a, 1.0 - l)) / (1.0 - l);
}

/// Exact int_{x0}^{x1} dist(x, {lo, hi})^{-l} dx.
inline double interval_distance_power_mass(double x0, double x1, double lo, double hi, double l) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    if (x0 < mid) s += power_antiderivative_span(x0, std::min(x1, mid), lo, l);
    if (x1 > mid) {
        // Reflect onto the left half.
        const double a = std::max(x0, mid), b = x1;
        s += power_antiderivative_span(lo + hi - b, lo + hi - a, lo, l);
    }
    return s;
}

}  // namespace detail

/// P1 finite element space on a mesh with homogeneous Dirichlet conditions:
/// degrees of freedom are the interior vertices.
class Discretization {
public:
    Discretization(Domain domain, std::shared_ptr<const Mesh> mesh, WeightSpec weight,
                   const DiscretizationOptions& opt = {})
        : domain_(std::move(domain)), mesh_(std::move(mesh)), weight_(std::move(weight)), opt_(opt) {
        if (!mesh_) throw ArgumentError("discretization needs a mesh");
        if (mesh_->dim != domain_.dim) throw ArgumentError("mesh and domain dimensions differ");
        build_dofs();
        build_cells();
    }

    const Domain& domain() const { return domain_; }
    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    const WeightSpec& weight() const { return weight_; }
    int dim() const { return mesh_->dim; }
    double h() const { return mesh_->h; }

    std::size_t num_dofs() const { return vertex_of_dof_.size(); }
    /// -1 for boundary vertices.
    std::ptrdiff_t dof_of_vertex(std::size_t v) const { return dof_of_vertex_[v]; }
    std::size_t vertex_of_dof(std::size_t i) const { return vertex_of_dof_[i]; }

    const std::vector<CellData>& cells() const { return cells_; }
    const std::vector<Point>& qp_x() const { return qx_; }
    const std::vector<double>& qp_w() const { return qw_; }
    /// Values of the three local basis functions at each quadrature point.
    const std::vector<std::array<double, 3>>& qp_phi() const { return qphi_; }

    Eigen::VectorXd to_dofs(const DiscreteFunction& u) const {
        check_mesh(u);
        Eigen::VectorXd x(static_cast<Eigen::Index>(num_dofs()));
        for (std::size_t i = 0; i < num_dofs(); ++i) x[static_cast<Eigen::Index>(i)] = u.values[vertex_of_dof_[i]];
        return x;
    }

    DiscreteFunction from_dofs(const Eigen::VectorXd& x) const {
        if (static_cast<std::size_t>(x.size()) != num_dofs()) throw ArgumentError("dof vector has the wrong length");
        DiscreteFunction u = DiscreteFunction::zero(mesh_);
        for (std::size_t i = 0; i < num_dofs(); ++i) u.values[vertex_of_dof_[i]] = x[static_cast<Eigen::Index>(i)];
        return u;
    }

    /// Nodal values of u on the vertices of cell c.
    std::array<double, 3> local(const std::vector<double>& nodal, std::size_t c) const {
        std::array<double, 3> out{};
        for (std::size_t i = 0; i < mesh_->vertices_per_cell(); ++i) out[i] = nodal[cells_[c].v[i]];
        return out;
    }

    Point cell_gradient(const std::vector<double>& nodal, std::size_t c) const {
        Point g{};
        const auto& cd = cells_[c];
        for (std::size_t i = 0; i < mesh_->vertices_per_cell(); ++i)
            for (int k = 0; k < dim(); ++k) g[k] += nodal[cd.v[i]] * cd.grad[i][k];
        return g;
    }

    double value_at_qp(const std::vector<double>& nodal, std::size_t c, std::size_t q) const {
        const auto& cd = cells_[c];
        double s = 0.0;
        for (std::size_t i = 0; i < mesh_->vertices_per_cell(); ++i) s += nodal[cd.v[i]] * qphi_[q][i];
        return s;
    }

    void check_mesh(const DiscreteFunction& u) const {
        if (u.mesh.get() != mesh_.get() && (u.mesh->num_vertices() != mesh_->num_vertices()))
            throw ArgumentError("function lives on a different mesh");
        if (u.values.size() != mesh_->num_vertices()) throw ArgumentError("value count differs from vertex count");
    }

private:
    void build_dofs() {
        dof_of_vertex_.assign(mesh_->num_vertices(), -1);
        for (std::size_t v = 0; v < mesh_->num_vertices(); ++v)
            if (!mesh_->on_boundary[v]) {
                dof_of_vertex_[v] = static_cast<std::ptrdiff_t>(vertex_of_dof_.size());
                vertex_of_dof_.push_back(v);
            }
    }

    void build_cells() {
        const Mesh& m = *mesh_;
        const int depth = opt_.singular_depth >= 0 ? opt_.singular_depth : (m.dim == 1 ? 40 : 6);
        cells_.resize(m.num_cells());
        SimplexPoints pts;
        for (std::size_t c = 0; c < m.num_cells(); ++c) {
            CellData& cd = cells_[c];
            cd.v = m.cells[c];
            cd.measure = m.cell_measure(c);
            std::array<Point, 3> verts{};
            for (std::size_t i = 0; i < m.vertices_per_cell(); ++i) verts[i] = m.vertices[cd.v[i]];
            if (m.dim == 1) {
                const double len = verts[1][0] - verts[0][0];
                cd.grad[0] = {-1.0 / len, 0.0};
                cd.grad[1] = {1.0 / len, 0.0};
            } else {
                const Point& a = verts[0];
                const Point& b = verts[1];
                const Point& e = verts[2];
                const double det = (b[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (b[1] - a[1]);
                cd.grad[1] = {(e[1] - a[1]) / det, -(e[0] - a[0]) / det};
                cd.grad[2] = {-(b[1] - a[1]) / det, (b[0] - a[0]) / det};
                cd.grad[0] = {-cd.grad[1][0] - cd.grad[2][0], -cd.grad[1][1] - cd.grad[2][1]};
            }

            // Zero-order and nonlinear terms.
            pts.x.clear();
            pts.w.clear();
            append_simplex_rule(m.dim, verts, opt_.quadrature_order, pts);
            cd.q_begin = qx_.size();
            for (std::size_t q = 0; q < pts.x.size(); ++q) {
                qx_.push_back(pts.x[q]);
                qw_.push_back(pts.w[q]);
                qphi_.push_back(barycentric(verts, pts.x[q]));
            }
            cd.q_end = qx_.size();

            cd.weight_mass = weight_mass(c, verts, depth);
            if (!std::isfinite(cd.weight_mass)) throw QuadratureFailure("non-finite weight integral", c);
        }
    }

    double weight_mass(std::size_t c, const std::array<Point, 3>& verts, int depth) const {
        const Mesh& m = *mesh_;
        if (weight_.form == WeightForm::constant) return weight_.value * cells_[c].measure;
        if (weight_.form == WeightForm::distance_power && m.dim == 1) {
            if (weight_.exponent == 0.0) return cells_[c].measure;
            auto [lo, hi] = domain_.bounds();
            return detail::interval_distance_power_mass(verts[0][0], verts[1][0], lo[0], hi[0], weight_.exponent);
        }
        std::array<bool, 3> sing{};
        if (weight_.singular_at_boundary())
            for (std::size_t i = 0; i < m.vertices_per_cell(); ++i) sing[i] = m.on_boundary[cells_[c].v[i]] != 0;
        SimplexPoints pts;
        append_graded_simplex_rule(m.dim, verts, sing, opt_.quadrature_order, depth, pts);
        double s = 0.0;
        for (std::size_t q = 0; q < pts.x.size(); ++q) s += pts.w[q] * eval_weight(weight_, domain_, pts.x[q]);
        return s;
    }

    std::array<double, 3> barycentric(const std::array<Point, 3>& verts, const Point& x) const {
        if (mesh_->dim == 1) {
            const double t = (x[0] - verts[0][0]) / (verts[1][0] - verts[0][0]);
            return {1.0 - t, t, 0.0};
        }
        const Point& a = verts[0];
        const Point& b = verts[1];
        const Point& e = verts[2];
        const double det = (b[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (b[1] - a[1]);
        const double s = ((x[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (x[1] - a[1])) / det;
        const double t = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        return {1.0 - s - t, s, t};
    }

    Domain domain_;
    std::shared_ptr<const Mesh> mesh_;
    WeightSpec weight_;
    DiscretizationOptions opt_;
    std::vector<std::ptrdiff_t> dof_of_vertex_;
    std::vector<std::size_t> vertex_of_dof_;
    std::vector<CellData> cells_;
    std::vector<Point> qx_;
    std::vector<double> qw_;
    std::vector<std::array<double, 3>> qphi_;
};

}  // namespace wplap
