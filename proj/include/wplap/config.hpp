#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wplap/certificate.hpp"
#include "wplap/csv.hpp"
#include "wplap/oracle1d.hpp"
#include "wplap/solver.hpp"
#include "wplap/structured_text.hpp"

namespace wplap {

/// Everything a run needs, read from one structured-text file.
///
///     [problem]      p (required), s, zero_order_term
///     [domain]       kind = interval | box | ball; lower, upper; center, radius
///     [weight]       form = constant | distance_power | tabulated; value; exponent; file
///     [f], [g]       expr, primitive, growth_h, gamma, envelope
///     [certificate]  c, d, x0, r1, r2
///     [mesh]         h, grading_depth
///     [scan]         lambda_min, lambda_max, lambda_count, mu
///     [solver]       tolerance, max_iterations, backtrack, armijo, eps_reg,
///                    string_images, string_steps, string_step, distinct_tol
///     [oracle]       sigma_min, sigma_max, n_scan, ode_steps
///     [run]          seed, lambda, mu
///
/// Scalars accept constant expressions such as 1/256 or pi/4. Lists are
/// comma-separated.
struct RunConfig {
    ProblemSpec spec;
    double h = 1.0 / 256.0;
    int grading_depth = -1;
    SolverConfig solver;
    std::vector<double> lambdas;
    std::vector<double> mus{0.0};
    double lambda = 0.0;
    double mu = 0.0;
    ShootingOptions oracle;
    std::string path;

    MeshOptions mesh_options() const {
        MeshOptions m;
        m.grading_depth = std::max(grading_depth, 0);
        if (spec.domain.dim == 1) m.breakpoints = ustar_breakpoints(spec.ball);
        return m;
    }
};

namespace detail {

class ConfigReader {
public:
    ConfigReader(const StructuredText& st, std::string dir) : st_(st), dir_(std::move(dir)) {
        static const std::map<std::string, std::set<std::string>> schema = {
            {"problem", {"p", "s", "zero_order_term"}},
            {"domain", {"kind", "lower", "upper", "center", "radius"}},
            {"weight", {"form", "value", "exponent", "file"}},
            {"f", {"expr", "primitive", "growth_h", "gamma", "envelope"}},
            {"g", {"expr", "primitive", "growth_h", "gamma", "envelope"}},
            {"certificate", {"c", "d", "x0", "r1", "r2"}},
            {"mesh", {"h", "grading_depth"}},
            {"scan", {"lambda_min", "lambda_max", "lambda_count", "mu"}},
            {"solver", {"tolerance", "max_iterations", "backtrack", "armijo", "eps_reg", "string_images",
                        "string_steps", "string_step", "distinct_tol"}},
            {"oracle", {"sigma_min", "sigma_max", "n_scan", "ode_steps"}},
            {"run", {"seed", "lambda", "mu"}},
        };
        for (const auto& s : st.sections) {
            if (s.name.empty()) {
                if (!s.entries.empty())
                    throw ConfigError("key '" + s.entries.front().key + "' appears before any section",
                                      s.entries.front().line, 1);
                continue;
            }
            const auto it = schema.find(s.name);
            if (it == schema.end()) throw ConfigError("unknown section [" + s.name + "]", s.line, 2);
            for (const auto& e : s.entries)
                if (!it->second.count(e.key))
                    throw ConfigError("unknown key '" + e.key + "' in [" + s.name + "]", e.line, 1);
        }
    }

    const StructuredText::Entry* find(const std::string& sec, const std::string& key) const {
        const auto* s = st_.find(sec);
        return s ? s->find(key) : nullptr;
    }

    const StructuredText::Entry& require(const std::string& sec, const std::string& key) const {
        if (const auto* e = find(sec, key)) return *e;
        const auto* s = st_.find(sec);
        throw ConfigError("missing required key '" + key + "' in [" + sec + "]", s ? s->line : 0, 1);
    }

    static double number(const StructuredText::Entry& e) {
        try {
            const Expression ex = Expression::parse(e.value);
            if (!ex.is_constant()) throw ConfigError("'" + e.key + "' must be a constant", e.line, e.value_column);
            const double v = ex(0.0, Point{});
            if (!std::isfinite(v)) throw ConfigError("'" + e.key + "' is not finite", e.line, e.value_column);
            return v;
        } catch (const ExpressionError& err) {
            throw ConfigError(err.message() + " in '" + e.key + "'", e.line, e.value_column + err.column() - 1);
        }
    }

    static std::vector<double> numbers(const StructuredText::Entry& e) {
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= e.value.size()) {
            std::size_t comma = e.value.find(',', start);
            if (comma == std::string::npos) comma = e.value.size();
            StructuredText::Entry piece = e;
            piece.value = e.value.substr(start, comma - start);
            piece.value_column = e.value_column + static_cast<int>(start);
            const auto first = piece.value.find_first_not_of(" \t");
            if (first == std::string::npos) throw ConfigError("empty list element in '" + e.key + "'", e.line, piece.value_column);
            out.push_back(number(piece));
            start = comma + 1;
        }
        return out;
    }

    static int integer(const StructuredText::Entry& e) {
        const double v = number(e);
        if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError("'" + e.key + "' must be an integer", e.line, e.value_column);
        return static_cast<int>(v);
    }

    static bool boolean(const StructuredText::Entry& e) {
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        throw ConfigError("'" + e.key + "' must be true or false", e.line, e.value_column);
    }

    double number_or(const std::string& sec, const std::string& key, double fallback) const {
        const auto* e = find(sec, key);
        return e ? number(*e) : fallback;
    }

    int integer_or(const std::string& sec, const std::string& key, int fallback) const {
        const auto* e = find(sec, key);
        return e ? integer(*e) : fallback;
    }

    Point point(const StructuredText::Entry& e, int dim) const {
        const auto v = numbers(e);
        if (static_cast<int>(v.size()) != dim)
            throw ConfigError("'" + e.key + "' needs " + std::to_string(dim) + " coordinate(s)", e.line, e.value_column);
        Point p{};
        for (int i = 0; i < dim; ++i) p[i] = v[static_cast<std::size_t>(i)];
        return p;
    }

    Domain domain() const {
        const auto* kind = find("domain", "kind");
        const std::string k = kind ? kind->value : "interval";
        try {
            if (k == "interval") {
                const double lo = number_or("domain", "lower", 0.0), hi = number_or("domain", "upper", 1.0);
                return Domain::interval(lo, hi);
            }
            if (k == "box") {
                const auto& lo = require("domain", "lower");
                const auto& hi = require("domain", "upper");
                const auto lv = numbers(lo);
                const int dim = static_cast<int>(lv.size());
                if (dim < 1 || dim > 2) throw DimensionUnsupported("box domains are supported for N <= 2");
                return Domain::box(point(lo, dim), point(hi, dim), dim);
            }
            if (k == "ball") {
                const auto& c = require("domain", "center");
                const int dim = static_cast<int>(numbers(c).size());
                if (dim > 2) throw DimensionUnsupported("ball domains are supported for N <= 2");
                return Domain::ball(point(c, dim), number(require("domain", "radius")), dim);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const DimensionUnsupported&) {
            throw;
        } catch (const Error& err) {
            throw ConfigError(err.what(), st_.find("domain") ? st_.find("domain")->line : 0, 1);
        }
        throw ConfigError("unknown domain kind '" + k + "'", kind->line, kind->value_column);
    }

    WeightSpec weight(const Domain& dom) const {
        const auto* form = find("weight", "form");
        const std::string f = form ? form->value : "constant";
        try {
            if (f == "constant") return WeightSpec::constant(number_or("weight", "value", 1.0));
            if (f == "distance_power") return WeightSpec::distance_power(number(require("weight", "exponent")));
            if (f == "tabulated") {
                const auto& file = require("weight", "file");
                if (dom.dim != 1) throw ConfigError("tabulated weights are read for 1D domains only", file.line, file.value_column);
                std::string path = file.value;
                if (!path.empty() && path.front() != '/' && !dir_.empty()) path = dir_ + "/" + path;
                const CsvTable t = read_csv(path);
                const std::size_t cx = t.column("x1"), ca = t.column("a");
                std::vector<std::pair<double, double>> rows;
                for (std::size_t r = 0; r < t.rows.size(); ++r) rows.emplace_back(t.number(r, cx), t.number(r, ca));
                std::sort(rows.begin(), rows.end());
                Mesh m;
                m.dim = 1;
                std::vector<double> vals;
                for (const auto& [x, a] : rows) {
                    m.vertices.push_back({x, 0.0});
                    vals.push_back(a);
                }
                for (std::size_t i = 0; i + 1 < rows.size(); ++i) m.cells.push_back({i, i + 1, 0});
                m.on_boundary.assign(rows.size(), 0);
                if (!rows.empty()) m.on_boundary.front() = m.on_boundary.back() = 1;
                m.update_size();
                return WeightSpec::tabulated(std::make_shared<const Mesh>(std::move(m)), std::move(vals));
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& err) {
            throw ConfigError(err.what(), st_.find("weight") ? st_.find("weight")->line : 0, 1);
        }
        throw ConfigError("unknown weight form '" + f + "'", form->line, form->value_column);
    }

    Nonlinearity nonlinearity(const std::string& sec, const Domain& dom, bool required) const {
        if (!st_.find(sec)) {
            if (required) throw ConfigError("missing section [" + sec + "]");
            return Nonlinearity::zero();
        }
        const auto expr = [&](const StructuredText::Entry& e) {
            try {
                return Expression::parse(e.value);
            } catch (const ExpressionError& err) {
                throw ConfigError(err.message() + " in [" + sec + "] " + e.key, e.line, e.value_column + err.column() - 1);
            }
        };
        Nonlinearity n;
        n.f = expr(require(sec, "expr"));
        n.df = n.f.derivative_t();
        const auto* prim = find(sec, "primitive");
        if (prim) n.primitive = expr(*prim);
        if (const auto* e = find(sec, "growth_h")) n.growth_h = expr(*e);
        if (const auto* e = find(sec, "envelope")) n.envelope = expr(*e);
        n.gamma = number_or(sec, "gamma", 0.0);
        if (prim) {
            const PrimitiveCheck pc = verify_primitive(n, dom);
            if (!pc.passed)
                throw ConfigError("primitive in [" + sec + "] does not match expr (relative error " +
                                      fmt_double(pc.max_relative_error) + ", |F(x,0)| up to " +
                                      fmt_double(pc.max_value_at_zero) + ")",
                                  prim->line, prim->value_column);
        }
        return n;
    }

private:
    const StructuredText& st_;
    std::string dir_;
};

}  // namespace detail

/// Parses and validates a run configuration. Every problem is reported as a
/// ConfigError carrying the line and column of the offending entry.
inline RunConfig parse_run_config(const StructuredText& st, const std::string& dir = "") {
    detail::ConfigReader rd(st, dir);
    RunConfig cfg;
    ProblemSpec& sp = cfg.spec;
    if (!st.find("problem")) throw ConfigError("missing section [problem]");
    const auto& p_entry = rd.require("problem", "p");
    sp.p = detail::ConfigReader::number(p_entry);
    if (!(sp.p > 1.0)) throw ConfigError("p must exceed 1", p_entry.line, p_entry.value_column);
    sp.domain = rd.domain();
    const int N = sp.domain.dim;
    if (!(sp.p > N)) throw ConfigError("p must exceed the dimension N", p_entry.line, p_entry.value_column);
    sp.s = rd.number_or("problem", "s", suggest_s(sp.p, N));
    if (const auto* e = rd.find("problem", "zero_order_term")) sp.zero_order_term = detail::ConfigReader::boolean(*e);
    sp.weight = rd.weight(sp.domain);
    sp.f = rd.nonlinearity("f", sp.domain, true);
    sp.g = rd.nonlinearity("g", sp.domain, false);

    if (!st.find("certificate")) throw ConfigError("missing section [certificate]");
    sp.c = detail::ConfigReader::number(rd.require("certificate", "c"));
    sp.d = detail::ConfigReader::number(rd.require("certificate", "d"));
    sp.ball.center = rd.point(rd.require("certificate", "x0"), N);
    sp.ball.r1 = detail::ConfigReader::number(rd.require("certificate", "r1"));
    sp.ball.r2 = detail::ConfigReader::number(rd.require("certificate", "r2"));
    try {
        sp.validate();
    } catch (const Error& err) {
        const auto* s = st.find("certificate");
        throw ConfigError(err.what(), s ? s->line : 0, 1);
    }

    cfg.h = rd.number_or("mesh", "h", cfg.h);
    if (!(cfg.h > 0.0)) throw ConfigError("mesh h must be positive", rd.find("mesh", "h")->line, rd.find("mesh", "h")->value_column);
    cfg.grading_depth = rd.integer_or("mesh", "grading_depth", cfg.grading_depth);

    SolverConfig& sc = cfg.solver;
    sc.tolerance = rd.number_or("solver", "tolerance", sc.tolerance);
    sc.max_iterations = rd.integer_or("solver", "max_iterations", sc.max_iterations);
    sc.backtrack = rd.number_or("solver", "backtrack", sc.backtrack);
    sc.armijo = rd.number_or("solver", "armijo", sc.armijo);
    sc.eps_reg = rd.number_or("solver", "eps_reg", sc.eps_reg);
    sc.string_images = rd.integer_or("solver", "string_images", sc.string_images);
    sc.string_steps = rd.integer_or("solver", "string_steps", sc.string_steps);
    sc.string_step = rd.number_or("solver", "string_step", sc.string_step);
    sc.distinct_tol = rd.number_or("solver", "distinct_tol", sc.distinct_tol);
    sc.seed = static_cast<unsigned>(rd.integer_or("run", "seed", static_cast<int>(sc.seed)));
    try {
        sc.validate();
    } catch (const ArgumentError& err) {
        const auto* s = st.find("solver");
        throw ConfigError(err.what(), s ? s->line : 0, 1);
    }

    if (st.find("scan")) {
        const double lo = detail::ConfigReader::number(rd.require("scan", "lambda_min"));
        const double hi = detail::ConfigReader::number(rd.require("scan", "lambda_max"));
        const auto& ce = rd.require("scan", "lambda_count");
        const int count = detail::ConfigReader::integer(ce);
        if (count < 1) throw ConfigError("the lambda grid is empty", ce.line, ce.value_column);
        if (hi < lo) throw ConfigError("lambda_max is below lambda_min", ce.line, 1);
        for (int i = 0; i < count; ++i)
            cfg.lambdas.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        if (const auto* e = rd.find("scan", "mu")) cfg.mus = detail::ConfigReader::numbers(*e);
    }
    cfg.lambda = rd.number_or("run", "lambda", cfg.lambdas.empty() ? 0.0 : cfg.lambdas.front());
    cfg.mu = rd.number_or("run", "mu", cfg.mus.front());

    ShootingOptions& so = cfg.oracle;
    so.sigma_min = rd.number_or("oracle", "sigma_min", so.sigma_min);
    so.sigma_max = rd.number_or("oracle", "sigma_max", so.sigma_max);
    so.n_scan = rd.integer_or("oracle", "n_scan", so.n_scan);
    so.ode_steps = rd.integer_or("oracle", "ode_steps", so.ode_steps);
    if (!(so.sigma_min < so.sigma_max) || so.n_scan < 2 || so.ode_steps < 4) {
        const auto* s = st.find("oracle");
        throw ConfigError("oracle needs sigma_min < sigma_max, n_scan >= 2 and ode_steps >= 4", s ? s->line : 0, 1);
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    const StructuredText st = StructuredText::read(path);
    const auto slash = path.find_last_of('/');
    RunConfig cfg = parse_run_config(st, slash == std::string::npos ? "" : path.substr(0, slash));
    cfg.path = path;
    return cfg;
}

}  // namespace wplap
