#pragma once

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "wplap/config.hpp"

namespace wplap {

namespace exit_codes {
inline constexpr int pass = 0;
inline constexpr int certificate_fail = 2;
inline constexpr int inconclusive = 3;
inline constexpr int solver_failure = 4;
inline constexpr int config_error = 64;
inline constexpr int unsupported = 65;
}  // namespace exit_codes

struct CommandOptions {
    std::string out = ".";
    std::optional<double> lambda;
    std::optional<double> mu;
    std::optional<unsigned> seed;
    std::ostream* log = &std::cerr;
};

/// Mesh, discretization, embedding estimate and certificate shared by all subcommands.
struct RunContext {
    RunConfig cfg;
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const Discretization> disc;
    EmbeddingEstimate k;
    CertificateReport certificate;
    DiscreteFunction ustar;
};

inline RunContext prepare_run(RunConfig cfg, const CommandOptions& opt) {
    if (opt.seed) cfg.solver.seed = *opt.seed;
    if (opt.lambda) cfg.lambda = *opt.lambda;
    if (opt.mu) cfg.mu = *opt.mu;
    RunContext ctx;
    const ProblemSpec& sp = cfg.spec;
    ctx.mesh = std::make_shared<const Mesh>(build_mesh(sp.domain, cfg.h, cfg.mesh_options()));
    ctx.disc = std::make_shared<const Discretization>(sp.domain, ctx.mesh, sp.weight);
    ctx.k = estimate_k(*ctx.disc, sp.p, sp.s, sp.zero_order_term);
    ctx.certificate = certify(sp, *ctx.disc, ctx.k);
    ctx.ustar = build_ustar(sp.d, sp.ball, ctx.mesh);
    ctx.cfg = std::move(cfg);
    return ctx;
}

namespace detail {

inline std::filesystem::path out_dir(const CommandOptions& opt) {
    std::filesystem::path dir(opt.out);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Energy make_energy(const RunContext& ctx, double lambda, double mu) {
    EnergyParams par;
    par.p = ctx.cfg.spec.p;
    par.lambda = lambda;
    par.mu = mu;
    par.zero_order_term = ctx.cfg.spec.zero_order_term;
    par.eps_reg = ctx.cfg.solver.eps_reg;
    return Energy(ctx.disc, ctx.cfg.spec.f, ctx.cfg.spec.g, par);
}

inline void record_section(StructuredText& st, const std::string& name, const SolutionRecord& r) {
    st.set(name, "classification", to_string(r.classification));
    st.set(name, "lambda", fmt_double(r.lambda));
    st.set(name, "mu", fmt_double(r.mu));
    st.set(name, "energy", fmt_double(r.energy));
    st.set(name, "residual_norm", fmt_double(r.residual_norm));
    st.set(name, "norm", fmt_double(r.norm));
    st.set(name, "sup_norm", fmt_double(sup_norm(r.u)));
    if (r.classification == Classification::sublevel_min)
        st.set(name, "constraint_active", r.constraint_active ? "true" : "false");
    if (r.classification == Classification::mountain_pass) st.set(name, "polished", r.polished ? "true" : "false");
    if (!r.seed_label.empty()) st.set(name, "seed", r.seed_label);
}

inline void certificate_summary(StructuredText& st, const CertificateReport& rep) {
    st.set("certificate", "overall", to_string(rep.overall));
    std::string names;
    for (const auto& n : rep.failing()) names += (names.empty() ? "" : ", ") + n;
    st.set("certificate", "failing", names.empty() ? "none" : names);
    st.set("certificate", "k", fmt_double(rep.constants.k));
    st.set("certificate", "r", fmt_double(rep.constants.r));
    for (const auto& e : rep.entries)
        if (e.heuristic) st.set("certificate", e.name, to_string(e.verdict));
}

}  // namespace detail

/// certificate.txt and constants.csv; exit 0 pass, 2 fail, 3 inconclusive.
inline int cmd_check(const RunConfig& cfg, const CommandOptions& opt) {
    const RunContext ctx = prepare_run(cfg, opt);
    const auto dir = detail::out_dir(opt);
    report_text(ctx.certificate).write((dir / "certificate.txt").string());
    write_csv((dir / "constants.csv").string(), constants_table(ctx.certificate));
    const auto failing = ctx.certificate.failing();
    *opt.log << "certificate: " << to_string(ctx.certificate.overall);
    for (const auto& n : failing) *opt.log << " [" << n << "]";
    *opt.log << '\n';
    return ctx.certificate.exit_code();
}

/// Critical points at one (lambda, mu): one CSV per distinct solution and
/// solve_report.txt. Exit 4 when any search failed; best iterates are dumped.
inline int cmd_solve(const RunConfig& cfg, const CommandOptions& opt) {
    const RunContext ctx = prepare_run(cfg, opt);
    const auto dir = detail::out_dir(opt);
    Energy e = detail::make_energy(ctx, ctx.cfg.lambda, ctx.cfg.mu);
    const SolutionSet set = solve_cell(e, ctx.cfg.lambda, ctx.cfg.mu, ctx.ustar, ctx.certificate.constants.r, ctx.cfg.solver);

    StructuredText st;
    st.set("", "lambda", fmt_double(set.lambda));
    st.set("", "mu", fmt_double(set.mu));
    st.set("", "distinct_count", std::to_string(set.distinct_count));
    st.set("", "distinct_nonzero", std::to_string(set.distinct_nonzero));
    st.set("", "rho_observed", fmt_double(set.rho_observed));
    st.set("", "min_pairwise_distance", fmt_double(set.min_pairwise_distance));
    st.set("", "status", set.failures.empty() ? "ok" : "solver-failure");
    detail::certificate_summary(st, ctx.certificate);
    for (std::size_t i = 0; i < set.representatives.size(); ++i) {
        const SolutionRecord& r = set.records[set.representatives[i]];
        const std::string file = "solution_" + std::to_string(i + 1) + ".csv";
        write_function_csv((dir / file).string(), r.u);
        const std::string sec = "solution." + std::to_string(i + 1);
        detail::record_section(st, sec, r);
        st.set(sec, "file", file);
    }
    for (std::size_t i = 0; i < set.rejected.size(); ++i) {
        const std::string file = "best_iterate_" + std::to_string(i + 1) + ".csv";
        write_function_csv((dir / file).string(), set.rejected[i].u);
        const std::string sec = "rejected." + std::to_string(i + 1);
        detail::record_section(st, sec, set.rejected[i]);
        st.set(sec, "file", file);
    }
    for (std::size_t i = 0; i < set.failures.size(); ++i) st.set("failures", "failure" + std::to_string(i + 1), set.failures[i]);
    for (std::size_t i = 0; i < set.notes.size(); ++i) st.set("notes", "note" + std::to_string(i + 1), set.notes[i]);
    st.write((dir / "solve_report.txt").string());
    *opt.log << "solve: " << set.distinct_count << " distinct solution(s), " << set.failures.size() << " failure(s)\n";
    return set.failures.empty() ? exit_codes::pass : exit_codes::solver_failure;
}

/// Runs every (lambda, mu) grid cell: scan_summary.csv, scan_report.txt and one
/// CSV per distinct solution. Exit 0 if at least one cell succeeded.
inline int cmd_scan(const RunConfig& cfg, const CommandOptions& opt) {
    if (cfg.lambdas.empty()) throw ConfigError("the lambda grid is empty; add a [scan] section");
    const RunContext ctx = prepare_run(cfg, opt);
    const auto dir = detail::out_dir(opt);
    Energy e = detail::make_energy(ctx, 0.0, 0.0);
    const auto sets = scan(e, ctx.cfg.lambdas, ctx.cfg.mus, ctx.ustar, ctx.certificate.constants.r, ctx.cfg.solver);

    CsvTable summary;
    summary.header = {"lambda", "mu", "count", "count_nonzero", "rho_observed", "min_pairwise_distance",
                      "max_residual", "failures"};
    StructuredText st;
    detail::certificate_summary(st, ctx.certificate);
    std::string window;
    int succeeded = 0;
    for (std::size_t c = 0; c < sets.size(); ++c) {
        const SolutionSet& s = sets[c];
        double max_res = 0.0;
        for (const auto& r : s.records) max_res = std::max(max_res, r.residual_norm);
        summary.add_row({fmt_double(s.lambda), fmt_double(s.mu), std::to_string(s.distinct_count),
                         std::to_string(s.distinct_nonzero), fmt_double(s.rho_observed),
                         fmt_double(s.min_pairwise_distance), fmt_double(max_res), std::to_string(s.failures.size())});
        if (s.failures.empty() && !s.records.empty()) ++succeeded;
        if (s.distinct_count >= 3) window += (window.empty() ? "" : "; ") + fmt_double(s.lambda) + " " + fmt_double(s.mu);
        const std::string cell = "cell." + std::to_string(c + 1);
        st.set(cell, "lambda", fmt_double(s.lambda));
        st.set(cell, "mu", fmt_double(s.mu));
        st.set(cell, "count", std::to_string(s.distinct_count));
        st.set(cell, "count_nonzero", std::to_string(s.distinct_nonzero));
        for (std::size_t i = 0; i < s.representatives.size(); ++i) {
            const std::string file = "scan_" + std::to_string(c + 1) + "_" + std::to_string(i + 1) + ".csv";
            write_function_csv((dir / file).string(), s.records[s.representatives[i]].u);
            st.set(cell, "solution" + std::to_string(i + 1), file + " " +
                                                              to_string(s.records[s.representatives[i]].classification));
        }
        for (std::size_t i = 0; i < s.failures.size(); ++i) st.set(cell, "failure" + std::to_string(i + 1), s.failures[i]);
    }
    st.set("", "cells", std::to_string(sets.size()));
    st.set("", "cells_succeeded", std::to_string(succeeded));
    st.set("", "three_solution_cells", window.empty() ? "none" : window);
    write_csv((dir / "scan_summary.csv").string(), summary);
    st.write((dir / "scan_report.txt").string());
    *opt.log << "scan: " << sets.size() << " cell(s), " << succeeded << " succeeded\n";
    return succeeded > 0 ? exit_codes::pass : exit_codes::solver_failure;
}

/// Shooting oracle: shooting_profile.csv (sigma, terminal value) and one CSV per root.
inline int cmd_oracle(const RunConfig& cfg, const CommandOptions& opt) {
    if (cfg.spec.domain.dim != 1) throw DimensionUnsupported("the shooting oracle is one-dimensional");
    const double lambda = opt.lambda.value_or(cfg.lambda), mu = opt.mu.value_or(cfg.mu);
    const ShootingProfile prof = enumerate_solutions(cfg.spec, lambda, mu, cfg.oracle);
    const auto dir = detail::out_dir(opt);
    CsvTable t;
    t.header = {"sigma", "terminal", "diverged"};
    for (std::size_t i = 0; i < prof.sigma.size(); ++i)
        t.add_row({fmt_double(prof.sigma[i]), fmt_double(prof.terminal[i]), prof.diverged[i] ? "1" : "0"});
    write_csv((dir / "shooting_profile.csv").string(), t);
    StructuredText st;
    st.set("", "lambda", fmt_double(lambda));
    st.set("", "mu", fmt_double(mu));
    st.set("", "roots", std::to_string(prof.roots.size()));
    st.set("", "brackets", std::to_string(prof.brackets.size()));
    st.set("", "flat_intervals", std::to_string(prof.flat_intervals.size()));
    for (std::size_t i = 0; i < prof.roots.size(); ++i) {
        const ShootingRoot& r = prof.roots[i];
        CsvTable rt;
        rt.header = {"x1", "u"};
        for (std::size_t k = 0; k < r.x.size(); ++k) rt.add_row({fmt_double(r.x[k]), fmt_double(r.u[k])});
        const std::string file = "root_" + std::to_string(i + 1) + ".csv";
        write_csv((dir / file).string(), rt);
        const std::string sec = "root." + std::to_string(i + 1);
        st.set(sec, "sigma", fmt_double(r.sigma));
        st.set(sec, "terminal", fmt_double(r.terminal));
        st.set(sec, "converged", r.converged ? "true" : "false");
        st.set(sec, "file", file);
    }
    for (std::size_t i = 0; i < prof.flat_intervals.size(); ++i)
        st.set("flat." + std::to_string(i + 1), "sigma_range",
               fmt_double(prof.flat_intervals[i].first) + ", " + fmt_double(prof.flat_intervals[i].second));
    st.write((dir / "oracle_report.txt").string());
    *opt.log << "oracle: " << prof.roots.size() << " root(s)\n";
    return exit_codes::pass;
}

/// Loads the config and runs one subcommand, mapping errors to exit codes.
inline int run_command(const std::string& name, const std::string& config_path, const CommandOptions& opt) {
    try {
        const RunConfig cfg = load_run_config(config_path);
        if (name == "check") return cmd_check(cfg, opt);
        if (name == "solve") return cmd_solve(cfg, opt);
        if (name == "scan") return cmd_scan(cfg, opt);
        if (name == "oracle") return cmd_oracle(cfg, opt);
        throw ArgumentError("unknown subcommand '" + name + "'");
    } catch (const ConfigError& e) {
        *opt.log << config_path << ": " << e.what() << '\n';
        return exit_codes::config_error;
    } catch (const RefinementRequired& e) {
        *opt.log << config_path << ": " << e.what() << '\n';
        return exit_codes::config_error;
    } catch (const DimensionUnsupported& e) {
        *opt.log << "unsupported: " << e.what() << '\n';
        return exit_codes::unsupported;
    } catch (const RegimeError& e) {
        *opt.log << "unsupported: " << e.what() << '\n';
        return exit_codes::unsupported;
    } catch (const SolverFailure& e) {
        *opt.log << "solver failure: " << e.what() << '\n';
        return exit_codes::solver_failure;
    } catch (const Error& e) {
        *opt.log << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace wplap
