#pragma once

// Command implementations behind the `rsint` executable. Kept in a header
// so the tests can drive them in-process.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rsint/compile.hpp"
#include "rsint/rsint.hpp"
#include "rsint/serialize.hpp"
#include "rsint/suite.hpp"

namespace rsint::cli {

enum ExitCode { kOk = 0, kUsage = 1, kNotCertified = 2, kHypothesis = 3, kDisagree = 4 };

enum class Format { json, csv, human };

struct RunConfig {
    std::string command;
    std::string identity;
    std::string f_src, phi_src, density_src, psi_src;
    std::vector<double> interval;
    double epsilon = 1e-4;
    std::optional<double> eta;
    std::optional<double> agree_tol;
    RefinementBudget budget;
    Format format = Format::json;
    std::string output;
    std::uint64_t seed = 42;
    std::size_t cases = 200;
    std::size_t cells = 16;
    std::optional<double> mesh;
    double phi_base = 0.0;
    double phi_at_base = 0.0;
    CodaParams coda;
};

inline std::string num(double v) { return expr::format_number(v); }

inline OrientedInterval span_of(const RunConfig& c) { return {c.interval.at(0), c.interval.at(1)}; }

/// Interval of positive length: a degenerate one is padded so that
/// expressions can still be compiled around it.
inline Interval padded(Interval j) {
    if (j.lo < j.hi) return j;
    const double w = 1e-9 * std::max(1.0, std::abs(j.lo));
    return {j.lo - w, j.hi + w};
}

inline Interval join(const Interval& a, double x) { return {std::min(a.lo, x), std::max(a.hi, x)}; }

/// Φ(x) = phi_at_base + ∫_{phi_base}^x φ.
inline IndefiniteIntegral build_phi(const RunConfig& c, const std::string& density) {
    const Interval dom = padded(join(span_of(c).hull(), c.phi_base));
    return IndefiniteIntegral(expr::compile(density, dom).fn, c.phi_base, c.phi_at_base);
}

/// f and ψ live on the range of Φ over I; Ψ is anchored at the left end of
/// that range (the constant does not enter any integral).
struct Inputs {
    PiecewiseMonotoneFn f;
    IndefiniteIntegral Psi;
    IndefiniteIntegral Phi;
};

inline Inputs build_inputs(const RunConfig& c) {
    IndefiniteIntegral Phi = build_phi(c, c.density_src);
    const Interval range = padded(range_of(Phi, span_of(c).hull()).range);
    PiecewiseMonotoneFn f = expr::compile(c.f_src, range).fn;
    IndefiniteIntegral Psi(expr::compile(c.psi_src, range).fn, range.lo, 0.0);
    return {std::move(f), std::move(Psi), std::move(Phi)};
}

inline VerifyOptions verify_options(const RunConfig& c) {
    VerifyOptions o;
    o.epsilon = c.epsilon;
    o.eta = c.eta;
    o.agree_tol = c.agree_tol;
    o.budget = c.budget;
    return o;
}

// -- integrate ---------------------------------------------------------------------

inline json compiled_json(const std::string& src, const expr::CompiledFn& c) {
    return json{{"source", src},
                {"certified", c.certified},
                {"breakpoints", c.breakpoints()},
                {"directions", c.directions()}};
}

inline int cmd_integrate(const RunConfig& c, std::ostream& out) {
    const OrientedInterval span = span_of(c);
    const Interval hull = padded(span.hull());
    IntegralResult r;
    json inputs;
    if (!c.phi_src.empty()) {
        const expr::CompiledFn phi = expr::compile(c.phi_src, hull);
        const expr::CompiledFn f = expr::compile(c.f_src, hull);
        r = integrate_piecewise_report(f.fn, phi.fn, span, c.epsilon, c.budget);
        inputs = json{{"f", compiled_json(c.f_src, f)}, {"phi", compiled_json(c.phi_src, phi)}};
    } else {
        const expr::CompiledFn f = expr::compile(c.f_src, hull);
        const IndefiniteIntegral Phi = build_phi(c, c.density_src);
        const expr::CompiledFn density = expr::compile(c.density_src, padded(join(span.hull(), c.phi_base)));
        r = integrate_piecewise_report(f.fn, Phi, span, c.epsilon, c.budget);
        inputs = json{{"f", compiled_json(c.f_src, f)}, {"density", compiled_json(c.density_src, density)}};
    }
    const CertificationReport& rep = r.report;
    switch (c.format) {
        case Format::json: {
            json report = rep;
            report.erase("partition");
            report["cells"] = rep.partition.size();
            const json j{{"command", "integrate"}, {"interval", span},  {"epsilon", c.epsilon},
                         {"enclosure", r.enclosure}, {"midpoint", r.enclosure.midpoint()},
                         {"certified", rep.certified}, {"report", std::move(report)}, {"inputs", std::move(inputs)}};
            out << j.dump(2) << "\n";
            break;
        }
        case Format::csv:
            out << "lower,upper,midpoint,gap,cells,certified\n"
                << num(r.enclosure.lower) << "," << num(r.enclosure.upper) << "," << num(r.enclosure.midpoint())
                << "," << num(rep.gap) << "," << rep.partition.size() << "," << (rep.certified ? "true" : "false")
                << "\n";
            break;
        case Format::human:
            out << "integral  " << num(r.enclosure.midpoint()) << "\n"
                << "enclosure [" << num(r.enclosure.lower) << ", " << num(r.enclosure.upper) << "]\n"
                << "gap       " << num(rep.gap) << " (epsilon " << num(c.epsilon) << ")\n"
                << "cells     " << rep.partition.size() << " after " << rep.rounds << " rounds\n"
                << (rep.certified ? "certified\n" : "NOT certified: refinement budget exhausted\n");
            break;
    }
    return rep.certified ? kOk : kNotCertified;
}

// -- verify ------------------------------------------------------------------------

inline VerificationReport run_verify(const RunConfig& c) {
    const VerifyOptions opt = verify_options(c);
    if (c.identity == "coda") return verify_coda_mvt(c.coda, opt);
    const Inputs in = build_inputs(c);
    const OrientedInterval span = span_of(c);
    if (c.identity == "eq7") return verify_lemma_eq7(in.f, in.Psi, in.Phi, span, opt);
    if (c.identity == "eq1") return verify_substitution_eq1(in.f, in.Psi, in.Phi, span, opt);
    if (c.identity == "eq30") return verify_change_of_variable_eq30(in.f, in.Psi, in.Phi, span, opt);
    const Partition p = Partition::uniform(span.hull(), c.cells);
    return verify_composition_identity(in.f, in.Psi, in.Phi, p, opt, true);
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
    const VerificationReport r = run_verify(c);
    switch (c.format) {
        case Format::json: out << json(r).dump(2) << "\n"; break;
        case Format::csv:
            out << "name,value,bound,holds\n";
            out << "lhs_lower," << num(r.lhs.lower) << ",,\n" << "lhs_upper," << num(r.lhs.upper) << ",,\n";
            out << "rhs_lower," << num(r.rhs.lower) << ",,\n" << "rhs_upper," << num(r.rhs.upper) << ",,\n";
            out << "max_gap," << num(r.max_gap) << "," << num(r.tolerance) << "," << (r.agree ? "true" : "false")
                << "\n";
            for (const auto& [k, v] : r.quantities) out << k << "," << num(v) << ",,\n";
            for (const auto& ch : r.checks)
                out << ch.name << "," << num(ch.value) << "," << num(ch.bound) << "," << (ch.holds ? "true" : "false")
                    << "\n";
            break;
        case Format::human:
            out << to_string(r.identity) << ": " << (r.agree ? "agree" : "DISAGREE") << "\n"
                << "lhs [" << num(r.lhs.lower) << ", " << num(r.lhs.upper) << "]\n"
                << "rhs [" << num(r.rhs.lower) << ", " << num(r.rhs.upper) << "]\n"
                << "max gap " << num(r.max_gap) << " (tolerance " << num(r.tolerance) << ")\n";
            for (const auto& ch : r.checks)
                out << "  " << (ch.holds ? "ok   " : "FAIL ") << ch.name << ": " << num(ch.value)
                    << " <= " << num(ch.bound) << "\n";
            break;
    }
    return r.agree ? kOk : kDisagree;
}

// -- classify ----------------------------------------------------------------------

inline int cmd_classify(const RunConfig& c, std::ostream& out) {
    const Interval hull = span_of(c).hull();
    if (!(hull.lo < hull.hi)) throw std::invalid_argument("classify needs an interval of positive length");
    if (!c.eta || !(*c.eta > 0.0)) throw std::invalid_argument("classify needs --eta > 0");
    const PiecewiseMonotoneFn psi = expr::compile(c.psi_src, hull).fn;
    std::size_t n = c.cells;
    if (c.mesh) {
        if (!(*c.mesh > 0.0)) throw std::invalid_argument("--mesh must be positive");
        n = static_cast<std::size_t>(std::max(1.0, std::ceil(hull.width() / *c.mesh - 1e-9)));
    }
    const ClassifiedPartition cp = classify(psi, Partition::uniform(hull, n), *c.eta);
    const double sum_u = cp.length(Label::U), bound = *c.eta * hull.width();
    switch (c.format) {
        case Format::json: {
            const json j{{"command", "classify"},
                         {"classification", cp},
                         {"sum_u_length", sum_u},
                         {"eta_bound", bound},
                         {"within_bound", sum_u <= bound}};
            out << j.dump(2) << "\n";
            break;
        }
        case Format::csv:
            out << "left,right,label,osc,sup_abs\n";
            for (std::size_t k = 0; k < cp.cells.size(); ++k)
                out << num(cp.cells[k].lo) << "," << num(cp.cells[k].hi) << "," << to_string(cp.labels[k]) << ","
                    << num(cp.density_bounds[k].oscillation()) << "," << num(cp.density_bounds[k].max_abs()) << "\n";
            out << "# sum_U_length=" << num(sum_u) << " eta_bound=" << num(bound)
                << " within=" << (sum_u <= bound ? "true" : "false") << "\n";
            break;
        case Format::human:
            for (std::size_t k = 0; k < cp.cells.size(); ++k)
                out << to_string(cp.labels[k]) << "  [" << num(cp.cells[k].lo) << ", " << num(cp.cells[k].hi)
                    << "]  osc " << num(cp.density_bounds[k].oscillation()) << "  sup|psi| "
                    << num(cp.density_bounds[k].max_abs()) << "\n";
            out << "U length " << num(sum_u) << " vs eta*|I| " << num(bound) << "\n";
            break;
    }
    return kOk;
}

// -- suite -------------------------------------------------------------------------

inline int cmd_suite(const RunConfig& c, std::ostream& out) {
    const VerifyOptions opt = verify_options(c);
    std::vector<suite::Outcome> results;
    std::size_t passed = 0;
    for (std::size_t i = 0; i < c.cases; ++i) {
        results.push_back(suite::run_indexed(c.seed, i, opt));
        passed += results.back().passed();
    }
    const std::string summary = std::to_string(passed) + "/" + std::to_string(c.cases) + " agree";
    switch (c.format) {
        case Format::json: {
            json rows = json::array();
            for (const auto& o : results)
                rows.push_back(json{{"index", o.index},     {"identity", o.identity}, {"agree", o.agree},
                                    {"checks_hold", o.checks_hold}, {"max_gap", o.max_gap},
                                    {"lhs_mid", o.lhs_mid}, {"rhs_mid", o.rhs_mid}, {"error", o.error}});
            const json j{{"command", "suite"}, {"seed", c.seed},     {"cases", c.cases}, {"epsilon", c.epsilon},
                         {"passed", passed},  {"summary", summary}, {"results", std::move(rows)}};
            out << j.dump(2) << "\n";
            break;
        }
        case Format::csv:
            out << "index,identity,agree,checks_hold,max_gap,lhs_mid,rhs_mid,error\n";
            for (const auto& o : results)
                out << o.index << "," << to_string(o.identity) << "," << (o.agree ? "true" : "false") << ","
                    << (o.checks_hold ? "true" : "false") << "," << num(o.max_gap) << "," << num(o.lhs_mid) << ","
                    << num(o.rhs_mid) << ",\"" << o.error << "\"\n";
            out << "# " << summary << "\n";
            break;
        case Format::human:
            for (const auto& o : results)
                if (!o.passed())
                    out << "case " << o.index << " (" << to_string(o.identity) << ") failed: "
                        << (o.error.empty() ? "max gap " + num(o.max_gap) : o.error) << "\n";
            out << summary << "\n";
            break;
    }
    return passed == c.cases ? kOk : kDisagree;
}

// -- entry point -------------------------------------------------------------------

inline int dispatch(const RunConfig& c, std::ostream& out) {
    if (c.command == "integrate") return cmd_integrate(c, out);
    if (c.command == "verify") return cmd_verify(c, out);
    if (c.command == "classify") return cmd_classify(c, out);
    return cmd_suite(c, out);
}

/// Runs one command; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certified Riemann-Stieltjes integrals and change-of-variable checks", "rsint"};
    app.require_subcommand(1);
    RunConfig c;
    std::string format = "";

    auto common = [&](CLI::App* s, const char* default_format) {
        s->add_option("--eps", c.epsilon, "target width of each enclosure")->check(CLI::PositiveNumber);
        s->add_option("--max-cells", c.budget.max_cells, "refinement cell budget")->check(CLI::PositiveNumber);
        s->add_option("--max-rounds", c.budget.max_rounds, "refinement round budget")->check(CLI::PositiveNumber);
        s->add_option("--format", format, std::string("json, csv or human (default ") + default_format + ")")
            ->check(CLI::IsMember({"json", "csv", "human"}));
        s->add_option("-o,--output", c.output, "write to this file instead of stdout");
    };
    auto interval = [&](CLI::App* s) {
        s->add_option("--interval", c.interval, "endpoints a b; b < a reverses the orientation")
            ->expected(2)
            ->required()
            ->allow_extra_args(false);
    };
    auto phi_anchor = [&](CLI::App* s) {
        s->add_option("--phi-base", c.phi_base, "x0 in Phi(x) = Phi(x0) + integral of phi from x0 (default 0)");
        s->add_option("--phi-at-base", c.phi_at_base, "Phi(x0) (default 0)");
    };

    auto* integ = app.add_subcommand("integrate", "enclose the integral of f dPhi over an oriented interval");
    integ->add_option("--f", c.f_src, "integrand f(x)")->required();
    auto* phi_opt = integ->add_option("--phi", c.phi_src, "integrator Phi(x)");
    auto* dens_opt = integ->add_option("--density", c.density_src, "density phi(x) with Phi' = phi");
    phi_opt->excludes(dens_opt);
    interval(integ);
    phi_anchor(integ);
    common(integ, "json");

    auto* verify = app.add_subcommand("verify", "check a substitution identity on concrete functions");
    verify->add_option("identity", c.identity, "eq1, eq6, eq7, eq30 or coda")
        ->required()
        ->check(CLI::IsMember({"eq1", "eq6", "eq7", "eq30", "coda"}));
    verify->add_option("--f", c.f_src, "outer integrand f(y)");
    verify->add_option("--psi", c.psi_src, "density psi(y) of Psi");
    verify->add_option("--density-phi", c.density_src, "density phi(x) of the substitution Phi");
    verify->add_option("--interval", c.interval, "endpoints a b")->expected(2);
    verify->add_option("--eta", c.eta, "budget threshold eta")->check(CLI::PositiveNumber);
    verify->add_option("--agree-tol", c.agree_tol, "widening applied to both enclosures")
        ->check(CLI::NonNegativeNumber);
    verify->add_option("--cells", c.cells, "cells of the uniform partition used by eq6")->check(CLI::PositiveNumber);
    verify->add_option("--beta", c.coda.beta, "coda: exponent of f(y) = y^beta");
    verify->add_option("--coda-eps", c.coda.eps, "coda: Phi(x) = x^(1-eps)");
    verify->add_option("--coda-eta", c.coda.eta, "coda: Psi(y) = y^(1-eta)");
    phi_anchor(verify);
    common(verify, "json");

    auto* cls = app.add_subcommand("classify", "label the cells of a uniform partition G, B or U");
    cls->add_option("--psi", c.psi_src, "density psi(y)")->required();
    interval(cls);
    cls->add_option("--eta", c.eta, "threshold eta")->required()->check(CLI::PositiveNumber);
    auto* mesh = cls->add_option("--mesh", c.mesh, "cell width");
    cls->add_option("--cells", c.cells, "number of cells")->check(CLI::PositiveNumber)->excludes(mesh);
    common(cls, "csv");

    auto* su = app.add_subcommand("suite", "run the randomized identity corpus");
    su->add_option("--seed", c.seed, "corpus seed (default 42)");
    su->add_option("--cases", c.cases, "number of cases (default 200)");
    su->add_option("--agree-tol", c.agree_tol, "widening applied to both enclosures")->check(CLI::NonNegativeNumber);
    common(su, "human");

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }
    for (auto* s : app.get_subcommands()) c.command = s->get_name();
    if (c.command == "verify") {
        if (c.identity != "coda") {
            if (c.f_src.empty() || c.psi_src.empty() || c.density_src.empty() || c.interval.size() != 2) {
                err << "error: verify " << c.identity << " needs --f, --psi, --density-phi and --interval\n";
                return kUsage;
            }
        }
    }
    if (c.command == "integrate" && c.phi_src.empty() && c.density_src.empty()) {
        err << "error: integrate needs --phi or --density\n";
        return kUsage;
    }
    if (format.empty()) format = c.command == "suite" ? "human" : (c.command == "classify" ? "csv" : "json");
    c.format = format == "json" ? Format::json : (format == "csv" ? Format::csv : Format::human);

    std::ofstream file;
    std::ostream* sink = &out;
    if (!c.output.empty()) {
        file.open(c.output);
        if (!file) {
            err << "error: cannot write " << c.output << "\n";
            return kUsage;
        }
        sink = &file;
    }
    try {
        return dispatch(c, *sink);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << "\n";
        return kUsage;
    } catch (const NotCertified& e) {
        err << "not certified: " << e.what() << "\n";
        return kNotCertified;
    } catch (const HypothesisError& e) {
        err << "hypothesis violated: " << e.what() << "\n";
        return kHypothesis;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

} // namespace rsint::cli
