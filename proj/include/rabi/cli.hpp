#pragma once

// Subcommands of the rabi tool, independent of argument parsing.
// Data goes to the output stream, diagnostics to the error stream.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rabi/gfunctions.hpp"
#include "rabi/io.hpp"
#include "rabi/model.hpp"
#include "rabi/ode.hpp"
#include "rabi/oracle.hpp"
#include "rabi/spectrum.hpp"

namespace rabi {

inline constexpr int exit_ok = 0;
inline constexpr int exit_mismatch = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_no_convergence = 3;

struct RunConfig {
    std::string subcommand;
    double g = 1.0;
    double delta = 0.0;
    double epsilon = 0.0;
    // "+", "-" or "both"; unset selects the per-command default
    std::optional<std::string> parity;
    std::optional<double> x_min;
    double x_max = 12.0;
    std::optional<std::string> z0;
    std::optional<double> tol;
    int trunc = 0;
    int nfock = 0;
    std::string format = "csv";
    std::string out;
    int samples = 400;
    std::vector<double> xs;
    int workers = 1;
    std::string precision = "auto";
    std::string input;

    [[nodiscard]] ModelParams params() const { return {g, delta, epsilon}; }
};

namespace detail {

inline std::vector<Parity> parities_of(const std::string &s)
{
    if (s == "+")
        return {Parity::positive};
    if (s == "-")
        return {Parity::negative};
    if (s == "both")
        return {Parity::positive, Parity::negative};
    throw invalid_params("parity must be one of +, -, both (got '" + s + "')");
}

inline Precision precision_of(const std::string &s)
{
    if (s == "auto")
        return Precision::automatic;
    if (s == "double")
        return Precision::double_precision;
    if (s == "extended")
        return Precision::extended;
    throw invalid_params("precision must be one of auto, double, extended (got '" + s + "')");
}

// Every level satisfies x = E + g^2 >= -sqrt(delta^2 + eps^2).
inline double default_x_min(const ModelParams &p)
{
    return -std::hypot(p.delta, p.epsilon) - 0.5;
}

inline void check_config(const RunConfig &c)
{
    c.params().validate();
    if (!std::isfinite(c.delta) || !std::isfinite(c.epsilon))
        throw invalid_params("delta and epsilon must be finite");
    if (c.format != "csv" && c.format != "json")
        throw invalid_params("format must be csv or json (got '" + c.format + "')");
    if (!std::isfinite(c.x_max) || (c.x_min && !(*c.x_min < c.x_max)))
        throw invalid_params("x range must satisfy x_min < x_max");
    if (c.tol && !(*c.tol > 0.0))
        throw invalid_params("tol must be > 0");
    if (c.trunc < 0)
        throw invalid_params("trunc must be >= 0");
    if (c.nfock < 0)
        throw invalid_params("nfock must be >= 0");
    if (c.samples < 2)
        throw invalid_params("samples must be >= 2");
    if (c.workers < 1)
        throw invalid_params("workers must be >= 1");
    (void)precision_of(c.precision);
}

inline ScanOptions scan_options(const RunConfig &c)
{
    ScanOptions so;
    if (c.tol)
        so.tol_x = *c.tol;
    if (c.z0)
        so.z0 = parse_complex(*c.z0);
    so.g.order = c.trunc;
    so.precision = precision_of(c.precision);
    so.workers = c.workers;
    return so;
}

inline std::vector<SpectrumLevel> scan_all(const RunConfig &c, const std::vector<Parity> &parities, double x_min)
{
    const auto p = c.params();
    const auto so = scan_options(c);
    if (!p.symmetric())
        return scan_eps(p, x_min, c.x_max, so);
    std::vector<SpectrumLevel> levels;
    for (auto par : parities) {
        const auto part = scan_regular(p, par, x_min, c.x_max, so);
        levels.insert(levels.end(), part.begin(), part.end());
    }
    std::stable_sort(levels.begin(), levels.end(),
                     [](const SpectrumLevel &a, const SpectrumLevel &b) { return a.x < b.x; });
    return levels;
}

inline OracleResult oracle_for(const RunConfig &c, double x_max)
{
    const auto p = c.params();
    OracleOptions oo;
    oo.n_fock = c.nfock > 0 ? c.nfock : suggested_n_fock(p, x_max);
    auto res = solve_oracle(p, oo);
    const double e_max = x_max - p.g * p.g;
    if (res.eigenvalues.empty() || res.eigenvalues.back() < e_max)
        throw level_not_converged("oracle levels below x=" + format_number(x_max) +
                                  " are not all certified; increase nfock");
    return res;
}

inline std::string pass_label(bool ok)
{
    return ok ? "1" : "0";
}

} // namespace detail

inline int cmd_spectrum(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    const auto p = c.params();
    const auto parities = detail::parities_of(c.parity.value_or("both"));
    if (!p.symmetric() && c.parity.value_or("both") != "both")
        throw invalid_params("parity is not conserved for epsilon != 0; use --parity both");
    if (p.delta == 0.0 && p.symmetric())
        err << "note: delta = 0, the spectrum is purely exceptional (E = n - g^2, doubly degenerate); "
               "no regular levels exist\n";
    const auto levels = detail::scan_all(c, parities, c.x_min.value_or(detail::default_x_min(p)));
    if (c.format == "json")
        write_levels_json(out, p, levels);
    else
        write_levels_csv(out, levels);
    return exit_ok;
}

inline int cmd_gtrace(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    const auto p = c.params();
    const cplx z0 = c.z0 ? parse_complex(*c.z0) : cplx(0.0, 0.0);
    const std::string par = c.parity.value_or("+");
    if (par == "both")
        throw invalid_params("gtrace needs a single parity (+ or -)");
    const Parity parity = detail::parities_of(par).front();
    if (!p.symmetric() && z0 != cplx(0.0, 0.0))
        throw invalid_params("the epsilon G-function is only defined at z0 = 0");
    const double x_min = c.x_min.value_or(0.0);

    GOptions go;
    go.order = c.trunc;
    const auto precision = detail::precision_of(c.precision);
    std::vector<TraceRow> rows;
    int skipped = 0;
    for (int i = 0; i < c.samples; ++i) {
        const double x = i + 1 == c.samples ? c.x_max : x_min + (c.x_max - x_min) * i / (c.samples - 1);
        try {
            GEvaluation ev;
            const bool ext = precision == Precision::extended;
            if (!p.symmetric())
                ev = ext ? eval_G_eps<extended>(p, x, go) : eval_G_eps(p, x, go);
            else
                ev = ext ? eval_G_general<extended>(p, parity, x, z0, go) : eval_G_general(p, parity, x, z0, go);
            rows.push_back({x, ev.value, ev.converged, ev.order_used});
        } catch (const pole_proximity &) {
            ++skipped;
        }
    }
    if (skipped > 0)
        err << "note: " << skipped << " samples inside pole exclusion windows were skipped\n";
    if (c.format == "json")
        write_trace_json(out, p, z0, rows);
    else
        write_trace_csv(out, rows);
    return exit_ok;
}

inline int cmd_validate(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    const auto p = c.params();
    if (c.xs.empty())
        throw invalid_params("validate needs at least one --x");
    const cplx z0 = c.z0 ? parse_complex(*c.z0) : cplx(0.0, 0.0);
    const double tol = c.tol.value_or(1e-7);
    const double theorem_tol = 10.0 * tol;
    bool all_ok = true;

    nlohmann::ordered_json j;
    j["params"] = params_json(p);
    j["z0"] = format_complex(z0);
    j["results"] = nlohmann::ordered_json::array();

    if (!p.symmetric()) {
        if (c.format == "csv")
            out << "x,z0,c_a,c_b,consistency,res_1,res_2,res_3,res_4,pass\n";
        for (const double x : c.xs) {
            const auto ec = eps_conditions(p, x, z0);
            const double worst = *std::max_element(ec.residuals.begin(), ec.residuals.end());
            const bool ok = ec.consistency < theorem_tol && worst < tol;
            all_ok = all_ok && ok;
            if (c.format == "csv") {
                out << format_number(x) << ',' << format_complex(z0) << ',' << format_complex(ec.c_a) << ','
                    << format_complex(ec.c_b) << ',' << format_number(ec.consistency);
                for (double r : ec.residuals)
                    out << ',' << format_number(r);
                out << ',' << detail::pass_label(ok) << '\n';
            } else {
                nlohmann::ordered_json row;
                row["x"] = round_15(x);
                row["c_a"] = format_complex(ec.c_a);
                row["c_b"] = format_complex(ec.c_b);
                row["consistency"] = round_15(ec.consistency);
                for (std::size_t k = 0; k < 4; ++k)
                    row["res_" + std::to_string(k + 1)] = round_15(ec.residuals[k]);
                row["pass"] = ok;
                j["results"].push_back(row);
            }
        }
    } else {
        const auto parity = detail::parities_of(c.parity.value_or("+"));
        if (c.format == "csv")
            out << "x,parity,z0,res_a,res_b,theorem_mismatch,pass\n";
        for (const double x : c.xs) {
            for (auto par : parity) {
                const auto cc = check_conditions(p, x, z0, par);
                const double mismatch = theorem_check(p, par, x);
                const bool ok = cc.res_a < tol && cc.res_b < tol && mismatch < theorem_tol;
                all_ok = all_ok && ok;
                if (c.format == "csv") {
                    out << format_number(x) << ',' << to_string(par) << ',' << format_complex(z0) << ','
                        << format_number(cc.res_a) << ',' << format_number(cc.res_b) << ','
                        << format_number(mismatch) << ',' << detail::pass_label(ok) << '\n';
                } else {
                    nlohmann::ordered_json row;
                    row["x"] = round_15(x);
                    row["parity"] = to_string(par);
                    row["res_a"] = round_15(cc.res_a);
                    row["res_b"] = round_15(cc.res_b);
                    row["theorem_mismatch"] = round_15(mismatch);
                    row["pass"] = ok;
                    j["results"].push_back(row);
                }
            }
        }
    }
    if (c.format == "json")
        out << j.dump(2) << '\n';
    if (!all_ok)
        err << "validate: at least one value fails the matching conditions (tol " << format_number(tol) << ")\n";
    return all_ok ? exit_ok : exit_mismatch;
}

// Pairs scan and oracle levels in ascending order; unmatched entries get NaN partners.
[[nodiscard]] inline std::vector<CompareRow> pair_levels(const std::vector<SpectrumLevel> &scan,
                                                         const std::vector<std::pair<double, LevelParity>> &oracle)
{
    std::vector<CompareRow> rows;
    std::size_t i = 0;
    std::size_t k = 0;
    while (i < scan.size() || k < oracle.size()) {
        CompareRow r;
        if (i < scan.size() && k < oracle.size()) {
            const double dx = scan[i].x - oracle[k].first;
            const bool next_scan_closer = i + 1 < scan.size() && std::abs(scan[i + 1].x - oracle[k].first) < std::abs(dx);
            const bool next_oracle_closer =
                k + 1 < oracle.size() && std::abs(scan[i].x - oracle[k + 1].first) < std::abs(dx);
            if (next_oracle_closer) {
                r.x_oracle = oracle[k].first;
                r.parity = oracle[k++].second;
            } else if (next_scan_closer) {
                r.x_scan = scan[i].x;
                r.parity = scan[i].parity;
                r.kind = scan[i++].kind;
            } else {
                r.x_scan = scan[i].x;
                r.x_oracle = oracle[k].first;
                r.parity = scan[i].parity;
                r.kind = scan[i].kind;
                ++i;
                ++k;
            }
        } else if (i < scan.size()) {
            r.x_scan = scan[i].x;
            r.parity = scan[i].parity;
            r.kind = scan[i++].kind;
        } else {
            r.x_oracle = oracle[k].first;
            r.parity = oracle[k++].second;
        }
        rows.push_back(r);
    }
    return rows;
}

inline int cmd_compare(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    const auto p = c.params();
    const double tol = c.tol.value_or(1e-8);
    const double x_min = c.x_min.value_or(detail::default_x_min(p));
    if (!p.symmetric() && c.parity.value_or("both") != "both")
        throw invalid_params("parity is not conserved for epsilon != 0; use --parity both");
    const std::string par = c.parity.value_or("both");
    const auto parities = detail::parities_of(par);

    RunConfig scan_cfg = c;
    scan_cfg.tol.reset();
    auto levels = detail::scan_all(scan_cfg, parities, x_min);
    const auto oracle = detail::oracle_for(c, c.x_max);
    if (p.symmetric()) {
        for (const auto &l : exceptional_levels(p, c.x_max, oracle))
            if (l.x >= x_min && (par == "both" || (l.parity == LevelParity::positive) == (par == "+")))
                levels.push_back(l);
        std::stable_sort(levels.begin(), levels.end(),
                         [](const SpectrumLevel &a, const SpectrumLevel &b) { return a.x < b.x; });
    }

    std::vector<std::pair<double, LevelParity>> ref;
    for (std::size_t i = 0; i < oracle.eigenvalues.size(); ++i) {
        const double x = x_from_energy(p, oracle.eigenvalues[i]);
        if (x < x_min || x >= c.x_max)
            continue;
        LevelParity lp = LevelParity::none;
        if (p.symmetric())
            lp = oracle.parity[i] > 0.0 ? LevelParity::positive : LevelParity::negative;
        if (par == "+" && lp != LevelParity::positive)
            continue;
        if (par == "-" && lp != LevelParity::negative)
            continue;
        ref.emplace_back(x, lp);
    }

    const auto rows = pair_levels(levels, ref);
    double worst = 0.0;
    bool ok = levels.size() == ref.size();
    for (const auto &r : rows) {
        const double d = r.abs_dx();
        if (std::isnan(d)) {
            ok = false;
            continue;
        }
        worst = std::max(worst, d);
    }
    ok = ok && worst <= tol;
    if (c.format == "json")
        write_compare_json(out, p, rows, worst, ok);
    else
        write_compare_csv(out, rows);
    err << "compare: scan " << levels.size() << " levels, oracle " << ref.size() << " levels (nfock "
        << oracle.n_fock << "), worst |dx| = " << format_number(worst) << ", tol " << format_number(tol)
        << (ok ? ", ok\n" : ", MISMATCH\n");
    return ok ? exit_ok : exit_mismatch;
}

inline int cmd_oracle(const RunConfig &c, std::ostream &out, std::ostream &)
{
    const auto p = c.params();
    const auto res = detail::oracle_for(c, c.x_max);
    const double x_min = c.x_min.value_or(detail::default_x_min(p));
    nlohmann::ordered_json j;
    j["params"] = params_json(p);
    j["n_fock"] = res.n_fock;
    j["levels"] = nlohmann::ordered_json::array();
    if (c.format == "csv")
        out << "index,x,energy,parity,parity_expectation\n";
    int index = 0;
    for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
        const double x = x_from_energy(p, res.eigenvalues[i]);
        if (x < x_min || x >= c.x_max)
            continue;
        std::string label = "none";
        if (p.symmetric() && !res.parity_flagged[i])
            label = res.parity[i] > 0.0 ? "+" : "-";
        if (c.format == "csv") {
            out << index << ',' << format_number(x) << ',' << format_number(res.eigenvalues[i]) << ',' << label
                << ',' << format_number(res.parity[i]) << '\n';
        } else {
            nlohmann::ordered_json row;
            row["index"] = index;
            row["x"] = round_15(x);
            row["energy"] = round_15(res.eigenvalues[i]);
            row["parity"] = label;
            row["parity_expectation"] = round_15(res.parity[i]);
            j["levels"].push_back(row);
        }
        ++index;
    }
    if (c.format == "json")
        out << j.dump(2) << '\n';
    return exit_ok;
}

// Re-reads a JSON level table and writes it in the requested format.
inline int cmd_convert(const RunConfig &c, std::ostream &out, std::ostream &)
{
    std::ifstream in(c.input);
    if (!in)
        throw invalid_params("cannot open input file '" + c.input + "'");
    const auto table = read_levels_json(in);
    if (c.format == "json")
        write_levels_json(out, table.params, table.levels);
    else
        write_levels_csv(out, table.levels);
    return exit_ok;
}

// Runs one subcommand and maps failures to exit codes: 2 for configuration and
// precondition errors, 3 for convergence failures.
inline int run_command(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    try {
        if (c.subcommand != "convert")
            detail::check_config(c);
        std::ofstream file;
        std::ostream *os = &out;
        if (!c.out.empty()) {
            file.open(c.out);
            if (!file)
                throw invalid_params("cannot open output file '" + c.out + "'");
            os = &file;
        }
        if (c.subcommand == "spectrum")
            return cmd_spectrum(c, *os, err);
        if (c.subcommand == "gtrace")
            return cmd_gtrace(c, *os, err);
        if (c.subcommand == "validate")
            return cmd_validate(c, *os, err);
        if (c.subcommand == "compare")
            return cmd_compare(c, *os, err);
        if (c.subcommand == "oracle")
            return cmd_oracle(c, *os, err);
        if (c.subcommand == "convert")
            return cmd_convert(c, *os, err);
        throw invalid_params("unknown subcommand '" + c.subcommand + "'");
    } catch (const no_convergence &e) {
        err << "error: " << e.what() << '\n';
        return exit_no_convergence;
    } catch (const level_not_converged &e) {
        err << "error: " << e.what() << '\n';
        return exit_no_convergence;
    } catch (const step_underflow &e) {
        err << "error: " << e.what() << '\n';
        return exit_no_convergence;
    } catch (const eigensolver_failure &e) {
        err << "error: " << e.what() << '\n';
        return exit_no_convergence;
    } catch (const rabi_error &e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
}

} // namespace rabi
