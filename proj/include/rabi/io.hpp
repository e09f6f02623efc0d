#pragma once

// Text formats shared by the command-line tool: complex literals, CSV and JSON
// level tables, G traces and comparison reports. Decimal output uses 15
// significant digits throughout.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rabi/model.hpp"
#include "rabi/spectrum.hpp"
#include "rabi/system.hpp"

namespace rabi {

[[nodiscard]] inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// v rounded to 15 significant digits, so JSON output re-reads to the same text.
[[nodiscard]] inline double round_15(double v)
{
    if (!std::isfinite(v))
        return v;
    return std::strtod(format_number(v).c_str(), nullptr);
}

[[nodiscard]] inline std::string format_complex(cplx z)
{
    if (z.imag() == 0.0)
        return format_number(z.real());
    if (z.real() == 0.0)
        return format_number(z.imag()) + "i";
    std::string im = format_number(z.imag());
    if (im.front() != '-')
        im.insert(im.begin(), '+');
    return format_number(z.real()) + im + "i";
}

// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i" with decimal or exponent notation.
[[nodiscard]] inline cplx parse_complex(std::string_view text)
{
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            s.push_back(c);
    auto fail = [&]() -> cplx { throw invalid_params("malformed complex number '" + std::string(text) + "'"); };
    if (s.empty())
        return fail();

    // unit: a bare sign stands for +-1, as in "i" or "2-i"
    auto parse_real = [&](const std::string &part, bool unit) {
        if (unit && (part.empty() || part == "+"))
            return 1.0;
        if (unit && part == "-")
            return -1.0;
        char *end = nullptr;
        const double v = std::strtod(part.c_str(), &end);
        if (end != part.c_str() + part.size() || !std::isfinite(v))
            fail();
        return v;
    };

    if (s.back() != 'i')
        return {parse_real(s, false), 0.0};
    s.pop_back();
    // split at the last sign that is not the leading one or part of an exponent
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos)
        return {0.0, parse_real(s, true)};
    const std::string re = s.substr(0, split);
    const std::string im = s.substr(split);
    if (re.empty())
        return fail();
    return {parse_real(re, false), parse_real(im, true)};
}

// ---------------------------------------------------------------------------
// Level tables

inline constexpr const char *level_csv_header = "index,x,energy,parity,kind,method,residual,bracket_lo,bracket_hi";

inline void write_levels_csv(std::ostream &os, const std::vector<SpectrumLevel> &levels)
{
    os << level_csv_header << '\n';
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto &l = levels[i];
        os << i << ',' << format_number(l.x) << ',' << format_number(l.energy) << ',' << to_string(l.parity) << ','
           << to_string(l.kind) << ',' << to_string(l.method) << ',' << format_number(l.residual) << ','
           << format_number(l.bracket_lo) << ',' << format_number(l.bracket_hi) << '\n';
    }
}

[[nodiscard]] inline LevelParity parse_level_parity(const std::string &s)
{
    if (s == "+")
        return LevelParity::positive;
    if (s == "-")
        return LevelParity::negative;
    if (s == "none")
        return LevelParity::none;
    throw invalid_params("unknown parity '" + s + "'");
}

[[nodiscard]] inline LevelKind parse_level_kind(const std::string &s)
{
    if (s == "regular")
        return LevelKind::regular;
    if (s == "exceptional")
        return LevelKind::exceptional_candidate;
    throw invalid_params("unknown level kind '" + s + "'");
}

[[nodiscard]] inline LevelMethod parse_level_method(const std::string &s)
{
    for (auto m : {LevelMethod::g_zero, LevelMethod::g_general_zero, LevelMethod::oracle})
        if (s == to_string(m))
            return m;
    throw invalid_params("unknown level method '" + s + "'");
}

[[nodiscard]] inline nlohmann::ordered_json params_json(const ModelParams &p)
{
    nlohmann::ordered_json j;
    j["g"] = round_15(p.g);
    j["delta"] = round_15(p.delta);
    j["epsilon"] = round_15(p.epsilon);
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json levels_json(const ModelParams &p, const std::vector<SpectrumLevel> &levels)
{
    nlohmann::ordered_json j;
    j["params"] = params_json(p);
    j["levels"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto &l = levels[i];
        nlohmann::ordered_json row;
        row["index"] = i;
        row["x"] = round_15(l.x);
        row["energy"] = round_15(l.energy);
        row["parity"] = to_string(l.parity);
        row["kind"] = to_string(l.kind);
        row["method"] = to_string(l.method);
        row["residual"] = round_15(l.residual);
        row["bracket_lo"] = round_15(l.bracket_lo);
        row["bracket_hi"] = round_15(l.bracket_hi);
        j["levels"].push_back(row);
    }
    return j;
}

inline void write_levels_json(std::ostream &os, const ModelParams &p, const std::vector<SpectrumLevel> &levels)
{
    os << levels_json(p, levels).dump(2) << '\n';
}

struct LevelTable {
    ModelParams params;
    std::vector<SpectrumLevel> levels;
};

[[nodiscard]] inline LevelTable read_levels_json(std::istream &is)
{
    nlohmann::json j;
    try {
        is >> j;
        LevelTable t;
        const auto &pj = j.at("params");
        t.params = {pj.at("g").get<double>(), pj.at("delta").get<double>(), pj.at("epsilon").get<double>()};
        for (const auto &row : j.at("levels")) {
            SpectrumLevel l;
            l.x = row.at("x").get<double>();
            l.energy = row.at("energy").get<double>();
            l.parity = parse_level_parity(row.at("parity").get<std::string>());
            l.kind = parse_level_kind(row.at("kind").get<std::string>());
            l.method = parse_level_method(row.at("method").get<std::string>());
            l.residual = row.at("residual").is_null() ? NAN : row.at("residual").get<double>();
            l.bracket_lo = row.at("bracket_lo").get<double>();
            l.bracket_hi = row.at("bracket_hi").get<double>();
            t.levels.push_back(l);
        }
        return t;
    } catch (const nlohmann::json::exception &e) {
        throw invalid_params(std::string("malformed level table: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// G traces

struct TraceRow {
    double x = 0.0;
    cplx value;
    bool converged = false;
    int order_used = 0;
};

inline void write_trace_csv(std::ostream &os, const std::vector<TraceRow> &rows)
{
    os << "x,re,im,converged,order_used\n";
    for (const auto &r : rows)
        os << format_number(r.x) << ',' << format_number(r.value.real()) << ',' << format_number(r.value.imag())
           << ',' << (r.converged ? 1 : 0) << ',' << r.order_used << '\n';
}

inline void write_trace_json(std::ostream &os, const ModelParams &p, cplx z0, const std::vector<TraceRow> &rows)
{
    nlohmann::ordered_json j;
    j["params"] = params_json(p);
    j["z0"] = format_complex(z0);
    j["samples"] = nlohmann::ordered_json::array();
    for (const auto &r : rows) {
        nlohmann::ordered_json row;
        row["x"] = round_15(r.x);
        row["re"] = round_15(r.value.real());
        row["im"] = round_15(r.value.imag());
        row["converged"] = r.converged;
        row["order_used"] = r.order_used;
        j["samples"].push_back(row);
    }
    os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison against the oracle

struct CompareRow {
    double x_scan = NAN;
    double x_oracle = NAN;
    LevelParity parity = LevelParity::none;
    LevelKind kind = LevelKind::regular;

    [[nodiscard]] double abs_dx() const { return std::abs(x_scan - x_oracle); }
};

inline void write_compare_csv(std::ostream &os, const std::vector<CompareRow> &rows)
{
    os << "index,x_scan,x_oracle,abs_dx,parity,kind\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto &r = rows[i];
        os << i << ',' << format_number(r.x_scan) << ',' << format_number(r.x_oracle) << ','
           << format_number(r.abs_dx()) << ',' << to_string(r.parity) << ',' << to_string(r.kind) << '\n';
    }
}

inline void write_compare_json(std::ostream &os, const ModelParams &p, const std::vector<CompareRow> &rows,
                               double worst, bool ok)
{
    nlohmann::ordered_json j;
    j["params"] = params_json(p);
    j["worst_abs_dx"] = round_15(worst);
    j["ok"] = ok;
    j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto &r = rows[i];
        nlohmann::ordered_json row;
        row["index"] = i;
        row["x_scan"] = round_15(r.x_scan);
        row["x_oracle"] = round_15(r.x_oracle);
        row["abs_dx"] = round_15(r.abs_dx());
        row["parity"] = to_string(r.parity);
        row["kind"] = to_string(r.kind);
        j["rows"].push_back(row);
    }
    os << j.dump(2) << '\n';
}

} // namespace rabi
