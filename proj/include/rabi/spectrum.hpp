#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rabi/gfunctions.hpp"
#include "rabi/model.hpp"
#include "rabi/oracle.hpp"

namespace rabi {

enum class LevelParity : std::int8_t { positive, negative, none };
enum class LevelKind : std::int8_t { regular, exceptional_candidate };
enum class LevelMethod : std::int8_t { g_zero, g_general_zero, oracle };

[[nodiscard]] inline const char *to_string(LevelParity p) noexcept
{
    switch (p) {
    case LevelParity::positive:
        return "+";
    case LevelParity::negative:
        return "-";
    case LevelParity::none:
        return "none";
    }
    return "?";
}
[[nodiscard]] inline const char *to_string(LevelKind k) noexcept
{
    return k == LevelKind::regular ? "regular" : "exceptional";
}
[[nodiscard]] inline const char *to_string(LevelMethod m) noexcept
{
    switch (m) {
    case LevelMethod::g_zero:
        return "G_zero";
    case LevelMethod::g_general_zero:
        return "G_general_zero";
    case LevelMethod::oracle:
        return "oracle";
    }
    return "?";
}

[[nodiscard]] inline LevelParity level_parity(Parity p) noexcept
{
    return p == Parity::positive ? LevelParity::positive : LevelParity::negative;
}

struct SpectrumLevel {
    double x = 0.0;
    double energy = 0.0;
    LevelParity parity = LevelParity::none;
    LevelKind kind = LevelKind::regular;
    LevelMethod method = LevelMethod::g_zero;
    double residual = 0.0; // |G| at the root
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

enum class Precision : std::int8_t { automatic, double_precision, extended };

struct ScanOptions {
    int grid_per_interval = 64;
    double tol_x = 1e-12;
    double pole_exclusion = default_pole_exclusion;
    // Unit intervals starting at or above this x are scanned through the
    // generalized G-function at an imaginary point.
    double large_x_threshold = 30.0;
    bool delegate_large_x = true;
    // Explicit evaluation point; nonzero selects joint-zero scanning everywhere.
    std::optional<cplx> z0;
    Precision precision = Precision::automatic;
    double tol_joint = 1e-6;
    GOptions g{};
    // Number of concurrent workers for interval scans; output does not depend on it.
    int workers = 1;
};

// A real-part zero rejected by the joint-zero check. ratio is |Im G| over its
// bracket scale; infinity marks a joint zero that belongs to the other parity.
struct RejectedZero {
    double x = 0.0;
    double ratio = 0.0;
};

struct ScanReport {
    std::vector<SpectrumLevel> levels;
    std::vector<RejectedZero> rejected;
};

// Evaluation point used above the large-x threshold.
inline constexpr cplx large_x_z0{0.0, 5.0};

namespace detail {

using real_fn = std::function<double(double)>;

// Bisection on a bracket with f(lo), f(hi) of opposite sign.
inline std::pair<double, double> bisect(const real_fn &f, double lo, double hi, double flo, double tol_x)
{
    for (int it = 0; it < 200 && hi - lo > tol_x; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double fm = f(mid);
        if (fm == 0.0)
            return {mid, mid};
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

struct Interval {
    double lo;
    double hi;
};

// Subintervals of [x_min, x_max] free of the given poles (with exclusion windows).
inline std::vector<Interval> pole_free_intervals(double x_min, double x_max, std::vector<double> poles, double excl)
{
    std::sort(poles.begin(), poles.end());
    std::vector<Interval> out;
    double start = x_min;
    for (double pole : poles) {
        if (pole + excl <= start)
            continue;
        if (pole - excl >= x_max)
            break;
        if (pole - excl > start)
            out.push_back({start, pole - excl});
        start = std::max(start, pole + excl);
    }
    if (start < x_max)
        out.push_back({start, x_max});
    return out;
}

// Sign changes of f on a uniform grid over iv, refined by bisection.
template <class OnBracket>
void scan_sign_changes(const real_fn &f, Interval iv, int cells, OnBracket &&on_bracket)
{
    cells = std::max(cells, 1);
    std::vector<double> xs(cells + 1);
    std::vector<double> fs(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        xs[i] = i == cells ? iv.hi : iv.lo + (iv.hi - iv.lo) * i / cells;
        fs[i] = f(xs[i]);
    }
    for (int i = 0; i < cells; ++i) {
        if (fs[i] == 0.0) {
            on_bracket(xs[i], xs[i], fs[i]);
            continue;
        }
        if (i + 1 == cells && fs[i + 1] == 0.0) {
            on_bracket(xs[i + 1], xs[i + 1], fs[i + 1]);
            continue;
        }
        if ((fs[i] > 0.0) != (fs[i + 1] > 0.0) && std::isfinite(fs[i]) && std::isfinite(fs[i + 1]))
            on_bracket(xs[i], xs[i + 1], fs[i]);
    }
}

inline void merge_sorted(std::vector<SpectrumLevel> &levels, double tol_x)
{
    std::sort(levels.begin(), levels.end(), [](const SpectrumLevel &a, const SpectrumLevel &b) {
        if (a.x != b.x)
            return a.x < b.x;
        return a.parity < b.parity;
    });
    std::vector<SpectrumLevel> out;
    for (const auto &l : levels) {
        if (!out.empty() && out.back().parity == l.parity && std::abs(out.back().x - l.x) <= tol_x)
            continue;
        out.push_back(l);
    }
    levels = std::move(out);
}

// Runs fn over intervals on up to `workers` threads; results are concatenated in interval order.
template <class Fn>
ScanReport run_intervals(const std::vector<Interval> &ivs, int workers, Fn &&fn)
{
    std::vector<ScanReport> parts(ivs.size());
    if (workers <= 1 || ivs.size() < 2) {
        for (std::size_t i = 0; i < ivs.size(); ++i)
            parts[i] = fn(ivs[i]);
    } else {
        std::vector<std::future<void>> futs;
        const std::size_t w = std::min<std::size_t>(workers, ivs.size());
        for (std::size_t t = 0; t < w; ++t)
            futs.push_back(std::async(std::launch::async, [&, t] {
                for (std::size_t i = t; i < ivs.size(); i += w)
                    parts[i] = fn(ivs[i]);
            }));
        for (auto &f : futs)
            f.get();
    }
    ScanReport out;
    for (auto &p : parts) {
        out.levels.insert(out.levels.end(), p.levels.begin(), p.levels.end());
        out.rejected.insert(out.rejected.end(), p.rejected.begin(), p.rejected.end());
    }
    return out;
}

inline int cells_for(const Interval &iv, double unit, int grid_per_interval)
{
    return std::max(8, static_cast<int>(std::ceil(grid_per_interval * (iv.hi - iv.lo) / unit)));
}

struct Refined {
    double x;
    double residual;
};

// Bisection of a grid bracket. In automatic precision a double-precision root whose
// rounding-limited uncertainty (rounding bound over the bracket slope) exceeds tol_x
// is refined again in extended precision.
template <class EvalDouble, class EvalExtended>
Refined refine_root(EvalDouble &&eval_d, EvalExtended &&eval_e, Precision precision, double lo, double hi,
                    double flo, double tol_x)
{
    const real_fn fd = [&](double x) { return eval_d(x).value.real(); };
    const real_fn fe = [&](double x) { return eval_e(x).value.real(); };
    if (lo == hi) {
        const auto ev = precision == Precision::extended ? eval_e(lo) : eval_d(lo);
        return {lo, std::abs(ev.value)};
    }
    auto with_extended = [&] {
        const auto [a, b] = bisect(fe, lo, hi, fe(lo), tol_x);
        const double x = 0.5 * (a + b);
        return Refined{x, std::abs(eval_e(x).value)};
    };
    if (precision == Precision::extended)
        return with_extended();
    const auto [a, b] = bisect(fd, lo, hi, flo, tol_x);
    const double x = 0.5 * (a + b);
    const auto ev = eval_d(x);
    if (precision == Precision::automatic) {
        const double slope = std::abs(fd(hi) - flo) / (hi - lo);
        const bool uncertain = !ev.converged || !(slope > 0.0) || ev.rounding_bound / slope > tol_x;
        if (uncertain)
            return with_extended();
    }
    return {x, std::abs(ev.value)};
}

} // namespace detail

struct JointZeroOptions {
    double tol_x = 1e-12;
    double tol_joint = 1e-6;
    int scale_samples = 9;
    // Grid cells per unit of x used to bracket sign changes of Re G inside the bracket.
    int cells_per_unit = 32;
    double pole_exclusion = default_pole_exclusion;
    GOptions g{};
};

namespace detail {

// Outside D0 the truncated series of both parities shares its divergent part, so
// G_+(x; z0) also has joint zeros at negative-parity levels. The parity of a located
// root is decided by the convergent z = 0 G-functions in extended precision.
// Returns |G_parity(x)| / |G_other(x)|, or 0 when the check cannot be made.
inline double parity_ratio(const ModelParams &p, Parity parity, double x)
{
    try {
        const Parity other = parity == Parity::positive ? Parity::negative : Parity::positive;
        const double own = std::abs(eval_G<extended>(p, parity, x).value);
        const double opp = std::abs(eval_G<extended>(p, other, x).value);
        return opp > 0.0 ? own / opp : (own > 0.0 ? INFINITY : 0.0);
    } catch (const rabi_error &) {
        return 0.0;
    }
}

} // namespace detail

// Zero of Re G(x; z0) in the bracket, accepted only if Im G vanishes there too
// (relative to the median |Im G| over the bracket) and, for z0 outside D0, the
// root belongs to the requested parity. Integer poles inside the bracket are
// excluded; if several joint zeros qualify the lowest is returned.
[[nodiscard]] inline SpectrumLevel find_joint_zero(const ModelParams &p, Parity parity, cplx z0, double x_lo,
                                                   double x_hi, const JointZeroOptions &opt = {})
{
    p.validate();
    if (!(x_lo < x_hi))
        throw invalid_params("joint-zero bracket must satisfy x_lo < x_hi");

    // one truncation order for the whole bracket keeps Re G continuous in x
    GOptions go = opt.g;
    if (go.order <= 0) {
        if (in_d0(p.g, z0))
            go.order = series_for(p, 0.5 * (x_lo + x_hi), z0, go).order();
        else
            go.order = order_outside_d0(p.g, z0, go.series.n_max);
    }
    go.series.pole_exclusion = opt.pole_exclusion;
    auto eval = [&](double x) { return eval_G_general(p, parity, x, z0, go); };
    const detail::real_fn re = [&](double x) { return eval(x).value.real(); };

    std::vector<double> poles;
    for (int n = std::max(0, static_cast<int>(std::floor(x_lo))); n <= static_cast<int>(std::ceil(x_hi)); ++n)
        poles.push_back(n);
    const auto ivs = detail::pole_free_intervals(x_lo, x_hi, poles, opt.pole_exclusion * (1.0 + 1e-6));

    std::vector<std::pair<double, double>> brackets;
    for (const auto &iv : ivs) {
        const int cells = std::max(1, static_cast<int>(std::ceil(opt.cells_per_unit * (iv.hi - iv.lo))));
        detail::scan_sign_changes(re, iv, cells, [&](double lo, double hi, double flo) {
            if (lo == hi)
                brackets.emplace_back(lo, hi);
            else
                brackets.push_back(detail::bisect(re, lo, hi, flo, opt.tol_x));
        });
    }
    if (brackets.empty())
        throw invalid_params("joint-zero bracket does not straddle a sign change of Re G");

    std::vector<double> ims;
    for (const auto &iv : ivs)
        for (int i = 0; i < opt.scale_samples; ++i)
            ims.push_back(std::abs(eval(iv.lo + (iv.hi - iv.lo) * i / std::max(1, opt.scale_samples - 1)).value.imag()));
    std::nth_element(ims.begin(), ims.begin() + ims.size() / 2, ims.end());
    const double scale = ims[ims.size() / 2];

    double worst_root = brackets.front().first;
    double best_ratio = INFINITY;
    for (const auto &[lo, hi] : brackets) {
        const double root = 0.5 * (lo + hi);
        const auto at_root = eval(root);
        const double im = std::abs(at_root.value.imag());
        const double ratio = scale > 0.0 ? im / scale : (im == 0.0 ? 0.0 : INFINITY);
        const bool joint = im <= opt.tol_joint * scale;
        const bool right_parity = in_d0(p.g, z0) || detail::parity_ratio(p, parity, root) <= 1.0;
        if (joint && right_parity) {
            SpectrumLevel lvl;
            lvl.x = root;
            lvl.energy = energy_from_x(p, root);
            lvl.parity = level_parity(parity);
            lvl.kind = LevelKind::regular;
            lvl.method = LevelMethod::g_general_zero;
            lvl.residual = std::abs(at_root.value);
            lvl.bracket_lo = x_lo;
            lvl.bracket_hi = x_hi;
            return lvl;
        }
        const double reported = joint ? INFINITY : ratio;
        if (reported < best_ratio || best_ratio == INFINITY) {
            best_ratio = reported;
            worst_root = root;
        }
    }
    throw no_joint_zero(worst_root, best_ratio);
}

// Regular spectrum of one parity sector in [x_min, x_max] as zeros of G.
[[nodiscard]] inline ScanReport scan_regular_report(const ModelParams &p, Parity parity, double x_min, double x_max,
                                                    const ScanOptions &opt = {})
{
    p.validate();
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
        throw invalid_params("scan range must satisfy x_min < x_max");
    if (opt.grid_per_interval < 8)
        throw invalid_params("grid_per_interval must be >= 8");

    std::vector<double> poles;
    for (int n = std::max(0, static_cast<int>(std::floor(x_min))); n <= static_cast<int>(std::ceil(x_max)); ++n)
        poles.push_back(n);
    const auto ivs = detail::pole_free_intervals(x_min, x_max, poles, opt.pole_exclusion * (1.0 + 1e-6));

    auto scan_one = [&](const detail::Interval &iv) {
        ScanReport rep;
        const int cells = detail::cells_for(iv, 1.0, opt.grid_per_interval);

        std::optional<cplx> z0;
        if (opt.z0 && *opt.z0 != cplx(0.0, 0.0))
            z0 = *opt.z0;
        else if (!opt.z0 && opt.delegate_large_x && opt.precision == Precision::automatic &&
                 std::floor(iv.lo) >= opt.large_x_threshold)
            z0 = large_x_z0;

        if (z0) {
            JointZeroOptions jo;
            jo.tol_x = opt.tol_x;
            jo.tol_joint = opt.tol_joint;
            jo.g = opt.g;
            if (jo.g.order <= 0 && !in_d0(p.g, *z0))
                jo.g.order = order_outside_d0(p.g, *z0, jo.g.series.n_max);
            const detail::real_fn re = [&](double x) {
                return eval_G_general(p, parity, x, *z0, jo.g).value.real();
            };
            detail::scan_sign_changes(re, iv, cells, [&](double lo, double hi, double) {
                try {
                    if (lo == hi)
                        rep.levels.push_back(find_joint_zero(p, parity, *z0, lo - opt.tol_x, hi + opt.tol_x, jo));
                    else
                        rep.levels.push_back(find_joint_zero(p, parity, *z0, lo, hi, jo));
                } catch (const no_joint_zero &e) {
                    rep.rejected.push_back({e.x(), e.ratio()});
                } catch (const invalid_params &) {
                    // bracket lost its sign change at the refined order; not a level
                }
            });
            return rep;
        }

        auto eval_d = [&](double x) { return eval_G(p, parity, x, opt.g); };
        auto eval_e = [&](double x) { return eval_G<extended>(p, parity, x, opt.g); };
        const bool ext = opt.precision == Precision::extended;
        const detail::real_fn f = [&](double x) { return ext ? eval_e(x).value.real() : eval_d(x).value.real(); };
        detail::scan_sign_changes(f, iv, cells, [&](double lo, double hi, double flo) {
            const auto r = detail::refine_root(eval_d, eval_e, opt.precision, lo, hi, flo, opt.tol_x);
            SpectrumLevel lvl;
            lvl.x = r.x;
            lvl.energy = energy_from_x(p, lvl.x);
            lvl.parity = level_parity(parity);
            lvl.method = LevelMethod::g_zero;
            lvl.residual = r.residual;
            lvl.bracket_lo = lo;
            lvl.bracket_hi = hi;
            rep.levels.push_back(lvl);
        });
        return rep;
    };

    auto rep = detail::run_intervals(ivs, opt.workers, scan_one);
    detail::merge_sorted(rep.levels, opt.tol_x);
    return rep;
}

[[nodiscard]] inline std::vector<SpectrumLevel> scan_regular(const ModelParams &p, Parity parity, double x_min,
                                                             double x_max, const ScanOptions &opt = {})
{
    return scan_regular_report(p, parity, x_min, x_max, opt).levels;
}

// Zeros of G_eps in [x_min, x_max]; intervals are delimited by the poles n +- eps.
[[nodiscard]] inline std::vector<SpectrumLevel> scan_eps(const ModelParams &p, double x_min, double x_max,
                                                         const ScanOptions &opt = {})
{
    p.validate();
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
        throw invalid_params("scan range must satisfy x_min < x_max");
    if (opt.grid_per_interval < 8)
        throw invalid_params("grid_per_interval must be >= 8");

    std::vector<double> poles;
    const double eps = std::abs(p.epsilon);
    for (int n = static_cast<int>(std::floor(x_min - eps)) - 1; n <= static_cast<int>(std::ceil(x_max + eps)) + 1;
         ++n) {
        if (n < 0)
            continue;
        poles.push_back(n - eps);
        poles.push_back(n + eps);
    }
    const auto ivs = detail::pole_free_intervals(x_min, x_max, poles, opt.pole_exclusion * (1.0 + 1e-6));
    auto scan_one = [&](const detail::Interval &iv) {
        ScanReport rep;
        auto eval_d = [&](double x) { return eval_G_eps(p, x, opt.g); };
        auto eval_e = [&](double x) { return eval_G_eps<extended>(p, x, opt.g); };
        const bool ext = opt.precision == Precision::extended;
        const detail::real_fn f = [&](double x) { return ext ? eval_e(x).value.real() : eval_d(x).value.real(); };
        detail::scan_sign_changes(f, iv, detail::cells_for(iv, 1.0, opt.grid_per_interval),
                                  [&](double lo, double hi, double flo) {
                                      const auto r =
                                          detail::refine_root(eval_d, eval_e, opt.precision, lo, hi, flo, opt.tol_x);
                                      SpectrumLevel lvl;
                                      lvl.x = r.x;
                                      lvl.energy = energy_from_x(p, lvl.x);
                                      lvl.parity = LevelParity::none;
                                      lvl.method = LevelMethod::g_zero;
                                      lvl.residual = r.residual;
                                      lvl.bracket_lo = lo;
                                      lvl.bracket_hi = hi;
                                      rep.levels.push_back(lvl);
                                  });
        return rep;
    };
    auto rep = detail::run_intervals(ivs, opt.workers, scan_one);
    detail::merge_sorted(rep.levels, opt.tol_x);
    return rep.levels;
}

// ---------------------------------------------------------------------------
// Exceptional (Juddian) levels

inline constexpr double degeneracy_tol = 1e-8;
inline constexpr double decoupled_tol = 1e-6;

// Oracle-confirmed doubly degenerate pairs at integer x in (0, x_max).
[[nodiscard]] inline std::vector<SpectrumLevel> exceptional_levels(const ModelParams &p, double x_max,
                                                                   const OracleResult &oracle)
{
    std::vector<SpectrumLevel> out;
    if (!p.symmetric())
        return out;
    for (int n = 0; n < x_max; ++n) {
        const double target = n - p.g * p.g;
        if (oracle.eigenvalues.empty() || oracle.eigenvalues.back() < target + 0.5)
            break;
        bool plus = false;
        bool minus = false;
        for (std::size_t i = 0; i < oracle.eigenvalues.size(); ++i) {
            if (std::abs(oracle.eigenvalues[i] - target) < degeneracy_tol) {
                (oracle.parity[i] > 0.0 ? plus : minus) = true;
            }
        }
        if (plus && minus) {
            for (auto par : {LevelParity::positive, LevelParity::negative}) {
                SpectrumLevel lvl;
                lvl.x = n;
                lvl.energy = target;
                lvl.parity = par;
                lvl.kind = LevelKind::exceptional_candidate;
                lvl.method = LevelMethod::oracle;
                lvl.bracket_lo = lvl.bracket_hi = n;
                out.push_back(lvl);
            }
        }
    }
    return out;
}

enum class ScanParameter : std::int8_t { delta, g };

struct ExceptionalPoint {
    double param_value = 0.0;
    double gap = 0.0;
    double residue_plus = 0.0;
    double residue_minus = 0.0;
    bool confirmed = false;
};

struct ExceptionalOptions {
    int samples = 41;
    double param_tol = 1e-13;
    double residue_tol = 1e-6;
    OracleOptions oracle{0}; // n_fock 0 selects suggested_n_fock
};

// Scans g or delta over [lo, hi] for parity crossings at x = n confirmed by the
// oracle gap and by vanishing residues of G_{+-} at the pole x = n.
// lo == hi performs a point query.
[[nodiscard]] inline std::vector<ExceptionalPoint> find_exceptional(const ModelParams &base, int n, ScanParameter param,
                                                                    double lo, double hi,
                                                                    const ExceptionalOptions &opt = {})
{
    if (n < 1)
        throw invalid_params("exceptional search needs n >= 1");
    if (hi < lo)
        throw invalid_params("exceptional search range must satisfy lo <= hi");

    auto at = [&](double v) {
        ModelParams p = base;
        (param == ScanParameter::delta ? p.delta : p.g) = v;
        return p;
    };
    auto oracle_opts = [&](const ModelParams &p) {
        OracleOptions o = opt.oracle;
        if (o.n_fock <= 0)
            o.n_fock = suggested_n_fock(p, n + 2.0);
        return o;
    };
    auto gap_at = [&](double v) {
        const auto p = at(v);
        return degeneracy_gap(p, n, oracle_opts(p)).gap;
    };
    auto confirm = [&](double v, double gap) {
        ExceptionalPoint pt;
        pt.param_value = v;
        pt.gap = gap;
        const auto p = at(v);
        // delta = 0 degenerates every level and is not a Juddian point
        if (std::abs(gap) < degeneracy_tol && std::abs(p.delta) > decoupled_tol) {
            try {
                pt.residue_plus = residue_at_pole(p, Parity::positive, n).value;
                pt.residue_minus = residue_at_pole(p, Parity::negative, n).value;
                pt.confirmed =
                    std::abs(pt.residue_plus) < opt.residue_tol && std::abs(pt.residue_minus) < opt.residue_tol;
            } catch (const no_convergence &) {
                pt.confirmed = false;
            }
        }
        return pt;
    };

    std::vector<ExceptionalPoint> found;
    if (lo == hi) {
        const auto pt = confirm(lo, gap_at(lo));
        if (pt.confirmed)
            found.push_back(pt);
    } else {
        const int samples = std::max(opt.samples, 2);
        std::vector<double> vs(samples);
        std::vector<double> gs(samples);
        for (int i = 0; i < samples; ++i) {
            vs[i] = lo + (hi - lo) * i / (samples - 1);
            gs[i] = gap_at(vs[i]);
        }
        for (int i = 0; i + 1 < samples; ++i) {
            if (gs[i] == 0.0) {
                const auto pt = confirm(vs[i], gs[i]);
                if (pt.confirmed)
                    found.push_back(pt);
                continue;
            }
            if ((gs[i] > 0.0) == (gs[i + 1] > 0.0))
                continue;
            const detail::real_fn f = gap_at;
            const auto [a, b] = detail::bisect(f, vs[i], vs[i + 1], gs[i], opt.param_tol * std::max(1.0, vs[i]));
            const double v = std::abs(f(a)) < std::abs(f(b)) ? a : b;
            const auto pt = confirm(v, f(v));
            if (pt.confirmed)
                found.push_back(pt);
        }
    }
    if (found.empty())
        throw not_found("no exceptional point at x=" + std::to_string(n) + " in the scanned range");
    return found;
}

} // namespace rabi
