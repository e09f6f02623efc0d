#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rabi/model.hpp"
#include "rabi/numeric.hpp"
#include "rabi/series.hpp"
#include "rabi/system.hpp"

namespace rabi {

enum class GKind : std::int8_t { positive, negative, eps };

[[nodiscard]] inline GKind kind_of(Parity p) noexcept
{
    return p == Parity::positive ? GKind::positive : GKind::negative;
}

[[nodiscard]] inline const char *to_string(GKind k) noexcept
{
    switch (k) {
    case GKind::positive:
        return "+";
    case GKind::negative:
        return "-";
    case GKind::eps:
        return "eps";
    }
    return "?";
}

struct GEvaluation {
    cplx value;
    double x = 0.0;
    cplx z = 0.0;
    GKind kind = GKind::positive;
    int order_used = 0;
    bool converged = false;
    // Heuristic absolute rounding error: a small multiple of the unit roundoff
    // times the sum of term magnitudes.
    double rounding_bound = 0.0;

    // The sign/phase of value is trustworthy.
    [[nodiscard]] bool certified() const noexcept { return converged && std::abs(value) > rounding_bound; }
};

struct GOptions {
    SeriesOptions series{};
    // Fixed truncation order; 0 lets the evaluator choose (tail criterion inside D0,
    // overflow-limited order outside).
    int order = 0;
};

inline constexpr double rounding_safety = 8.0;

// Truncation order used for z outside D0 where the series diverges off the
// spectrum: as large as n_max allows while (r/2g)^N stays far from overflow.
[[nodiscard]] inline int order_outside_d0(double g, cplx z, int n_max)
{
    const double r = std::max(std::abs(z + g), std::abs(g - z));
    const double growth = std::log10(r / (2.0 * g));
    if (growth <= 0.0)
        return n_max;
    return std::clamp(static_cast<int>(200.0 / growth), 16, n_max);
}

namespace detail {

[[nodiscard]] inline double evaluation_radius(double g, cplx z)
{
    return std::max(std::abs(z + g), std::abs(g - z));
}

// base^n kept as mantissa * 2^exponent so that large |base|^n never overflows
// before it meets a small coefficient.
template <class Real>
class scaled_power {
public:
    explicit scaled_power(const complex_t<Real> &base) : base_(base), mant_(Real(1)) {}

    [[nodiscard]] complex_t<Real> times(const Real &k) const
    {
        using std::ldexp;
        const complex_t<Real> m = mant_ * k;
        return complex_t<Real>(ldexp(Real(m.real()), exponent_), ldexp(Real(m.imag()), exponent_));
    }

    void next()
    {
        using std::abs;
        mant_ *= base_;
        const Real mag = abs(mant_);
        if (mag > Real(0x1p200) || (mag < Real(0x1p-200) && mag > Real(0))) {
            using std::frexp;
            using std::ldexp;
            int e = 0;
            (void)frexp(mag, &e);
            mant_ = complex_t<Real>(ldexp(Real(mant_.real()), -e), ldexp(Real(mant_.imag()), -e));
            exponent_ += e;
        }
    }

private:
    complex_t<Real> base_;
    complex_t<Real> mant_;
    int exponent_ = 0;
};

// G(x;z) = phi2(-z) - phi1(z) from a precomputed series; z = 0 is the plain G-function.
template <class Real>
GEvaluation g_from_series(const ModelParams &p, const SeriesExpansion<Real> &s, int delta_sign, cplx z)
{
    using C = complex_t<Real>;
    using std::abs;
    using std::exp;
    const C zc = from_complex_double<Real>(z);
    const Real g(p.g);
    const Real xr(s.x);
    const C a = C(g) - zc; // phi2(-z) expands in (g - z)
    const C b = zc + C(g); // phi1(z) expands in (z + g)

    compensated_complex_sum<Real> s2;
    compensated_complex_sum<Real> s1;
    Real mag2(0);
    Real mag1(0);
    scaled_power<Real> pa(a);
    scaled_power<Real> pb(b);
    for (int n = 0; n <= s.order(); ++n) {
        const Real &k = s.coeffs[n];
        const C t2 = pa.times(k);
        const C t1 = pb.times(k / (xr - Real(n)));
        s2 += t2;
        s1 += t1;
        mag2 += abs(t2);
        mag1 += abs(t1);
        pa.next();
        pb.next();
    }
    const C e_plus = exp(zc * g);
    const C e_minus = exp(-(zc * g));
    const Real d = Real(delta_sign) * Real(p.delta);
    const C value = e_plus * s2.value() - e_minus * s1.value() * d;

    GEvaluation out;
    out.value = to_complex_double<Real>(value);
    out.x = s.x;
    out.z = z;
    out.kind = delta_sign > 0 ? GKind::positive : GKind::negative;
    out.order_used = s.order();
    out.converged = s.converged && in_d0(p.g, z);
    const double scale = std::abs(to_double<Real>(abs(e_plus) * mag2)) +
                         std::abs(p.delta) * to_double<Real>(abs(e_minus) * mag1);
    out.rounding_bound = rounding_safety * real_traits<Real>::epsilon() * scale;
    return out;
}

} // namespace detail

// Series used by eval_G_general at (x, z): tail criterion at the evaluation radius
// inside D0, a fixed large order outside.
template <class Real = double>
[[nodiscard]] SeriesExpansion<Real> series_for(const ModelParams &p, double x, cplx z, const GOptions &opt = {})
{
    SeriesOptions so = opt.series;
    if (opt.order > 0) {
        so.fixed_order = opt.order;
    } else if (in_d0(p.g, z)) {
        so.radius = detail::evaluation_radius(p.g, z);
    } else {
        so.fixed_order = order_outside_d0(p.g, z, so.n_max);
        so.radius = detail::evaluation_radius(p.g, z);
    }
    return compute_K<Real>(p, x, so);
}

// Generalized G-function G_{+-}(x; z) = phi2(-z) - phi1(z).
template <class Real = double>
[[nodiscard]] GEvaluation eval_G_general(const ModelParams &p, Parity parity, double x, cplx z,
                                         const GOptions &opt = {})
{
    p.validate();
    if (std::abs(z - p.g) == 0.0 || std::abs(z + p.g) == 0.0)
        throw singular_point("G(x;z) is undefined at the regular singular points z = +-g");
    const auto s = series_for<Real>(p, x, z, opt);
    return detail::g_from_series(p, s, sign_of(parity), z);
}

// G(x; z) along a set of z at constant x, all at the truncation order the tail
// criterion selects at z = 0 so that the samples are mutually comparable.
template <class Real = double>
[[nodiscard]] std::vector<GEvaluation> eval_G_z_sweep(const ModelParams &p, Parity parity, double x,
                                                      std::span<const cplx> zs, const GOptions &opt = {})
{
    p.validate();
    GOptions go = opt;
    if (go.order <= 0)
        go.order = compute_K<Real>(p, x, go.series).order();
    const auto s = series_for<Real>(p, x, 0.0, go);
    std::vector<GEvaluation> out;
    out.reserve(zs.size());
    for (const cplx z : zs) {
        if (std::abs(z - p.g) == 0.0 || std::abs(z + p.g) == 0.0)
            throw singular_point("G(x;z) is undefined at the regular singular points z = +-g");
        out.push_back(detail::g_from_series(p, s, sign_of(parity), z));
    }
    return out;
}

// Plain G-function sum K_n (1 -+ delta/(x-n)) g^n; identical to eval_G_general at z = 0.
template <class Real = double>
[[nodiscard]] GEvaluation eval_G(const ModelParams &p, Parity parity, double x, const GOptions &opt = {})
{
    return eval_G_general<Real>(p, parity, x, cplx(0.0, 0.0), opt);
}

// G_eps(x) = delta^2 Rbar^+ Rbar^- - R^+ R^-.
template <class Real = double>
[[nodiscard]] GEvaluation eval_G_eps(const ModelParams &p, double x, const GOptions &opt = {})
{
    p.validate();
    SeriesOptions so = opt.series;
    if (opt.order > 0)
        so.fixed_order = opt.order;
    const auto kp = compute_K_eps<Real>(p, x, EpsBranch::plus, so);
    const auto km = compute_K_eps<Real>(p, x, EpsBranch::minus, so);

    using std::abs;
    const Real g(p.g);
    const Real xr(x);
    const Real eps(p.epsilon);
    auto sums = [&](const SeriesExpansion<Real> &s, const Real &shift) {
        compensated_sum<Real> r;
        compensated_sum<Real> rbar;
        Real mag(0);
        Real magbar(0);
        Real gn(1);
        for (int n = 0; n <= s.order(); ++n) {
            const Real t = s.coeffs[n] * gn;
            const Real tbar = t / (xr - Real(n) + shift);
            r += t;
            rbar += tbar;
            mag += abs(t);
            magbar += abs(tbar);
            gn *= g;
        }
        return std::array<Real, 4>{r.value(), rbar.value(), mag, magbar};
    };
    const auto plus = sums(kp, eps);
    const auto minus = sums(km, -eps);
    const Real d2 = Real(p.delta) * Real(p.delta);
    const Real value = d2 * plus[1] * minus[1] - plus[0] * minus[0];

    GEvaluation out;
    out.value = cplx(to_double<Real>(value), 0.0);
    out.x = x;
    out.kind = GKind::eps;
    out.order_used = std::max(kp.order(), km.order());
    out.converged = kp.converged && km.converged;
    const double scale = to_double<Real>(d2 * plus[3] * minus[3] + plus[2] * minus[2]);
    out.rounding_bound = rounding_safety * real_traits<Real>::epsilon() * scale;
    return out;
}

// ---------------------------------------------------------------------------
// Residues

struct ResidueOptions {
    double h0 = 1e-2;
    int levels = 7; // h_k = h0 2^-k, k = 0..levels-1
    double rtol = 1e-6;
    double atol = 1e-9;
    GOptions g{};
};

struct ResidueEstimate {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

// Richardson extrapolation of (x - pole) G(x) sampled symmetrically, which is even in h.
template <class Eval>
ResidueEstimate richardson_residue(double pole, const ResidueOptions &opt, Eval &&eval)
{
    if (opt.levels < 2)
        throw invalid_params("residue extrapolation needs at least two levels");
    std::vector<std::vector<double>> table(opt.levels);
    double h = opt.h0;
    for (int k = 0; k < opt.levels; ++k, h *= 0.5) {
        const double a = 0.5 * h * (eval(pole + h) - eval(pole - h));
        table[k].push_back(a);
        double factor = 4.0;
        for (int j = 1; j <= k; ++j, factor *= 4.0)
            table[k].push_back(table[k][j - 1] + (table[k][j - 1] - table[k - 1][j - 1]) / (factor - 1.0));
    }
    const int last = opt.levels - 1;
    ResidueEstimate est;
    est.value = table[last][last];
    est.error = std::abs(table[last][last] - table[last - 1][last - 1]);
    if (!std::isfinite(est.value) || est.error > opt.atol + opt.rtol * std::abs(est.value))
        throw no_convergence("residue extrapolation did not settle (estimate " + std::to_string(est.value) +
                             ", error " + std::to_string(est.error) + ")");
    return est;
}

} // namespace detail

// Residue of G_{+-} at x = n.
[[nodiscard]] inline ResidueEstimate residue_at_pole(const ModelParams &p, Parity parity, int n,
                                                     const ResidueOptions &opt = {})
{
    if (n < 0)
        throw invalid_params("pole index must be >= 0");
    return detail::richardson_residue(double(n), opt, [&](double x) {
        return eval_G(p, parity, x, opt.g).value.real();
    });
}

// Residue of G_eps at x = n - eps (branch plus) or x = n + eps (branch minus).
[[nodiscard]] inline ResidueEstimate residue_at_pole_eps(const ModelParams &p, EpsBranch branch, int n,
                                                         const ResidueOptions &opt = {})
{
    if (n < 0)
        throw invalid_params("pole index must be >= 0");
    const double pole = n - static_cast<int>(branch) * p.epsilon;
    return detail::richardson_residue(pole, opt, [&](double x) { return eval_G_eps(p, x, opt.g).value.real(); });
}

} // namespace rabi
