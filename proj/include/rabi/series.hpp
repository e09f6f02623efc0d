#pragma once

// Coefficients K_n(x) of the local solutions around z = -g.
//
// Substituting phi2(z) = exp(-g z) sum K_n (z+g)^n and
// phi1(z) = exp(-g z) sum delta K_n/(x-n) (z+g)^n into the symmetric system
// gives
//
//   (n+1) K_{n+1} = f_n(x) K_n - K_{n-1},
//   f_n(x) = 2g + (n - x + delta^2/(x-n)) / (2g),       K_0 = 1.
//
// In the broken-symmetry model the system splits into the pairs
// (phi1, phi2bar) and (phi2, phi1bar). With phi2bar <- K_n^-, phi1 <- delta K_n^-/(x-eps-n)
// and phi1bar <- K_n^+, phi2 <- delta K_n^+/(x+eps-n) the same substitution gives
//
//   f_n^{+-}(x) = 2g + (n - x +- eps + delta^2/(x +- eps - n)) / (2g).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rabi/model.hpp"
#include "rabi/numeric.hpp"
#include "rabi/system.hpp"

namespace rabi {

struct SeriesOptions {
    // 0 selects the precision default: 1e-17 in double, 1e-45 in extended precision.
    double tol_tail = 0.0;
    int n_max = default_n_max;
    double pole_exclusion = default_pole_exclusion;
    // Radius |z+g| the tail criterion is applied at; 0 selects g (evaluation at z = 0).
    double radius = 0.0;
    // When > 0 the sequence is computed to exactly this order and the tail
    // criterion is only reported, never enforced.
    int fixed_order = 0;
};

template <class Real = double>
struct SeriesExpansion {
    std::vector<Real> coeffs; // K_0 .. K_N
    double x = 0.0;
    // 0 for the symmetric model, +1/-1 for K^+ / K^-.
    int branch = 0;
    double radius = 0.0;
    double tail_bound = 0.0;
    bool converged = false;

    [[nodiscard]] int order() const noexcept { return static_cast<int>(coeffs.size()) - 1; }

    // x - n for the symmetric model, x +- eps - n for the branches.
    [[nodiscard]] double pole_center(double epsilon) const noexcept { return x + branch * epsilon; }
};

template <class Real>
[[nodiscard]] double default_tail_tolerance()
{
    if constexpr (std::is_same_v<Real, double>)
        return default_tol_tail;
    else
        return 1e-45;
}

namespace detail {

template <class Real>
SeriesExpansion<Real> run_recurrence(const ModelParams &p, double x, int branch, const SeriesOptions &opt)
{
    p.validate();
    if (opt.tol_tail < 0.0 || std::isnan(opt.tol_tail))
        throw invalid_params("tol_tail must be > 0");
    const double tol_tail = opt.tol_tail > 0.0 ? opt.tol_tail : default_tail_tolerance<Real>();
    const int n_max = opt.fixed_order > 0 ? opt.fixed_order : opt.n_max;
    if (n_max < 1)
        throw invalid_params("n_max must be >= 1");

    const double shift = branch * p.epsilon;
    const double center = x + shift;
    const double dist = distance_to_integers(center, n_max);
    if (dist < opt.pole_exclusion)
        throw pole_proximity(x, std::clamp(std::round(center), 0.0, double(n_max)) - shift);

    const double radius = opt.radius > 0.0 ? opt.radius : p.g;
    const double pole_weight = 1.0 + std::abs(p.delta) / dist;

    const Real g(p.g);
    const Real two_g = Real(2) * g;
    const Real delta_sq = Real(p.delta) * Real(p.delta);
    const Real xr(x);
    const Real shift_r(shift);
    const Real center_r = xr + shift_r;

    auto f = [&](int n) {
        const Real nr(n);
        return two_g + (nr - xr + shift_r + delta_sq / (center_r - nr)) / two_g;
    };

    SeriesExpansion<Real> out;
    out.x = x;
    out.branch = branch;
    out.radius = radius;
    out.coeffs.reserve(std::min(n_max, 1024) + 1);
    out.coeffs.push_back(Real(1));
    out.coeffs.push_back(f(0));

    // log-scale tracking of |K_n| r^n avoids overflow of r^n for large n.
    const double log_r = std::log(radius);
    auto tail_term = [&](int n) {
        const double k = std::abs(to_double<Real>(out.coeffs[n]));
        if (k == 0.0)
            return 0.0;
        return std::exp(std::log(k) + n * log_r) * pole_weight;
    };

    int run = 0;
    for (int n = 1;; ++n) {
        // run counts consecutive small terms beyond the turning point n > x.
        if (n > center && tail_term(n) < tol_tail)
            ++run;
        else
            run = 0;
        if (opt.fixed_order <= 0 && run >= tail_window) {
            out.converged = true;
            break;
        }
        if (n >= n_max)
            break;
        const Real next = (f(n) * out.coeffs[n] - out.coeffs[n - 1]) / Real(n + 1);
        out.coeffs.push_back(next);
    }
    if (opt.fixed_order > 0)
        out.converged = run >= tail_window;

    const int last = out.order();
    const double t_last = tail_term(last);
    const double t_prev = last > 0 ? tail_term(last - 1) : 0.0;
    const double q = t_prev > 0.0 ? t_last / t_prev : 0.0;
    out.tail_bound = q < 1.0 ? t_last * q / (1.0 - q) : std::numeric_limits<double>::infinity();

    if (!out.converged && opt.fixed_order <= 0)
        throw no_convergence("tail criterion not met for x=" + std::to_string(x) + " within n_max=" +
                             std::to_string(n_max));
    return out;
}

} // namespace detail

// K_n(x) for the symmetric model.
template <class Real = double>
[[nodiscard]] SeriesExpansion<Real> compute_K(const ModelParams &p, double x, const SeriesOptions &opt = {})
{
    ModelParams sym = p;
    sym.epsilon = 0.0;
    return detail::run_recurrence<Real>(sym, x, 0, opt);
}

// K_n^+(x) or K_n^-(x) for the broken-symmetry model. At eps = 0 both equal compute_K
// bit for bit.
template <class Real = double>
[[nodiscard]] SeriesExpansion<Real> compute_K_eps(const ModelParams &p, double x, EpsBranch branch,
                                                  const SeriesOptions &opt = {})
{
    return detail::run_recurrence<Real>(p, x, static_cast<int>(branch), opt);
}

// ---------------------------------------------------------------------------
// Reconstruction of the local solutions and the ODE residual oracle

struct PolyValue {
    cplx value;
    cplx derivative;
};

// sum c_n y^n and its derivative by Horner's scheme; weights w_n scale each coefficient.
template <class Real, class Weight>
[[nodiscard]] PolyValue eval_poly(const SeriesExpansion<Real> &s, cplx y, Weight &&w)
{
    cplx v = 0.0;
    cplx d = 0.0;
    for (int n = s.order(); n >= 0; --n) {
        d = d * y + v;
        v = v * y + w(n) * to_double<Real>(s.coeffs[n]);
    }
    return {v, d};
}

struct LocalSolution {
    state_vector<2> psi;
    state_vector<2> dpsi;
};

// (phi1, phi2) and their derivatives at z from a symmetric-model series.
// delta_sign = -1 gives the negative-parity solution.
template <class Real>
[[nodiscard]] LocalSolution local_solution(const ModelParams &p, const SeriesExpansion<Real> &s, cplx z,
                                           int delta_sign = +1)
{
    const double d = delta_sign * p.delta;
    const cplx y = z + p.g;
    const cplx e = std::exp(-p.g * z);
    const auto s2 = eval_poly(s, y, [](int) { return 1.0; });
    const auto s1 = eval_poly(s, y, [&](int n) { return d / (s.x - n); });
    LocalSolution out;
    out.psi = {e * s1.value, e * s2.value};
    out.dpsi = {e * (s1.derivative - p.g * s1.value), e * (s2.derivative - p.g * s2.value)};
    return out;
}

struct LocalSolutionEps {
    state_vector<4> psi;
    state_vector<4> dpsi;
};

// Four-vector (phi1, phi2, phi1bar, phi2bar) with the free constant c.
template <class Real>
[[nodiscard]] LocalSolutionEps local_solution_eps(const ModelParams &p, const SeriesExpansion<Real> &kp,
                                                  const SeriesExpansion<Real> &km, cplx z, cplx c = 1.0)
{
    const cplx y = z + p.g;
    const cplx e = std::exp(-p.g * z);
    const double d = p.delta;
    const double eps = p.epsilon;
    const auto phi1 = eval_poly(km, y, [&](int n) { return d / (km.x - eps - n); });
    const auto phi2bar = eval_poly(km, y, [](int) { return 1.0; });
    const auto phi1bar = eval_poly(kp, y, [](int) { return 1.0; });
    const auto phi2 = eval_poly(kp, y, [&](int n) { return d / (kp.x + eps - n); });

    auto value = [&](const PolyValue &v, cplx scale) { return scale * e * v.value; };
    auto deriv = [&](const PolyValue &v, cplx scale) { return scale * e * (v.derivative - p.g * v.value); };
    LocalSolutionEps out;
    out.psi = {value(phi1, 1.0), value(phi2, c), value(phi1bar, c), value(phi2bar, 1.0)};
    out.dpsi = {deriv(phi1, 1.0), deriv(phi2, c), deriv(phi1bar, c), deriv(phi2bar, 1.0)};
    return out;
}

namespace detail {

inline void check_residual_grid(double g, std::span<const cplx> grid)
{
    if (grid.empty())
        throw grid_outside_domain("empty residual grid");
    const auto d1 = DiskDomain::d1(g);
    for (const cplx z : grid) {
        if (!d1.contains(z))
            throw grid_outside_domain("grid point outside the convergence disk D1");
        if (std::abs(z + g) < 1e-3 * g)
            throw grid_outside_domain("grid point too close to the singular point z=-g");
    }
}

// Residuals are evaluated in extended precision whatever the coefficient type, so
// that they measure the coefficients and not the cancellation in dPsi - A Psi.
struct ExtendedPoly {
    complex_t<extended> value;
    complex_t<extended> derivative;
};

template <class Real, class Weight>
ExtendedPoly eval_poly_extended(const SeriesExpansion<Real> &s, const complex_t<extended> &y, Weight &&w)
{
    using C = complex_t<extended>;
    C v(0);
    C d(0);
    for (int n = s.order(); n >= 0; --n) {
        d = d * y + v;
        v = v * y + C(w(n) * extended(s.coeffs[n]));
    }
    return {v, d};
}

template <std::size_t Dim>
double relative_residual(const std::array<complex_t<extended>, Dim> &diff,
                         const std::array<complex_t<extended>, Dim> &psi)
{
    extended num(0);
    extended den(0);
    for (std::size_t i = 0; i < Dim; ++i) {
        num += norm(diff[i]);
        den += norm(psi[i]);
    }
    return sqrt(num / den).template convert_to<double>();
}

} // namespace detail

// max over the grid of |dPsi/dz - A(z) Psi| / |Psi| for the reconstructed
// symmetric-model solution.
template <class Real>
[[nodiscard]] double ode_residual(const ModelParams &p, const SeriesExpansion<Real> &s, std::span<const cplx> grid,
                                  int delta_sign = +1)
{
    using C = complex_t<extended>;
    detail::check_residual_grid(p.g, grid);
    const extended g(p.g);
    const extended d = extended(delta_sign) * extended(p.delta);
    const extended xr(s.x);
    const extended e = xr - g * g;
    double worst = 0.0;
    for (const cplx zd : grid) {
        const C z = from_complex_double<extended>(zd);
        const C y = z + C(g);
        const C ex = exp(-(C(g) * z));
        const auto s2 = detail::eval_poly_extended(s, y, [](int) { return extended(1); });
        const auto s1 = detail::eval_poly_extended(s, y, [&](int n) { return d / (xr - n); });
        const std::array<C, 2> psi{ex * s1.value, ex * s2.value};
        const std::array<C, 2> dpsi{ex * (s1.derivative - C(g) * s1.value), ex * (s2.derivative - C(g) * s2.value)};
        const std::array<C, 2> a{((C(e) - C(g) * z) * psi[0] - C(d) * psi[1]) / (z + C(g)),
                                 ((C(e) + C(g) * z) * psi[1] - C(d) * psi[0]) / (z - C(g))};
        worst = std::max(worst, detail::relative_residual<2>({dpsi[0] - a[0], dpsi[1] - a[1]}, psi));
    }
    return worst;
}

// Same for the four-vector (phi1, phi2, phi1bar, phi2bar) of the broken-symmetry
// model with c = 1.
template <class Real>
[[nodiscard]] double ode_residual_eps(const ModelParams &p, const SeriesExpansion<Real> &kp,
                                      const SeriesExpansion<Real> &km, std::span<const cplx> grid)
{
    using C = complex_t<extended>;
    detail::check_residual_grid(p.g, grid);
    const extended g(p.g);
    const extended d(p.delta);
    const extended eps(p.epsilon);
    const extended xr(kp.x);
    const extended e = xr - g * g;
    double worst = 0.0;
    for (const cplx zd : grid) {
        const C z = from_complex_double<extended>(zd);
        const C y = z + C(g);
        const C ex = exp(-(C(g) * z));
        const std::array<detail::ExtendedPoly, 4> poly{
            detail::eval_poly_extended(km, y, [&](int n) { return d / (xr - eps - n); }),
            detail::eval_poly_extended(kp, y, [&](int n) { return d / (xr + eps - n); }),
            detail::eval_poly_extended(kp, y, [](int) { return extended(1); }),
            detail::eval_poly_extended(km, y, [](int) { return extended(1); })};
        std::array<C, 4> psi;
        std::array<C, 4> dpsi;
        for (std::size_t i = 0; i < 4; ++i) {
            psi[i] = ex * poly[i].value;
            dpsi[i] = ex * (poly[i].derivative - C(g) * poly[i].value);
        }
        const C zp = z + C(g);
        const C zm = z - C(g);
        const std::array<C, 4> a{((C(e - eps) - C(g) * z) * psi[0] - C(d) * psi[3]) / zp,
                                 ((C(e + eps) - C(g) * z) * psi[1] - C(d) * psi[2]) / zp,
                                 ((C(e - eps) + C(g) * z) * psi[2] - C(d) * psi[1]) / zm,
                                 ((C(e + eps) + C(g) * z) * psi[3] - C(d) * psi[0]) / zm};
        std::array<C, 4> diff;
        for (std::size_t i = 0; i < 4; ++i)
            diff[i] = dpsi[i] - a[i];
        worst = std::max(worst, detail::relative_residual<4>(diff, psi));
    }
    return worst;
}

// Points spread over D1 for residual checks: rings at fractions of the radius.
[[nodiscard]] inline std::vector<cplx> d1_grid(double g, int count = 20, double max_fraction = 0.75)
{
    std::vector<cplx> grid;
    grid.reserve(count);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < count; ++i) {
        const double frac = 0.15 + (max_fraction - 0.15) * (i % 4) / 3.0;
        const double theta = 2.0 * pi * (i + 0.5) / count;
        grid.push_back(cplx(-g, 0.0) + 2.0 * g * frac * std::polar(1.0, theta));
    }
    return grid;
}

} // namespace rabi
