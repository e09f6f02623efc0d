#pragma once

// Independent checks of the spectral conditions: direct integration of the
// first-order systems and the matching conditions Psi(z0) = Phi(z0) inside D0.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rabi/model.hpp"
#include "rabi/numeric.hpp"
#include "rabi/series.hpp"
#include "rabi/system.hpp"

namespace rabi {

template <std::size_t Dim>
struct VectorState {
    state_vector<Dim> psi{};
    cplx z = 0.0;
};

struct IntegrationStats {
    int accepted = 0;
    int rejected = 0;
};

namespace detail {

inline double distance_to_segment(cplx a, cplx b, cplx p)
{
    const cplx d = b - a;
    const double len2 = std::norm(d);
    const double t = len2 > 0.0 ? std::clamp(((p - a) * std::conj(d)).real() / len2, 0.0, 1.0) : 0.0;
    return std::abs(a + t * d - p);
}

inline void check_path(double g, cplx start, cplx end)
{
    const double clearance = 0.1 * g;
    if (distance_to_segment(start, end, cplx(-g, 0.0)) < clearance ||
        distance_to_segment(start, end, cplx(g, 0.0)) < clearance)
        throw path_too_close_to_singularity("integration path passes within 0.1 g of a singular point z = +-g");
}

template <std::size_t Dim>
state_vector<Dim> axpy(const state_vector<Dim> &y, cplx h, std::initializer_list<std::pair<double, const state_vector<Dim> *>> terms)
{
    state_vector<Dim> out = y;
    for (std::size_t i = 0; i < Dim; ++i) {
        cplx acc = 0.0;
        for (const auto &[c, k] : terms)
            acc += c * (*k)[i];
        out[i] += h * acc;
    }
    return out;
}

// One Dormand-Prince 5(4) step of dPsi/dz = A(z) Psi along the complex direction h.
// Returns the fifth-order solution and the embedded error estimate.
template <std::size_t Dim>
std::pair<state_vector<Dim>, state_vector<Dim>> dopri_step(const ModelParams &p, double x, cplx z,
                                                          const state_vector<Dim> &y, cplx h)
{
    auto f = [&](cplx zz, const state_vector<Dim> &v) { return rhs<Dim>(p, x, zz, v); };
    const auto k1 = f(z, y);
    const auto k2 = f(z + h * (1.0 / 5), axpy<Dim>(y, h, {{1.0 / 5, &k1}}));
    const auto k3 = f(z + h * (3.0 / 10), axpy<Dim>(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
    const auto k4 = f(z + h * (4.0 / 5), axpy<Dim>(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
    const auto k5 = f(z + h * (8.0 / 9), axpy<Dim>(y, h,
                                                   {{19372.0 / 6561, &k1},
                                                    {-25360.0 / 2187, &k2},
                                                    {64448.0 / 6561, &k3},
                                                    {-212.0 / 729, &k4}}));
    const auto k6 = f(z + h, axpy<Dim>(y, h,
                                       {{9017.0 / 3168, &k1},
                                        {-355.0 / 33, &k2},
                                        {46732.0 / 5247, &k3},
                                        {49.0 / 176, &k4},
                                        {-5103.0 / 18656, &k5}}));
    const auto y5 = axpy<Dim>(y, h,
                              {{35.0 / 384, &k1},
                               {500.0 / 1113, &k3},
                               {125.0 / 192, &k4},
                               {-2187.0 / 6784, &k5},
                               {11.0 / 84, &k6}});
    const auto k7 = f(z + h, y5);
    const state_vector<Dim> zero{};
    const auto err = axpy<Dim>(zero, h,
                             {{71.0 / 57600, &k1},
                              {-71.0 / 16695, &k3},
                              {71.0 / 1920, &k4},
                              {-17253.0 / 339200, &k5},
                              {22.0 / 525, &k6},
                              {-1.0 / 40, &k7}});
    return {y5, err};
}

} // namespace detail

// Adaptive Dormand-Prince 5(4) integration along the straight path start -> end.
// The local error of every accepted step satisfies |err| <= step_tol * max(1, |Psi|).
template <std::size_t Dim>
[[nodiscard]] VectorState<Dim> integrate(const ModelParams &p, double x, cplx start, cplx end,
                                         const state_vector<Dim> &init, double step_tol = 1e-12,
                                         IntegrationStats *stats = nullptr)
{
    p.validate();
    if (!(step_tol > 0.0))
        throw invalid_params("step_tol must be > 0");
    detail::check_path(p.g, start, end);

    const cplx span = end - start;
    const double length = std::abs(span);
    VectorState<Dim> s{init, start};
    if (length == 0.0)
        return s;
    const cplx dir = span / length;

    double t = 0.0;
    double h = std::min(length, 0.05 * p.g);
    const double h_min = length * 1e-14;
    // tolerances below the rounding floor make accepted steps creep without end
    const int max_steps = 200000;
    IntegrationStats local;
    while (t < length) {
        if (local.accepted + local.rejected >= max_steps)
            throw step_underflow("step budget exhausted before reaching the end of the path");
        if (t + h > length)
            h = length - t;
        const auto [y, err] = detail::dopri_step<Dim>(p, x, s.z, s.psi, dir * h);
        const double scale = std::max(1.0, norm2(s.psi));
        const double ratio = norm2(err) / (step_tol * scale);
        if (ratio <= 1.0) {
            t += h;
            s.psi = y;
            s.z = t >= length ? end : start + dir * t;
            ++local.accepted;
        } else {
            ++local.rejected;
        }
        const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
        h *= factor;
        if (t < length && h < h_min)
            throw step_underflow("step size collapsed at z = " + std::to_string(s.z.real()) + "+" +
                                 std::to_string(s.z.imag()) + "i");
    }
    if (stats)
        *stats = local;
    return s;
}

// Fixed-step fifth-order integration with `steps` equal steps; used for order checks.
template <std::size_t Dim>
[[nodiscard]] VectorState<Dim> integrate_fixed(const ModelParams &p, double x, cplx start, cplx end,
                                               const state_vector<Dim> &init, int steps)
{
    p.validate();
    if (steps < 1)
        throw invalid_params("steps must be >= 1");
    detail::check_path(p.g, start, end);
    const cplx h = (end - start) / double(steps);
    VectorState<Dim> s{init, start};
    for (int i = 0; i < steps; ++i) {
        s.psi = detail::dopri_step<Dim>(p, x, s.z, s.psi, h).first;
        s.z = i + 1 == steps ? end : start + h * double(i + 1);
    }
    return s;
}

// Default start of integrations: -g + 0.2 (2g), well inside D1.
[[nodiscard]] inline cplx default_integration_start(double g) noexcept
{
    return {-g + 0.4 * g, 0.0};
}

// (phi1, phi2) from the series around -g, summed in Real arithmetic.
template <class Real>
[[nodiscard]] state_vector<2> series_components(const ModelParams &p, const SeriesExpansion<Real> &s, cplx z,
                                                int delta_sign = +1)
{
    using C = complex_t<Real>;
    using std::exp;
    const C zc = from_complex_double<Real>(z);
    const C y = zc + C(Real(p.g));
    const Real d = Real(delta_sign) * Real(p.delta);
    const Real xr(s.x);
    C s1(0);
    C s2(0);
    for (int n = s.order(); n >= 0; --n) {
        s2 = s2 * y + C(s.coeffs[n]);
        s1 = s1 * y + C(d * s.coeffs[n] / (xr - Real(n)));
    }
    const C e = exp(-(zc * C(Real(p.g))));
    return {to_complex_double<Real>(e * s1), to_complex_double<Real>(e * s2)};
}

// Series-based initial state (phi1, phi2) at z.
[[nodiscard]] inline VectorState<2> series_state(const ModelParams &p, double x, cplx z, int delta_sign = +1,
                                                 const SeriesOptions &opt = {})
{
    SeriesOptions so = opt;
    so.radius = std::max(so.radius, std::abs(z + p.g));
    const auto s = compute_K<extended>(p, x, so);
    return {series_components(p, s, z, delta_sign), z};
}

struct ConditionResiduals {
    double res_a = 0.0;
    double res_b = 0.0;
};

namespace detail {

inline double relative_gap(cplx a, cplx b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// Grid points near the edge of D0 converge slowly (ratio up to 0.86 at the default
// theorem grid), so the validators default to a looser tail and a higher order cap.
inline SeriesOptions validator_series_options(const SeriesOptions &opt)
{
    SeriesOptions so = opt;
    if (so.tol_tail == 0.0)
        so.tol_tail = 1e-20;
    if (so.n_max == default_n_max)
        so.n_max = 4000;
    return so;
}

template <class Real>
SeriesExpansion<Real> series_for_points(const ModelParams &p, double x, std::span<const cplx> points,
                                        const SeriesOptions &opt)
{
    SeriesOptions so = validator_series_options(opt);
    double radius = p.g;
    for (const cplx z : points)
        radius = std::max({radius, std::abs(z + p.g), std::abs(p.g - z)});
    so.radius = radius;
    return compute_K<Real>(p, x, so);
}

} // namespace detail

// Matching conditions at z0 in D0:
//   res_a = |phi1(z0) - phi2(-z0)|, res_b = |phi2(z0) - phi1(-z0)|,
// each relative to the larger of the two magnitudes.
template <class Real = extended>
[[nodiscard]] ConditionResiduals check_conditions(const ModelParams &p, double x, cplx z0,
                                                  Parity parity = Parity::positive, const SeriesOptions &opt = {})
{
    p.validate();
    if (!in_d0(p.g, z0))
        throw outside_d0("z0 must lie in D0, the intersection of the disks |z+g| < 2g and |z-g| < 2g");
    const std::array<cplx, 2> pts{z0, -z0};
    const auto s = detail::series_for_points<Real>(p, x, pts, opt);
    const int sign = sign_of(parity);
    const auto at = series_components(p, s, z0, sign);
    const auto mirror = series_components(p, s, -z0, sign);
    return {detail::relative_gap(at[0], mirror[1]), detail::relative_gap(at[1], mirror[0])};
}

// Points of a uniform n x n grid on the square [-half, half]^2.
[[nodiscard]] inline std::vector<cplx> square_grid(double half, int n)
{
    std::vector<cplx> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double a = n == 1 ? 0.0 : -half + 2.0 * half * i / (n - 1);
            const double b = n == 1 ? 0.0 : -half + 2.0 * half * j / (n - 1);
            out.emplace_back(a, b);
        }
    return out;
}

[[nodiscard]] inline std::vector<cplx> default_theorem_grid(double g)
{
    return square_grid(0.6 * g, 5);
}

// max over the grid of |Psi(z) - Phi(z)| / |Psi(z)| with Phi(z) = (phi2(-z), phi1(-z)).
// Small at eigenvalues; of order one elsewhere.
template <class Real = extended>
[[nodiscard]] double theorem_check(const ModelParams &p, Parity parity, double x_star, std::span<const cplx> grid,
                                   const SeriesOptions &opt = {})
{
    p.validate();
    if (grid.empty())
        throw grid_outside_domain("empty theorem grid");
    for (const cplx z : grid)
        if (!in_d0(p.g, z))
            throw outside_d0("theorem grid point outside D0");
    const auto s = detail::series_for_points<Real>(p, x_star, grid, opt);
    const int sign = sign_of(parity);
    double worst = 0.0;
    for (const cplx z : grid) {
        const auto psi = series_components(p, s, z, sign);
        const auto mirror = series_components(p, s, -z, sign);
        const state_vector<2> diff{psi[0] - mirror[1], psi[1] - mirror[0]};
        worst = std::max(worst, norm2(diff) / norm2(psi));
    }
    return worst;
}

template <class Real = extended>
[[nodiscard]] double theorem_check(const ModelParams &p, Parity parity, double x_star)
{
    const auto grid = default_theorem_grid(p.g);
    return theorem_check<Real>(p, parity, x_star, grid);
}

// Broken-symmetry matching conditions. c is estimated from each of the two z0 = 0
// conditions, c_a = delta Rbar^- / R^+ and c_b = R^- / (delta Rbar^+); the four
// conditions at z0 are then evaluated with c_a.
struct EpsConditions {
    cplx c_a;
    cplx c_b;
    double consistency = 0.0; // |c_a - c_b| / max(|c_a|, |c_b|)
    std::array<double, 4> residuals{};
};

template <class Real = extended>
[[nodiscard]] EpsConditions eps_conditions(const ModelParams &p, double x, cplx z0 = 0.0,
                                           const SeriesOptions &opt = {})
{
    p.validate();
    if (p.delta == 0.0)
        throw invalid_params("eps conditions need delta != 0");
    if (!in_d0(p.g, z0))
        throw outside_d0("z0 must lie in D0, the intersection of the disks |z+g| < 2g and |z-g| < 2g");
    SeriesOptions so = detail::validator_series_options(opt);
    so.radius = std::max({p.g, std::abs(z0 + p.g), std::abs(p.g - z0)});
    const auto kp = compute_K_eps<Real>(p, x, EpsBranch::plus, so);
    const auto km = compute_K_eps<Real>(p, x, EpsBranch::minus, so);

    using C = complex_t<Real>;
    using std::exp;
    const Real d(p.delta);
    const Real xr(x);
    const Real eps(p.epsilon);
    // sum K_n w_n y^n with w_n = 1 or delta/(x + shift - n)
    auto sum = [&](const SeriesExpansion<Real> &s, cplx y, bool weighted, const Real &shift) {
        const C yc = from_complex_double<Real>(y);
        C acc(0);
        for (int n = s.order(); n >= 0; --n) {
            const Real w = weighted ? d / (xr + shift - Real(n)) : Real(1);
            acc = acc * yc + C(w * s.coeffs[n]);
        }
        return acc;
    };

    const cplx g(p.g, 0.0);
    const C r_plus = sum(kp, g, false, eps);
    const C r_minus = sum(km, g, false, -eps);
    const C rbar_plus = sum(kp, g, true, eps) / C(d);
    const C rbar_minus = sum(km, g, true, -eps) / C(d);

    EpsConditions out;
    const C c_a = C(d) * rbar_minus / r_plus;
    const C c_b = r_minus / (C(d) * rbar_plus);
    out.c_a = to_complex_double<Real>(c_a);
    out.c_b = to_complex_double<Real>(c_b);
    out.consistency = detail::relative_gap(out.c_a, out.c_b);

    const C zc = from_complex_double<Real>(z0);
    const C e_minus = exp(-(zc * C(Real(p.g))));
    const C e_plus = exp(zc * C(Real(p.g)));
    const cplx yp = z0 + p.g;
    const cplx ym = p.g - z0;
    auto gap = [](const C &a, const C &b) {
        return detail::relative_gap(to_complex_double<Real>(a), to_complex_double<Real>(b));
    };
    out.residuals[0] = gap(e_minus * sum(km, yp, true, -eps), c_a * e_plus * sum(kp, ym, false, eps));
    out.residuals[1] = gap(c_a * e_minus * sum(kp, yp, true, eps), e_plus * sum(km, ym, false, -eps));
    out.residuals[2] = gap(c_a * e_minus * sum(kp, yp, false, eps), e_plus * sum(km, ym, true, -eps));
    out.residuals[3] = gap(e_minus * sum(km, yp, false, -eps), c_a * e_plus * sum(kp, ym, true, eps));
    return out;
}

} // namespace rabi
