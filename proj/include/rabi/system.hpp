#pragma once

// First-order linear systems in the Bargmann representation.
//
// Symmetric model, Psi = (phi1, phi2):
//   (z+g) phi1' = (E - g z) phi1 - delta phi2
//   (z-g) phi2' = (E + g z) phi2 - delta phi1
//
// Broken-symmetry model, Psi = (phi1, phi2, phi1bar, phi2bar):
//   (z+g) phi1'    = (E - eps - g z) phi1    - delta phi2bar
//   (z+g) phi2'    = (E + eps - g z) phi2    - delta phi1bar
//   (z-g) phi1bar' = (E - eps + g z) phi1bar - delta phi2
//   (z-g) phi2bar' = (E + eps + g z) phi2bar - delta phi1
//
// Both have regular singular points at z = +-g.

#include <array>
#include <complex>

#include "rabi/model.hpp"

namespace rabi {

using cplx = std::complex<double>;

template <std::size_t Dim>
using state_vector = std::array<cplx, Dim>;

// Right-hand side A(z) Psi for the symmetric model at positive parity; negative
// parity is obtained by flipping the sign of delta.
[[nodiscard]] inline state_vector<2> rhs_symmetric(const ModelParams &p, double x, cplx z,
                                                   const state_vector<2> &psi)
{
    const double e = energy_from_x(p, x);
    const cplx zp = z + p.g;
    const cplx zm = z - p.g;
    return {((e - p.g * z) * psi[0] - p.delta * psi[1]) / zp,
            ((e + p.g * z) * psi[1] - p.delta * psi[0]) / zm};
}

[[nodiscard]] inline state_vector<4> rhs_eps(const ModelParams &p, double x, cplx z, const state_vector<4> &psi)
{
    const double e = energy_from_x(p, x);
    const double eps = p.epsilon;
    const cplx zp = z + p.g;
    const cplx zm = z - p.g;
    return {((e - eps - p.g * z) * psi[0] - p.delta * psi[3]) / zp,
            ((e + eps - p.g * z) * psi[1] - p.delta * psi[2]) / zp,
            ((e - eps + p.g * z) * psi[2] - p.delta * psi[1]) / zm,
            ((e + eps + p.g * z) * psi[3] - p.delta * psi[0]) / zm};
}

template <std::size_t Dim>
[[nodiscard]] state_vector<Dim> rhs(const ModelParams &p, double x, cplx z, const state_vector<Dim> &psi)
{
    static_assert(Dim == 2 || Dim == 4);
    if constexpr (Dim == 2)
        return rhs_symmetric(p, x, z, psi);
    else
        return rhs_eps(p, x, z, psi);
}

template <std::size_t Dim>
[[nodiscard]] double norm2(const state_vector<Dim> &v)
{
    double s = 0.0;
    for (const auto &c : v)
        s += std::norm(c);
    return std::sqrt(s);
}

// Open disks of radius 2g around -g (D1) and +g (D2); D0 is their intersection.
struct DiskDomain {
    cplx center;
    double radius;

    [[nodiscard]] bool contains(cplx z) const noexcept { return std::abs(z - center) < radius; }

    [[nodiscard]] static DiskDomain d1(double g) noexcept { return {cplx(-g, 0.0), 2.0 * g}; }
    [[nodiscard]] static DiskDomain d2(double g) noexcept { return {cplx(g, 0.0), 2.0 * g}; }
};

[[nodiscard]] inline bool in_d0(double g, cplx z) noexcept
{
    return DiskDomain::d1(g).contains(z) && DiskDomain::d2(g).contains(z);
}

} // namespace rabi
