#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rabi {

// Units: omega = hbar = 1.
struct ModelParams {
    double g = 1.0;       // coupling, must be > 0
    double delta = 0.0;   // two-level splitting
    double epsilon = 0.0; // symmetry-breaking sigma_x bias

    void validate() const;

    [[nodiscard]] bool symmetric() const noexcept { return epsilon == 0.0; }
};

enum class Parity : std::int8_t { positive = +1, negative = -1 };

[[nodiscard]] inline int sign_of(Parity p) noexcept { return static_cast<int>(p); }

[[nodiscard]] inline const char *to_string(Parity p) noexcept
{
    return p == Parity::positive ? "+" : "-";
}

// Branch of the broken-symmetry coefficient sequences K_n^+ and K_n^-.
enum class EpsBranch : std::int8_t { plus = +1, minus = -1 };

// x = E + g^2.
[[nodiscard]] inline double energy_from_x(const ModelParams &p, double x) noexcept
{
    return x - p.g * p.g;
}
[[nodiscard]] inline double x_from_energy(const ModelParams &p, double e) noexcept
{
    return e + p.g * p.g;
}

inline constexpr double default_pole_exclusion = 1e-4;
inline constexpr int default_n_max = 500;
inline constexpr double default_tol_tail = 1e-17;
inline constexpr int tail_window = 5;

// ---------------------------------------------------------------------------
// Errors

class rabi_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class invalid_params : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class no_convergence : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class pole_proximity : public rabi_error {
public:
    pole_proximity(double x, double pole)
        : rabi_error("spectral parameter " + std::to_string(x) + " is within the pole exclusion window of " +
                     std::to_string(pole)),
          x_(x), pole_(pole)
    {
    }
    [[nodiscard]] double x() const noexcept { return x_; }
    [[nodiscard]] double pole() const noexcept { return pole_; }

private:
    double x_;
    double pole_;
};

class grid_outside_domain : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class singular_point : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class outside_d0 : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class path_too_close_to_singularity : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class step_underflow : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class no_joint_zero : public rabi_error {
public:
    no_joint_zero(double x, double ratio)
        : rabi_error("real-part zero at x=" + std::to_string(x) +
                     " has no matching imaginary-part zero (|Im|/scale=" + std::to_string(ratio) + ")"),
          x_(x), ratio_(ratio)
    {
    }
    [[nodiscard]] double x() const noexcept { return x_; }
    [[nodiscard]] double ratio() const noexcept { return ratio_; }

private:
    double x_;
    double ratio_;
};

class not_found : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class level_not_converged : public rabi_error {
public:
    using rabi_error::rabi_error;
};

class eigensolver_failure : public rabi_error {
public:
    using rabi_error::rabi_error;
};

inline void ModelParams::validate() const
{
    if (!(g > 0.0) || !std::isfinite(g))
        throw invalid_params("coupling g must be finite and > 0 (got " + std::to_string(g) + ")");
    if (!std::isfinite(delta))
        throw invalid_params("delta must be finite");
    if (!std::isfinite(epsilon))
        throw invalid_params("epsilon must be finite");
}

} // namespace rabi
