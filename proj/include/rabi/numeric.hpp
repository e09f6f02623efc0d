#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#ifdef __FAST_MATH__
#error "-ffast-math defeats the compensated sums in this library"
#endif

namespace rabi {

// 50 significant decimal digits.
using extended = boost::multiprecision::cpp_bin_float_50;

template <class Real>
struct real_traits;

template <>
struct real_traits<double> {
    using complex = std::complex<double>;
    static double to_double(double v) noexcept { return v; }
    static constexpr double epsilon() noexcept { return std::numeric_limits<double>::epsilon(); }
};

template <>
struct real_traits<extended> {
    using complex = boost::multiprecision::cpp_complex_50;
    static double to_double(const extended &v) { return v.convert_to<double>(); }
    static double epsilon() { return std::numeric_limits<extended>::epsilon().convert_to<double>(); }
};

template <class Real>
using complex_t = typename real_traits<Real>::complex;

template <class Real>
[[nodiscard]] double to_double(const Real &v)
{
    return real_traits<Real>::to_double(v);
}

template <class Real>
[[nodiscard]] std::complex<double> to_complex_double(const complex_t<Real> &v)
{
    return {to_double<Real>(v.real()), to_double<Real>(v.imag())};
}

template <class Real>
[[nodiscard]] complex_t<Real> from_complex_double(std::complex<double> v)
{
    return complex_t<Real>(Real(v.real()), Real(v.imag()));
}

// Neumaier's variant of Kahan summation.
template <class Real>
class compensated_sum {
public:
    compensated_sum() = default;
    explicit compensated_sum(const Real &init) : sum_(init) {}

    compensated_sum &operator+=(const Real &term)
    {
        using std::abs;
        const Real t = sum_ + term;
        if (abs(sum_) >= abs(term))
            carry_ += (sum_ - t) + term;
        else
            carry_ += (term - t) + sum_;
        sum_ = t;
        return *this;
    }

    [[nodiscard]] Real value() const { return sum_ + carry_; }

private:
    Real sum_{0};
    Real carry_{0};
};

// Component-wise compensation for complex sums.
template <class Real>
class compensated_complex_sum {
public:
    compensated_complex_sum &operator+=(const complex_t<Real> &term)
    {
        re_ += Real(term.real());
        im_ += Real(term.imag());
        return *this;
    }

    [[nodiscard]] complex_t<Real> value() const { return complex_t<Real>(re_.value(), im_.value()); }

private:
    compensated_sum<Real> re_;
    compensated_sum<Real> im_;
};

// Distance from x to the nearest integer in [0, n_max].
[[nodiscard]] inline double distance_to_integers(double x, int n_max) noexcept
{
    double nearest = std::round(x);
    if (nearest < 0.0)
        nearest = 0.0;
    if (nearest > n_max)
        nearest = n_max;
    return std::abs(x - nearest);
}

} // namespace rabi
