#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "flowerlab/errors.hpp"

namespace flowerlab {

using Complex = std::complex<double>;
using ComplexPoint = std::vector<Complex>;
using MultiIndex = std::vector<std::int64_t>;

// x^e for an integer exponent vector; negative exponents divide.
// Throws ZeroCoordinate when a negative exponent meets a zero coordinate.
inline Complex int_power(Complex x, std::int64_t e) {
    if (e < 0) {
        if (x == Complex(0.0)) throw ZeroCoordinate("int_power: negative exponent at zero");
        return 1.0 / int_power(x, -e);
    }
    Complex r = 1.0;
    Complex b = x;
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

inline Complex monomial(const ComplexPoint& x, const MultiIndex& e) {
    Complex r = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i) r *= int_power(x[i], e[i]);
    return r;
}

inline double sup_norm(const ComplexPoint& x) {
    double m = 0.0;
    for (const auto& xi : x) m = std::max(m, std::abs(xi));
    return m;
}

inline bool all_finite(const ComplexPoint& x) {
    for (const auto& xi : x)
        if (!std::isfinite(xi.real()) || !std::isfinite(xi.imag())) return false;
    return true;
}

// log(1+h) for complex h without the cancellation of forming 1+h first.
inline Complex log1p_c(Complex h) {
    double a = std::abs(h);
    if (a < 1e-4) {
        // |h|^8/8 < 2e-33: the series is exact to machine precision here
        Complex acc = 0.0;
        Complex term = h;
        for (int k = 1; k <= 7; ++k) {
            acc += term * (k % 2 == 1 ? 1.0 / k : -1.0 / k);
            term *= h;
        }
        return acc;
    }
    return std::log(Complex(1.0) + h);
}

// exp(s) - 1 without the cancellation at small |s|.
inline Complex expm1_c(Complex s) {
    double a = std::abs(s);
    if (a < 1e-4) {
        Complex acc = 0.0;
        Complex term = s;
        double fact = 1.0;
        for (int k = 1; k <= 7; ++k) {
            acc += term / fact;
            term *= s;
            fact *= double(k + 1);
        }
        return acc;
    }
    return std::exp(s) - Complex(1.0);
}

} // namespace flowerlab
