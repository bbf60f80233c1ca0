// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace extremal {

using Rational = boost::multiprecision::cpp_rational;

// Normal-maximum centering constant evaluated at an arbitrary count:
//   d(c) = sqrt(2 log c) - (log log c + log 4 pi) / (2 sqrt(2 log c)).
// Requires count >= 3 so that log log c is defined and the value meaningful.
inline double d_of(std::uint64_t count) {
    if (count < 3) {
        throw std::invalid_argument("d_of: count must be >= 3, got " + std::to_string(count));
    }
    const double lc = std::log(static_cast<double>(count));
    const double s = std::sqrt(2.0 * lc);
    return s - (std::log(lc) + std::log(4.0 * 3.14159265358979323846)) / (2.0 * s);
}

struct InterpointConstants {
    double b_n; // centering
    double c_n; // scaling
    double d;   // d evaluated at p(p-1)/2
};

// Centering/scaling for squared interpoint distances of p unit-variance
// series of length n:  b_n = 2n + sqrt(2n(EX4+1)) d,  c_n = d / sqrt(2n(EX4+1)),
// with d = d_of(p(p-1)/2). Note c_n * (b_n - 2n) = d^2 identically.
inline InterpointConstants interpoint_constants(std::size_t n, std::size_t p, double ex4) {
    if (n < 1) throw std::invalid_argument("interpoint_constants: n must be >= 1");
    if (p < 3) throw std::invalid_argument("interpoint_constants: p must be >= 3");
    if (!(ex4 >= 1.0)) {
        throw std::invalid_argument("interpoint_constants: EX4 must be >= 1 (Jensen), got " +
                                    std::to_string(ex4));
    }
    const double d = d_of(static_cast<std::uint64_t>(p) * (p - 1) / 2);
    const double root = std::sqrt(2.0 * static_cast<double>(n) * (ex4 + 1.0));
    return {2.0 * static_cast<double>(n) + root * d, d / root, d};
}

// Exact null variances of the three rank correlations.

inline Rational tau_variance_exact(std::uint64_t n) {
    if (n < 2) throw std::invalid_argument("tau_variance: n must be >= 2");
    return Rational(2 * (2 * n + 5), 9 * n * (n - 1));
}

inline Rational rho_variance_exact(std::uint64_t n) {
    if (n < 2) throw std::invalid_argument("rho_variance: n must be >= 2");
    return Rational(1, n - 1);
}

inline Rational r_variance_exact(std::uint64_t n) {
    if (n < 3) throw std::invalid_argument("r_variance: n must be >= 3");
    return Rational(n * n - 3, n * (n - 1) * (n - 2));
}

inline double tau_variance(std::uint64_t n) {
    return static_cast<double>(tau_variance_exact(n));
}
inline double rho_variance(std::uint64_t n) {
    return static_cast<double>(rho_variance_exact(n));
}
inline double r_variance(std::uint64_t n) { return static_cast<double>(r_variance_exact(n)); }

} // namespace extremal
