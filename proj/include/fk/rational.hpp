// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fk {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational rat(long long p, long long q = 1) { return Rational(p, q); }

inline double to_double(const Rational& r) { return static_cast<double>(r); }

inline BigInt factorial(unsigned n) {
    BigInt f = 1;
    for (unsigned i = 2; i <= n; ++i) f *= i;
    return f;
}

/// Parses "p/q" or a plain integer string into an exact rational.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(BigInt(s));
    BigInt p(s.substr(0, slash));
    BigInt q(s.substr(slash + 1));
    if (q == 0) throw std::invalid_argument("rational with zero denominator: " + s);
    return Rational(p, q);
}

inline std::string format_rational(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

/// Continued-fraction rationalization of x with denominator bounded by max_den.
/// Returns nullopt when no convergent reproduces x within tol.
inline std::optional<Rational> rationalize(double x, long long max_den, double tol = 1e-9) {
    if (!std::isfinite(x)) return std::nullopt;
    bool neg = x < 0;
    double v = std::fabs(x);
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(frac);
        if (a > 9e17) break;
        long long ai = static_cast<long long>(a);
        if (q0 + ai * q1 > max_den && q1 > 0) break;
        long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::fabs(approx - v) <= tol * std::max(1.0, v)) {
            Rational r(p1, q1);
            return neg ? -r : r;
        }
        double rem = frac - a;
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
    }
    return std::nullopt;
}

}  // namespace fk
