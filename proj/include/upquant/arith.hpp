#pragma once

// Scalar abstraction shared by the float64 and exact-rational arithmetic modes.
// Every tolerance knob flows through tol_of<S>: exact scalars see a tolerance
// of zero, so "within tol" degrades to exact equality in rational mode.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <utility>

#include "upquant/errors.hpp"
#include "upquant/rational.hpp"

namespace upquant {

template <class S>
struct arith;

template <>
struct arith<double> {
    static constexpr bool exact = false;
    static constexpr const char* mode_name = "float";

    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_fraction(long n, long d) { return static_cast<double>(n) / static_cast<double>(d); }
    static double from_double(double d) { return d; }
    static double to_double(double v) { return v; }
    static double abs(double v) { return std::fabs(v); }

    static double parse(const std::string& tok) {
        if (tok.find('/') != std::string::npos) {
            // Rational literals are accepted in float mode, rounded once.
            return rational::parse(tok).to_double();
        }
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == nullptr || *end != '\0')
            throw error(errc::syntax_error, "bad numeric literal '" + tok + "'");
        return v;
    }

    // 17 significant digits: lossless round-trip for IEEE double.
    static std::string format(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

template <>
struct arith<rational> {
    static constexpr bool exact = true;
    static constexpr const char* mode_name = "rational";

    static rational zero() { return rational(0); }
    static rational one() { return rational(1); }
    static rational from_fraction(long n, long d) { return rational(n, d); }
    static rational from_double(double d) { return rational::from_double(d); }
    static double to_double(const rational& v) { return v.to_double(); }
    static rational abs(const rational& v) { return v.abs(); }
    static rational parse(const std::string& tok) { return rational::parse(tok); }
    static std::string format(const rational& v) { return v.str(); }
};

// Tolerance as a scalar: zero in exact mode.
template <class S>
S tol_of(double tol) {
    if constexpr (arith<S>::exact)
        return arith<S>::zero();
    else
        return tol;
}

// Value on the extended nonnegative ray [0, +inf]; rationals have no
// infinity of their own, so the flag carries it for both scalar types.
template <class S>
struct ext_scalar {
    S val{};
    bool inf = false;

    static ext_scalar infinity() { return ext_scalar{arith<S>::zero(), true}; }
    static ext_scalar finite(S v) { return ext_scalar{std::move(v), false}; }

    friend bool operator==(const ext_scalar& a, const ext_scalar& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.val == b.val;
    }
    friend bool operator<(const ext_scalar& a, const ext_scalar& b) {
        if (a.inf) return false;
        if (b.inf) return true;
        return a.val < b.val;
    }

    double to_double() const {
        return inf ? std::numeric_limits<double>::infinity() : arith<S>::to_double(val);
    }
};

} // namespace upquant
