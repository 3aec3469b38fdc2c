#pragma once

// Arbitrary-precision rational scalar backed by GMP's mpq_t.
// Thin value wrapper: canonical form is maintained by every operation,
// so equality is structural and comparisons are exact.

#include <gmp.h>

#include <cstdint>
#include <string>
#include <utility>

#include "upquant/errors.hpp"

namespace upquant {

class rational {
public:
    rational() { mpq_init(v_); }

    rational(long n) { // NOLINT(google-explicit-constructor) intentional: scalars convert from ints
        mpq_init(v_);
        mpq_set_si(v_, n, 1);
    }

    rational(long num, long den) {
        if (den == 0) throw error(errc::invalid_spec, "rational with zero denominator");
        mpq_init(v_);
        if (den < 0) { num = -num; den = -den; }
        mpq_set_si(v_, num, static_cast<unsigned long>(den));
        mpq_canonicalize(v_);
    }

    rational(const rational& o) {
        mpq_init(v_);
        mpq_set(v_, o.v_);
    }

    rational(rational&& o) noexcept {
        mpq_init(v_);
        mpq_swap(v_, o.v_);
    }

    rational& operator=(const rational& o) {
        if (this != &o) mpq_set(v_, o.v_);
        return *this;
    }

    rational& operator=(rational&& o) noexcept {
        mpq_swap(v_, o.v_);
        return *this;
    }

    ~rational() { mpq_clear(v_); }

    // Exact conversion: every finite double is a dyadic rational.
    static rational from_double(double d) {
        rational r;
        mpq_set_d(r.v_, d);
        return r;
    }

    // Accepts "a/b", "a", decimal ("0.125") and scientific ("1.25e-3") forms, all exact.
    static rational parse(const std::string& s);

    double to_double() const { return mpq_get_d(v_); }

    int sign() const { return mpq_sgn(v_); }

    rational abs() const {
        rational r(*this);
        mpq_abs(r.v_, r.v_);
        return r;
    }

    friend rational operator+(const rational& a, const rational& b) {
        rational r;
        mpq_add(r.v_, a.v_, b.v_);
        return r;
    }
    friend rational operator-(const rational& a, const rational& b) {
        rational r;
        mpq_sub(r.v_, a.v_, b.v_);
        return r;
    }
    friend rational operator*(const rational& a, const rational& b) {
        rational r;
        mpq_mul(r.v_, a.v_, b.v_);
        return r;
    }
    friend rational operator/(const rational& a, const rational& b) {
        if (mpq_sgn(b.v_) == 0) throw error(errc::invalid_spec, "rational division by zero");
        rational r;
        mpq_div(r.v_, a.v_, b.v_);
        return r;
    }
    friend rational operator-(const rational& a) {
        rational r;
        mpq_neg(r.v_, a.v_);
        return r;
    }

    rational& operator+=(const rational& b) { mpq_add(v_, v_, b.v_); return *this; }
    rational& operator-=(const rational& b) { mpq_sub(v_, v_, b.v_); return *this; }
    rational& operator*=(const rational& b) { mpq_mul(v_, v_, b.v_); return *this; }
    rational& operator/=(const rational& b) { return *this = *this / b; }

    friend bool operator==(const rational& a, const rational& b) { return mpq_equal(a.v_, b.v_) != 0; }
    friend bool operator!=(const rational& a, const rational& b) { return !(a == b); }
    friend bool operator<(const rational& a, const rational& b) { return mpq_cmp(a.v_, b.v_) < 0; }
    friend bool operator>(const rational& a, const rational& b) { return mpq_cmp(a.v_, b.v_) > 0; }
    friend bool operator<=(const rational& a, const rational& b) { return mpq_cmp(a.v_, b.v_) <= 0; }
    friend bool operator>=(const rational& a, const rational& b) { return mpq_cmp(a.v_, b.v_) >= 0; }

    // Canonical text form: "a" when the denominator is 1, else "a/b".
    std::string str() const {
        char* raw = mpq_get_str(nullptr, 10, v_);
        std::string s(raw);
        void (*freefn)(void*, size_t);
        mp_get_memory_functions(nullptr, nullptr, &freefn);
        freefn(raw, s.size() + 1);
        return s;
    }

private:
    mpq_t v_;
};

inline rational rational::parse(const std::string& s) {
    if (s.empty()) throw error(errc::syntax_error, "empty scalar token");
    if (s.find('/') != std::string::npos) {
        rational r;
        if (mpq_set_str(r.v_, s.c_str(), 10) != 0)
            throw error(errc::syntax_error, "bad rational literal '" + s + "'");
        if (mpz_sgn(mpq_denref(r.v_)) == 0)
            throw error(errc::syntax_error, "zero denominator in '" + s + "'");
        mpq_canonicalize(r.v_);
        return r;
    }
    // Decimal / scientific literal, converted exactly: m * 10^e.
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = (s[i++] == '-');
    std::string digits;
    long exp10 = 0;
    bool saw_digit = false, saw_dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (saw_dot) --exp10;
            saw_digit = true;
        } else if (c == '.' && !saw_dot) {
            saw_dot = true;
        } else if ((c == 'e' || c == 'E') && saw_digit) {
            long e = 0;
            bool eneg = false;
            ++i;
            if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = (s[i++] == '-');
            if (i >= s.size()) throw error(errc::syntax_error, "bad exponent in '" + s + "'");
            for (; i < s.size(); ++i) {
                if (s[i] < '0' || s[i] > '9')
                    throw error(errc::syntax_error, "bad exponent in '" + s + "'");
                e = e * 10 + (s[i] - '0');
                if (e > 1000000) throw error(errc::syntax_error, "exponent out of range in '" + s + "'");
            }
            exp10 += eneg ? -e : e;
            break;
        } else {
            throw error(errc::syntax_error, "bad numeric literal '" + s + "'");
        }
    }
    if (!saw_digit) throw error(errc::syntax_error, "bad numeric literal '" + s + "'");

    rational r;
    mpz_t m;
    mpz_init(m);
    if (digits.empty()) digits = "0";
    mpz_set_str(m, digits.c_str(), 10);
    if (neg) mpz_neg(m, m);
    mpz_set(mpq_numref(r.v_), m);
    mpz_set_ui(mpq_denref(r.v_), 1);
    if (exp10 > 0) {
        mpz_ui_pow_ui(m, 10, static_cast<unsigned long>(exp10));
        mpz_mul(mpq_numref(r.v_), mpq_numref(r.v_), m);
    } else if (exp10 < 0) {
        mpz_ui_pow_ui(m, 10, static_cast<unsigned long>(-exp10));
        mpz_set(mpq_denref(r.v_), m);
    }
    mpz_clear(m);
    mpq_canonicalize(r.v_);
    return r;
}

} // namespace upquant
