#pragma once

#include <mpfr.h>

#include <compare>
#include <string>

#include "merging/rational.hpp"

namespace merging {

// Working precision of approximate reals, in bits.
inline constexpr unsigned kDefaultPrecision = 128;

// Arbitrary-precision binary floating point number (MPFR, round to nearest).
// Every arithmetic, log, exp, sqrt and pow result is correctly rounded to the
// result precision, so each operation carries relative error <= 2^{1-P}.
// Binary operations produce a value at the larger of the operand precisions.
class Real {
public:
    explicit Real(unsigned precision = kDefaultPrecision);
    Real(long value, unsigned precision);
    Real(const Rational& value, unsigned precision);
    static Real from_double(double value, unsigned precision = kDefaultPrecision);
    // Parses a decimal rendering; throws ParseError on malformed input.
    static Real parse(const std::string& text, unsigned precision = kDefaultPrecision);

    Real(const Real& other);
    Real(Real&& other) noexcept;
    Real& operator=(const Real& other);
    Real& operator=(Real&& other) noexcept;
    ~Real();

    unsigned precision() const noexcept { return static_cast<unsigned>(mpfr_get_prec(value_)); }
    // Rounds to a new precision.
    Real with_precision(unsigned precision) const;

    mpfr_srcptr get() const noexcept { return value_; }
    mpfr_ptr get() noexcept { return value_; }

    double to_double() const noexcept { return mpfr_get_d(value_, MPFR_RNDN); }
    // Scientific notation with `digits` significant decimal digits; exact
    // zero renders as "0".
    std::string to_string(int digits = 30) const;

    bool is_zero() const noexcept { return mpfr_zero_p(value_) != 0; }
    bool is_nan() const noexcept { return mpfr_nan_p(value_) != 0; }
    int sign() const noexcept { return mpfr_sgn(value_); }

    Real& operator+=(const Real& o);
    Real& operator-=(const Real& o);
    Real& operator*=(const Real& o);
    Real& operator/=(const Real& o);
    Real& operator+=(const Rational& o);
    Real& operator-=(const Rational& o);
    Real& operator*=(const Rational& o);

    Real operator-() const;

    friend Real operator+(Real a, const Real& b) { return a += b; }
    friend Real operator-(Real a, const Real& b) { return a -= b; }
    friend Real operator*(Real a, const Real& b) { return a *= b; }
    friend Real operator/(Real a, const Real& b) { return a /= b; }
    friend Real operator+(Real a, const Rational& b) { return a += b; }
    friend Real operator-(Real a, const Rational& b) { return a -= b; }
    friend Real operator*(Real a, const Rational& b) { return a *= b; }

    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.value_, b.value_) != 0; }
    friend std::partial_ordering operator<=>(const Real& a, const Real& b);
    // Exact comparison against a rational.
    friend bool operator==(const Real& a, const Rational& b) { return mpfr_cmp_q(a.value_, b.get_mpq_t()) == 0; }
    friend std::partial_ordering operator<=>(const Real& a, const Rational& b);

private:
    void adopt_precision(const Real& o);
    mpfr_t value_;
};

Real log(const Real& x);
Real exp(const Real& x);
Real sqrt(const Real& x);
Real pow(const Real& x, const Real& y);
Real abs(const Real& x);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);
// ln(q) and sqrt(q) for a positive rational, evaluated with guard bits and
// rounded to `precision` bits.
Real log(const Rational& q, unsigned precision);
Real sqrt(const Rational& q, unsigned precision);
// Scientific decimal rendering with every significant digit the precision
// carries (ceil(P log10 2) + 1 digits).
std::string render(const Real& x);
// 2^{-n} (exact).
Real pow2_neg(long n, unsigned precision);

}  // namespace merging
