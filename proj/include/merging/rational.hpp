#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace merging {

// Exact rational in lowest terms with positive denominator. gmpxx keeps the
// canonical form through arithmetic; values built from parts must go through
// make_rational or parse_rational.
using Rational = mpq_class;

Rational make_rational(long num, unsigned long den);

// Parses "num/den" or an integer "num". Throws ParseError on malformed text
// or a zero denominator.
Rational parse_rational(std::string_view text);

// "num/den", or "num" when the denominator is 1.
std::string to_string(const Rational& q);

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

// 2^{-n} as an exact rational.
Rational pow2_neg(unsigned long n);

}  // namespace merging
