#include "merging/real.hpp"

#include <algorithm>
#include <vector>

#include "merging/errors.hpp"

namespace merging {

namespace {

constexpr unsigned kGuardBits = 32;

mpfr_prec_t clamp_precision(unsigned p) {
    return std::max<mpfr_prec_t>(MPFR_PREC_MIN, static_cast<mpfr_prec_t>(p));
}

}  // namespace

Real::Real(unsigned precision) {
    mpfr_init2(value_, clamp_precision(precision));
    mpfr_set_zero(value_, 1);
}

Real::Real(long value, unsigned precision) {
    mpfr_init2(value_, clamp_precision(precision));
    mpfr_set_si(value_, value, MPFR_RNDN);
}

Real::Real(const Rational& value, unsigned precision) {
    mpfr_init2(value_, clamp_precision(precision));
    mpfr_set_q(value_, value.get_mpq_t(), MPFR_RNDN);
}

Real Real::from_double(double value, unsigned precision) {
    Real r(precision);
    mpfr_set_d(r.value_, value, MPFR_RNDN);
    return r;
}

Real Real::parse(const std::string& text, unsigned precision) {
    Real r(precision);
    char* end = nullptr;
    mpfr_strtofr(r.value_, text.c_str(), &end, 10, MPFR_RNDN);
    if (text.empty() || end == text.c_str() || *end != '\0') {
        throw ParseError("real", "\"" + text + "\"", "expected a decimal number");
    }
    return r;
}

Real::Real(const Real& other) {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
    mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
    if (this != &other) {
        mpfr_set_prec(value_, mpfr_get_prec(other.value_));
        mpfr_set(value_, other.value_, MPFR_RNDN);
    }
    return *this;
}

Real& Real::operator=(Real&& other) noexcept {
    mpfr_swap(value_, other.value_);
    return *this;
}

Real::~Real() { mpfr_clear(value_); }

Real Real::with_precision(unsigned precision) const {
    Real r(precision);
    mpfr_set(r.value_, value_, MPFR_RNDN);
    return r;
}

std::string Real::to_string(int digits) const {
    if (is_nan()) return "nan";
    if (is_zero()) return "0";
    if (mpfr_inf_p(value_)) return sign() > 0 ? "inf" : "-inf";
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Re", std::max(digits - 1, 0), value_);
    std::string out(buf);
    mpfr_free_str(buf);
    return out;
}

void Real::adopt_precision(const Real& o) {
    if (mpfr_get_prec(o.value_) > mpfr_get_prec(value_)) mpfr_prec_round(value_, mpfr_get_prec(o.value_), MPFR_RNDN);
}

Real& Real::operator+=(const Real& o) {
    adopt_precision(o);
    mpfr_add(value_, value_, o.value_, MPFR_RNDN);
    return *this;
}

Real& Real::operator-=(const Real& o) {
    adopt_precision(o);
    mpfr_sub(value_, value_, o.value_, MPFR_RNDN);
    return *this;
}

Real& Real::operator*=(const Real& o) {
    adopt_precision(o);
    mpfr_mul(value_, value_, o.value_, MPFR_RNDN);
    return *this;
}

Real& Real::operator/=(const Real& o) {
    adopt_precision(o);
    mpfr_div(value_, value_, o.value_, MPFR_RNDN);
    return *this;
}

Real& Real::operator+=(const Rational& o) {
    mpfr_add_q(value_, value_, o.get_mpq_t(), MPFR_RNDN);
    return *this;
}

Real& Real::operator-=(const Rational& o) {
    mpfr_sub_q(value_, value_, o.get_mpq_t(), MPFR_RNDN);
    return *this;
}

Real& Real::operator*=(const Rational& o) {
    mpfr_mul_q(value_, value_, o.get_mpq_t(), MPFR_RNDN);
    return *this;
}

Real Real::operator-() const {
    Real r(*this);
    mpfr_neg(r.value_, r.value_, MPFR_RNDN);
    return r;
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
    if (a.is_nan() || b.is_nan()) return std::partial_ordering::unordered;
    int c = mpfr_cmp(a.value_, b.value_);
    return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

std::partial_ordering operator<=>(const Real& a, const Rational& b) {
    if (a.is_nan()) return std::partial_ordering::unordered;
    int c = mpfr_cmp_q(a.value_, b.get_mpq_t());
    return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}

Real log(const Real& x) {
    Real r(x.precision());
    mpfr_log(r.get(), x.get(), MPFR_RNDN);
    return r;
}

Real exp(const Real& x) {
    Real r(x.precision());
    mpfr_exp(r.get(), x.get(), MPFR_RNDN);
    return r;
}

Real sqrt(const Real& x) {
    Real r(x.precision());
    mpfr_sqrt(r.get(), x.get(), MPFR_RNDN);
    return r;
}

Real pow(const Real& x, const Real& y) {
    Real r(std::max(x.precision(), y.precision()));
    mpfr_pow(r.get(), x.get(), y.get(), MPFR_RNDN);
    return r;
}

Real abs(const Real& x) {
    Real r(x);
    mpfr_abs(r.get(), r.get(), MPFR_RNDN);
    return r;
}

Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

Real log(const Rational& q, unsigned precision) {
    if (q == 1) return Real(precision);
    Real wide(q, precision + kGuardBits);
    return log(wide).with_precision(precision);
}

Real sqrt(const Rational& q, unsigned precision) {
    Real wide(q, precision + kGuardBits);
    return sqrt(wide).with_precision(precision);
}

std::string render(const Real& x) {
    return x.to_string(static_cast<int>(x.precision() * 0.30103) + 2);
}

Real pow2_neg(long n, unsigned precision) {
    Real r(1, precision);
    mpfr_div_2si(r.get(), r.get(), n, MPFR_RNDN);
    return r;
}

}  // namespace merging
