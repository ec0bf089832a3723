#include "merging/rational.hpp"

#include <cctype>

#include "merging/errors.hpp"

namespace merging {

Rational make_rational(long num, unsigned long den) {
    if (den == 0) throw ValidationError("rational", "zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

namespace {

bool valid_integer(std::string_view s, bool allow_sign) {
    if (s.empty()) return false;
    std::size_t i = 0;
    if (allow_sign && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const auto slash = text.find('/');
    std::string_view num = text.substr(0, slash);
    std::string_view den = slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
    if (!valid_integer(num, true) || !valid_integer(den, false)) {
        throw ParseError("rational", "\"" + std::string(text) + "\"", "expected \"num/den\"");
    }
    std::string n(num);
    if (!n.empty() && n[0] == '+') n.erase(0, 1);
    mpz_class zn(n, 10);
    mpz_class zd(std::string(den), 10);
    if (zd == 0) throw ParseError("rational", "\"" + std::string(text) + "\"", "zero denominator");
    Rational q(zn, zd);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational pow2_neg(unsigned long n) {
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, n);
    return Rational(mpz_class(1), den);
}

}  // namespace merging
