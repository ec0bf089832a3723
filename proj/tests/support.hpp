#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "merging/measure.hpp"
#include "merging/real.hpp"
#include "merging/synthesis.hpp"

namespace testsupport {

using namespace merging;

// |x - oracle| <= 2^-bits, oracle given as a decimal string.
inline bool close(const Real& x, const std::string& oracle, long bits) {
    const Real o = Real::parse(oracle, std::max(x.precision(), 160u));
    return !(abs(x - o) > pow2_neg(bits, o.precision()));
}

inline bool close(const Real& x, const Real& y, long bits) {
    return !(abs(x - y) > pow2_neg(bits, std::max(x.precision(), y.precision())));
}

// k/64 with k in [16, 48].
inline Rational random_cond(std::mt19937_64& rng) {
    std::uniform_int_distribution<long> d(16, 48);
    return make_rational(d(rng), 64);
}

// Table of conditionals to depth 4 over a Bernoulli tail, a Markov chain, a
// product table, a Bernoulli, or a two-component mixture; all exact.
inline DyadicMeasure random_measure(std::mt19937_64& rng) {
    switch (rng() % 5) {
        case 0: {
            std::vector<TableEntry> rows;
            for_each_string(3, [&](const BinaryString& s) {
                const Rational p0 = random_cond(rng);
                rows.push_back(TableEntry{s, p0, 1 - p0});
            });
            return table(4, rows, bernoulli(random_cond(rng)));
        }
        case 1:
            return markov(random_cond(rng), random_cond(rng), random_cond(rng));
        case 2: {
            ProductRule r;
            r.form = ProductRule::Form::Table;
            for (int i = 0; i < 6; ++i) r.table.push_back(random_cond(rng));
            r.tail = random_cond(rng);
            return product(r);
        }
        case 3:
            return bernoulli(random_cond(rng));
        default: {
            const Rational w = random_cond(rng);
            return mixture({w, 1 - w}, {bernoulli(random_cond(rng)), markov(random_cond(rng), random_cond(rng),
                                                                               random_cond(rng))});
        }
    }
}

// Table spec with random increments in [0, max_num/den] at every |σ| < depth.
inline PredictableSpec random_predictable(std::mt19937_64& rng, std::size_t depth, long max_num, unsigned long den) {
    std::uniform_int_distribution<long> d(0, max_num);
    std::vector<std::pair<BinaryString, Rational>> inc;
    if (depth > 0) {
        for_each_string(depth - 1, [&](const BinaryString& s) { inc.emplace_back(s, make_rational(d(rng), den)); });
    }
    return PredictableSpec::table(inc, 0);
}

}  // namespace testsupport
