#include "doctest.h"

#include <random>
#include <sstream>

#include "merging/delta.hpp"
#include "merging/errors.hpp"
#include "merging/martingale.hpp"
#include "support.hpp"

using namespace merging;
using testsupport::close;

namespace {

const char* kKlUniformB14 = "0.1438410362258904637196095029969137157518";

DyadicFunction zero_function() {
    return DyadicFunction("zero", [](const BinaryString&, unsigned prec) { return Real(prec); });
}

}  // namespace

TEST_SUITE("martingale") {

TEST_CASE("likelihood ratio martingale") {
    const auto m = ratio_martingale(uniform(), uniform());
    CHECK(m(BinaryString::parse("0101")) == 1);
    const auto r = ratio_martingale(bernoulli(make_rational(1, 4)), uniform());
    CHECK(r(BinaryString::parse("11")) == make_rational(1, 4));
    const MartingaleVerdict v = check_martingale(r, uniform(), 12, MartingaleMode::Martingale);
    CHECK(v.pass);
    CHECK(v.max_abs_residual.is_zero());
    CHECK(v.nodes_checked == 4095);
}

TEST_CASE("log-likelihood submartingale") {
    const DyadicFunction same = log_submartingale(uniform(), uniform());
    CHECK(same(BinaryString::parse("0110")).is_zero());
    const DyadicFunction L = log_submartingale(bernoulli(make_rational(1, 4)), uniform());
    CHECK(close(L(BinaryString::parse("1")), "0.6931471805599453094172321214581765680755", 120));
    const auto tab = L.tabulate(6);
    bool agree = true;
    for_each_string(6, [&](const BinaryString& s) { agree = agree && close(tab[tree_slot(s)], L(s), 110); });
    CHECK(agree);
    CHECK(check_martingale(L, uniform(), 12, pow2_neg(40, 128), MartingaleMode::Sub).pass);
    CHECK_FALSE(check_martingale(L, uniform(), 6, pow2_neg(40, 128), MartingaleMode::Martingale).pass);
}

TEST_CASE("martingale check finds the first violation") {
    const DyadicFunction len("length", [](const BinaryString& s, unsigned prec) {
        return Real(static_cast<long>(s.size()), prec);
    });
    const MartingaleVerdict v = check_martingale(len, uniform(), 4, pow2_neg(40, 128), MartingaleMode::Martingale);
    CHECK_FALSE(v.pass);
    REQUIRE(v.witness);
    CHECK(v.witness->empty());
    CHECK(close(v.witness_residual, "1", 100));
    CHECK(check_martingale(len, uniform(), 4, pow2_neg(40, 128), MartingaleMode::Sub).pass);
}

TEST_CASE("conditional expectation martingales") {
    const auto one = cond_expectation_martingale({{1, BinaryString()}}, uniform());
    CHECK(one(BinaryString::parse("0110")) == 1);
    const auto twice = cond_expectation_martingale({{2, BinaryString::parse("0")}}, uniform());
    CHECK(twice(BinaryString()) == 1);
    CHECK(twice(BinaryString::parse("0")) == 2);
    CHECK(twice(BinaryString::parse("1")) == 0);
    const auto pair = cond_expectation_martingale({{1, BinaryString::parse("00")}, {1, BinaryString::parse("11")}}, uniform());
    CHECK(pair(BinaryString()) == make_rational(1, 2));
    CHECK(pair(BinaryString::parse("0")) == make_rational(1, 2));
    CHECK(pair(BinaryString::parse("00")) == 1);
    CHECK(pair(BinaryString::parse("01")) == 0);
    CHECK(check_martingale(pair, uniform(), 6, MartingaleMode::Martingale).pass);
    CHECK_THROWS_AS(cond_expectation_martingale({{-1, BinaryString()}}, uniform()), ValidationError);
}

TEST_CASE("Doob decomposition of zero") {
    const DoobDecomposition d = doob_decompose(zero_function(), uniform(), 5);
    bool zero = true;
    for (std::size_t i = 0; i < tree_size(5); ++i) zero = zero && d.N[i].is_zero() && d.A[i].is_zero();
    CHECK(zero);
}

TEST_CASE("Doob decomposition against the constant-increment closed form") {
    const DyadicFunction L = log_submartingale(bernoulli(make_rational(1, 4)), uniform());
    const DoobDecomposition d = doob_decompose(L, uniform(), 8);
    const DoobDecomposition aux = doob_via_auxiliary(L, uniform(), 8);
    const Real step = Real::parse(kKlUniformB14, 160);
    bool ok = true, routes = true;
    for_each_string(8, [&](const BinaryString& s) {
        const std::size_t slot = tree_slot(s);
        ok = ok && close(d.A[slot], step * Real(static_cast<long>(s.size()), 160), 110);
        ok = ok && close(d.L[slot], d.N[slot] + d.A[slot], 120);
        routes = routes && close(d.A[slot], aux.A[slot], 110) && close(d.N[slot], aux.N[slot], 110);
    });
    CHECK(ok);
    CHECK(routes);
    CHECK(close(d.increment(BinaryString::parse("0101")), kKlUniformB14, 110));
    std::vector<std::array<Real, 2>> conds = conditional_table_real(uniform(), 8);
    CHECK(check_martingale(d.N.values(), conds, 8, pow2_neg(40, 128), MartingaleMode::Martingale).pass);
}

TEST_CASE("Doob decomposition on random pairs") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 5; ++i) {
        const DyadicMeasure nu = testsupport::random_measure(rng);
        const DyadicMeasure mu = testsupport::random_measure(rng);
        DoobOptions opts;
        opts.check_submartingale = true;
        const DoobDecomposition d = doob_decompose(log_submartingale(mu, nu), nu, 7, opts);
        bool predictable = true;
        for_each_string(6, [&](const BinaryString& s) {
            predictable = predictable && d.A.at(s.extended(0)) == d.A.at(s.extended(1));
        });
        CHECK(predictable);
        CHECK(d.min_increment > -pow2_neg(40, 128));
    }
}

TEST_CASE("a supermartingale input is rejected") {
    const DyadicFunction neg("minus length", [](const BinaryString& s, unsigned prec) {
        return Real(-static_cast<long>(s.size()), prec);
    });
    CHECK_THROWS_AS(doob_decompose(neg, uniform(), 3), ComputationError);
    DoobOptions opts;
    opts.check_submartingale = true;
    CHECK_THROWS_AS(doob_decompose(neg, uniform(), 3, opts), ValidationError);
}

TEST_CASE("Doob CSV") {
    const DoobDecomposition d = doob_decompose(zero_function(), uniform(), 1);
    std::ostringstream out;
    write_doob_csv(d, out);
    const std::string csv = out.str();
    CHECK(csv.rfind("sigma,L,N,A,precision_bits\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("delta classes") {
    const DeltaPartition two = delta_classes(parse_gmap("shift:2"), 20);
    REQUIRE(two.classes.size() == 2);
    CHECK(two.classes[0] == std::vector<std::size_t>{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20});
    CHECK(two.classes[1] == std::vector<std::size_t>{1, 3, 5, 7, 9, 11, 13, 15, 17, 19});
    CHECK(two.class_of(7) == 1);
    CHECK(delta_classes(parse_gmap("shift:1"), 20).classes.size() == 1);
    CHECK_THROWS_AS(delta_classes(parse_gmap("affine:2:1"), 64), ComputationError);
    CHECK_THROWS_AS(parse_gmap("shift:0"), ValidationError);
    CHECK_THROWS_AS(parse_gmap("cube"), ParseError);
}

TEST_CASE("horizons") {
    CHECK(HorizonSpec::parse("weak", 10).steps(3) == 1);
    CHECK(HorizonSpec::parse("step:3", 10).steps(3) == 3);
    const HorizonSpec aug = HorizonSpec::parse("shift:2", 10);
    CHECK(aug.variant() == HorizonSpec::Variant::Augmented);
    CHECK(aug.target(4) == 6);
    CHECK_THROWS_AS(aug.target(11), ValidationError);
    CHECK_THROWS_AS(HorizonSpec::parse("step:0", 10), ValidationError);
}

TEST_CASE("delta-ary decomposition") {
    const DyadicFunction L = log_submartingale(bernoulli(make_rational(1, 4)), uniform());
    const DeltaPartition p = delta_classes(parse_gmap("shift:2"), 8);
    const DaryDoobDecomposition even = dary_doob(L, uniform(), p.classes[0], 8);
    CHECK(even.lengths == std::vector<std::size_t>{0, 2, 4, 6, 8});
    CHECK(even.a(BinaryString()).is_zero());
    CHECK(close(even.a(BinaryString::parse("01")), "0.2876820724517809274392190059938274315036", 110));
    CHECK(close(even.a(BinaryString::parse("0110")), "0.5753641449035618548784380119876548630072", 110));

    const DaryDoobDecomposition zero = dary_doob(zero_function(), uniform(), p.classes[1], 7);
    bool all_zero = true;
    for (const auto& level : zero.A) {
        for (const auto& v : level) all_zero = all_zero && v.is_zero();
    }
    CHECK(all_zero);

    // the g(n) = n+1 class reproduces the ordinary decomposition
    const DoobDecomposition d = doob_decompose(L, uniform(), 8);
    const DaryDoobDecomposition all = dary_doob(L, uniform(), delta_classes(parse_gmap("shift:1"), 8).classes[0], 8);
    bool same = true;
    for_each_string(8, [&](const BinaryString& s) {
        same = same && close(all.a(s), d.A.at(s), 110) && close(all.n(s), d.N.at(s), 110);
    });
    CHECK(same);
}

}
