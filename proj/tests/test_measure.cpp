#include "doctest.h"

#include <random>

#include "merging/errors.hpp"
#include "merging/measure.hpp"
#include "support.hpp"

using namespace merging;

namespace {

DyadicMeasure half_mixture() { return mixture({make_rational(1, 2), make_rational(1, 2)}, {uniform(), bernoulli(make_rational(3, 4))}); }

}  // namespace

TEST_SUITE("measure-core") {

TEST_CASE("binary strings") {
    const BinaryString s = BinaryString::parse("0110");
    CHECK(s.size() == 4);
    CHECK(s.str() == "0110");
    CHECK(s.index() == 6);
    CHECK(tree_slot(s) == 15 + 6);
    CHECK(BinaryString::parse("01").is_prefix_of(s));
    CHECK_FALSE(BinaryString::parse("1").is_prefix_of(s));
    CHECK(BinaryString().is_prefix_of(s));
    CHECK(BinaryString::from_index(6, 4) == s);
    CHECK(eventually_periodic(BinaryString::parse("1"), BinaryString::parse("01"), 6).str() == "101010");
    CHECK_THROWS_AS(BinaryString::parse("012"), ValidationError);

    std::vector<std::string> order;
    for_each_string(2, [&](const BinaryString& t) { order.push_back(t.str()); });
    CHECK(order == std::vector<std::string>{"", "0", "1", "00", "01", "10", "11"});
}

TEST_CASE("rationals parse and print") {
    CHECK(parse_rational("3/4") == make_rational(3, 4));
    CHECK(parse_rational("-2") == -2);
    CHECK(to_string(make_rational(6, 8)) == "3/4");
    CHECK(pow2_neg(5) == make_rational(1, 32));
    CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
    CHECK_THROWS_AS(parse_rational("x"), ValidationError);
}

TEST_CASE("masses") {
    CHECK(uniform().mass(BinaryString::parse("010")) == make_rational(1, 8));
    CHECK(bernoulli(make_rational(1, 4)).mass(BinaryString::parse("11")) == make_rational(1, 16));
    CHECK(half_mixture().mass(BinaryString::parse("1")) == make_rational(5, 8));
    CHECK(uniform().mass(BinaryString()) == 1);
}

TEST_CASE("conditionals") {
    CHECK(uniform().cond(BinaryString::parse("0110"), 1) == make_rational(1, 2));
    CHECK(half_mixture().cond(BinaryString::parse("1"), 1) == make_rational(13, 20));
    // coordinate |σ|+1 = 3 governs the bit after σ
    CHECK(harmonic_product().cond(BinaryString::parse("00"), 1) == make_rational(1, 4));
    const DyadicMeasure m = markov(make_rational(1, 3), make_rational(1, 5), make_rational(2, 7));
    CHECK(m.cond(BinaryString(), 1) == make_rational(1, 3));
    CHECK(m.cond(BinaryString::parse("0"), 1) == make_rational(1, 5));
    CHECK(m.cond(BinaryString::parse("01"), 1) == make_rational(2, 7));
}

TEST_CASE("cursor agrees with direct evaluation") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        const DyadicMeasure m = testsupport::random_measure(rng);
        const BinaryString path = sample_path(m, 40, rng());
        MeasureCursor c = m.cursor();
        Rational mass = 1;
        for (std::size_t n = 0; n < path.size(); ++n) {
            CHECK(c.cond(path[n]) == m.cond(path.prefix(n), path[n]));
            CHECK(c.cond(0) + c.cond(1) == 1);
            mass *= c.cond(path[n]);
            c.advance(path[n]);
        }
        CHECK(mass == m.mass(path));
    }
}

TEST_CASE("exact additivity to depth 12") {
    std::mt19937_64 rng(11);
    std::vector<DyadicMeasure> family{uniform(), harmonic_product(), half_mixture()};
    for (int i = 0; i < 5; ++i) family.push_back(testsupport::random_measure(rng));
    for (const auto& m : family) {
        bool ok = true;
        for_each_string(11, [&](const BinaryString& s) {
            ok = ok && m.mass(s.extended(0)) + m.mass(s.extended(1)) == m.mass(s);
        });
        CHECK(ok);
    }
}

TEST_CASE("full support verification") {
    CHECK(verify_full_support(uniform(), 10).pass);
    CHECK(verify_full_support(half_mixture(), 8).pass);
    CHECK(verify_full_support(half_mixture(), 8).strings_checked == 511);
    std::vector<TableEntry> rows{{BinaryString(), make_rational(1, 2), make_rational(1, 2)},
                                 {BinaryString::parse("0"), 1, 0},
                                 {BinaryString::parse("1"), make_rational(1, 2), make_rational(1, 2)}};
    const DyadicMeasure bad = table(2, rows, uniform(), Validation::Unchecked);
    const SupportReport r = verify_full_support(bad, 4);
    CHECK_FALSE(r.pass);
    REQUIRE(r.witness);
    CHECK(r.witness->str() == "0");
    CHECK_THROWS_AS(table(2, rows, uniform()), ValidationError);
}

TEST_CASE("sampling is reproducible and roughly calibrated") {
    CHECK(sample_path(uniform(), 0, 5).size() == 0);
    const BinaryString a = sample_path(uniform(), 10000, 42);
    CHECK(a == sample_path(uniform(), 10000, 42));
    CHECK(a != sample_path(uniform(), 10000, 43));
    std::size_t ones = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ones += a[i];
    CHECK(ones > 4800);
    CHECK(ones < 5200);
    const BinaryString b = sample_path(bernoulli(make_rational(1, 4)), 10000, 42);
    ones = 0;
    for (std::size_t i = 0; i < b.size(); ++i) ones += b[i];
    CHECK(ones >= 2200);
    CHECK(ones <= 2800);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}

TEST_CASE("measure spec parsing") {
    const DyadicMeasure b = parse_measure_spec(R"({"spec_version":1,"kind":"bernoulli","p":"1/4"})");
    CHECK(b.cond(BinaryString(), 1) == make_rational(1, 4));
    const DyadicMeasure m = parse_measure_spec(
        R"({"spec_version":1,"kind":"mixture","weights":["1/2","1/2"],"components":[{"kind":"uniform"},{"kind":"bernoulli","p":"3/4"}]})");
    CHECK(m.mass(BinaryString::parse("1")) == make_rational(5, 8));
    CHECK_THROWS_AS(parse_measure_spec(R"({"spec_version":1,"kind":"bernoulli","p":"5/4"})"), ValidationError);
    CHECK_THROWS_AS(parse_measure_spec(R"({"spec_version":1,"kind":"bernoulli"})"), ParseError);
    CHECK_THROWS_AS(parse_measure_spec(R"({"kind":"bernoulli","p":"1/4"})"), ValidationError);
    CHECK_THROWS_AS(parse_measure_spec(R"({"spec_version":1,"kind":"nope"})"), ValidationError);
    CHECK_THROWS_AS(parse_measure_spec("{not json"), ParseError);
    CHECK_THROWS_AS(parse_measure_spec(
                        R"({"spec_version":1,"kind":"mixture","weights":["1/2","1/3"],"components":[{"kind":"uniform"},{"kind":"uniform"}]})"),
                    ValidationError);

    const DyadicMeasure t = parse_measure_spec(R"({"spec_version":1,"kind":"table","depth":1,
        "conditionals":[{"sigma":"","p":"1/3"}],"tail":{"kind":"bernoulli","p":"1/5"}})");
    CHECK(t.cond(BinaryString(), 1) == make_rational(1, 3));
    CHECK(t.cond(BinaryString::parse("0"), 1) == make_rational(1, 5));

    const DyadicMeasure h = parse_measure_spec(R"({"spec_version":1,"kind":"product","rule":"inverse_shift","c":"1"})");
    CHECK(h.cond(BinaryString::parse("00"), 1) == make_rational(1, 4));
}

TEST_CASE("specs round trip through JSON") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const DyadicMeasure m = testsupport::random_measure(rng);
        const DyadicMeasure back = parse_measure_spec(measure_document(m).dump());
        bool same = true;
        for_each_string(6, [&](const BinaryString& s) { same = same && back.mass(s) == m.mass(s); });
        CHECK(same);
    }
}

TEST_CASE("conditional tables") {
    const auto t = conditional_table(half_mixture(), 3);
    CHECK(t.size() == 7);
    CHECK(t[tree_slot(BinaryString::parse("1"))][1] == make_rational(13, 20));
    const auto r = conditional_table_real(half_mixture(), 3, 128);
    CHECK(testsupport::close(r[tree_slot(BinaryString::parse("1"))][1], "0.65", 100));
}

}
