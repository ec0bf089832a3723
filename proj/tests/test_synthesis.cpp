#include "doctest.h"

#include <random>

#include "merging/divergence.hpp"
#include "merging/errors.hpp"
#include "merging/synthesis.hpp"
#include "support.hpp"

using namespace merging;
using testsupport::close;

namespace {

const char* kV = "0.1339745962155613532362768292470638165286";
const char* kMu0 = "0.9330127018922193233818615853764680917357";
const char* kMu1 = "0.0669872981077806766181384146235319082643";
const char* kLn2 = "0.6931471805599453094172321214581765680755";
const char* kHellX = "0.8923009049186606197013283785473654093223";

RootSolveConfig fine() {
    RootSolveConfig c;
    c.precision_bits = 60;
    return c;
}

PredictableSpec root_only(const Rational& inc) { return PredictableSpec::table({{BinaryString(), inc}}, 0); }

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("predictable specs") {
    const PredictableSpec lz = PredictableSpec::leading_zeros();
    CHECK(lz.increment(BinaryString::parse("000")) == 1);
    CHECK(lz.increment(BinaryString::parse("010")) == 0);
    CHECK(lz.value(BinaryString::parse("0001")) == 4);
    CHECK(lz.value(BinaryString::parse("0010")) == 3);
    for (std::size_t n = 0; n <= 50; ++n) {
        CHECK(lz.expectation(uniform(), n) == 2 - pow2_neg(n) * 2);
    }
    const PredictableSpec t = PredictableSpec::parse(R"({"increments":[{"sigma":"00","value":"1/2"}],"default":"0"})");
    CHECK(t.increment(BinaryString::parse("00")) == make_rational(1, 2));
    CHECK(t.value(BinaryString::parse("001")) == make_rational(1, 2));
    CHECK(t.expectation(uniform(), 3) == make_rational(1, 8));
    CHECK(t.expectation(uniform(), 2) == 0);
    CHECK_THROWS_AS(PredictableSpec::parse(R"({"increments":[{"sigma":"0","value":"-1"}],"default":"0"})"),
                    ValidationError);
    CHECK_THROWS_AS(PredictableSpec::parse(R"({"increments":[{"sigma":"2","value":"1"}]})"), ValidationError);
    const PredictableSpec back = PredictableSpec::from_json(t.to_json());
    CHECK(back.value(BinaryString::parse("000")) == make_rational(1, 2));

    const PredictableSpec f = PredictableSpec::function("len", [](const BinaryString& s) { return Rational(s.size()); });
    CHECK(f.expectation(uniform(), 4) == 6);
}

TEST_CASE("test to predictable") {
    const TestSpec zero = TestSpec::parse(R"({"levels":[{"q":"0","cylinders":[]}]})");
    const PredictableSpec a0 = test_to_predictable(zero, 1, 8);
    CHECK(a0.value(BinaryString::parse("01101101")) == 0);

    const TestSpec one = TestSpec::parse(R"({"levels":[{"q":"0","cylinders":[]},{"q":"3","cylinders":["0"]}]})");
    const PredictableSpec a = test_to_predictable(one, 4, 10);
    CHECK(a.value(BinaryString::parse("0")) == 0);
    CHECK(a.value(BinaryString::parse("00")) == 3);
    CHECK(a.value(BinaryString::parse("0000000000")) == 3);
    CHECK(a.value(BinaryString::parse("0111")) == 3);
    CHECK(a.value(BinaryString::parse("1000000")) == 0);
    CHECK_FALSE(a.note().empty());

    CHECK_THROWS_AS(TestSpec::parse(R"({"levels":[{"q":"1","cylinders":[]}]})").validate(), ValidationError);
    CHECK_THROWS_AS(test_to_predictable(one, 0, 4), ValidationError);
}

TEST_CASE("bisection") {
    RootSolveConfig cfg;
    cfg.precision_bits = 50;
    const auto r = solve_bracketed_decreasing([](const Real& x) { return Real(1, 128) - x * Rational(2); },
                                              Real(0, 128), Real(1, 128), cfg);
    CHECK(close(r.root, "0.5", 50));
    CHECK(r.iterations <= 52);
    CHECK_THROWS_AS(solve_bracketed_decreasing([](const Real& x) { return x; }, Real(0, 128), Real(1, 128), cfg),
                    ComputationError);
    RootSolveConfig tight = cfg;
    tight.max_iterations = 3;
    CHECK_THROWS_AS(solve_bracketed_decreasing([](const Real& x) { return Real(1, 128) - x * Rational(2); },
                                               Real(0, 128), Real(1, 128), tight),
                    ComputationError);
    RootSolveConfig bad;
    bad.precision_bits = 200;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("closed-form roots") {
    const Real half(make_rational(1, 2), 128);
    const RootSolveResult v = kl_node_root(half, log(Rational(2), 128), Real(1, 128), fine());
    CHECK(close(v.root, kV, 50));
    const RootSolveResult x = hellinger_node_root(half, Real(make_rational(9, 10), 128), fine());
    CHECK(close(x.root, kHellX, 50));
}

TEST_CASE("KL synthesis at a single node") {
    // increment ln 2 at the root, rounded to a rational well inside 2^-60
    const Real ln2 = Real::parse(kLn2, 256);
    const Rational inc(mpq_class(mpz_class("6931471805599453094172321214581765680755"),
                                 mpz_class("10000000000000000000000000000000000000000")));
    const DyadicMeasure mu = measure_from_predictable_kl(uniform(), root_only(inc), fine());
    CHECK(close(mu.cond_real(BinaryString(), 0, 128), kMu0, 55));
    CHECK(close(mu.cond_real(BinaryString(), 1, 128), kMu1, 55));
    CHECK(close(kl_step(uniform(), mu, BinaryString()), ln2, 40));
    // zero increments copy the base conditionals
    CHECK(close(mu.cond_real(BinaryString::parse("1"), 1, 128), "0.5", 100));

    const DyadicMeasure skew =
        measure_from_predictable_kl(bernoulli(make_rational(2, 3)), root_only(make_rational(1, 5)), fine());
    CHECK(close(skew.cond_real(BinaryString(), 1, 128), "0.3550581540694593510093637374165631439887", 55));
}

TEST_CASE("zero target reproduces the base measure") {
    for (auto method : {SynthesisMethod::KL, SynthesisMethod::Hellinger}) {
        const DyadicMeasure mu = synthesize(bernoulli(make_rational(1, 3)), PredictableSpec::zero(), method);
        bool same = true;
        for_each_string(5, [&](const BinaryString& s) {
            same = same && close(mu.cond_real(s, 1, 128), "0.3333333333333333333333333333333333333333", 50);
        });
        CHECK(same);
    }
}

TEST_CASE("Hellinger synthesis") {
    const DyadicMeasure mu =
        measure_from_predictable_hellinger(uniform(), root_only(make_rational(1, 5)), fine());
    const Real x = max(mu.cond_real(BinaryString(), 0, 128), mu.cond_real(BinaryString(), 1, 128));
    CHECK(close(x, kHellX, 50));
    CHECK(close(hellinger_step(uniform(), mu, BinaryString()).h_squared, "0.2", 40));
    CHECK_THROWS_AS(measure_from_predictable_hellinger(uniform(), root_only(make_rational(3, 5))), ValidationError);
    CHECK(below_hellinger_bound(make_rational(58, 100)));
    CHECK_FALSE(below_hellinger_bound(make_rational(586, 1000)));
    CHECK(below_hellinger_bound(make_rational(5857, 10000)));
}

TEST_CASE("random round trips") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 3; ++i) {
        const DyadicMeasure nu = testsupport::random_measure(rng);
        const PredictableSpec kl_target = testsupport::random_predictable(rng, 5, 40, 40);
        const PredictableSpec hl_target = testsupport::random_predictable(rng, 5, 58, 100);
        const DyadicMeasure kl_mu = synthesize(nu, kl_target, SynthesisMethod::KL);
        const DyadicMeasure hl_mu = synthesize(nu, hl_target, SynthesisMethod::Hellinger);
        bool ok = true;
        for_each_string(4, [&](const BinaryString& s) {
            ok = ok && close(kl_step(nu, kl_mu, s), Real(kl_target.increment(s), 128), 30);
            ok = ok && close(hellinger_step(nu, hl_mu, s).h_squared, Real(hl_target.increment(s), 128), 30);
        });
        CHECK(ok);
    }
}

TEST_CASE("synthesized measures serialize") {
    register_synthesized_kind();
    const DyadicMeasure mu = synthesize(uniform(), PredictableSpec::leading_zeros(), SynthesisMethod::KL);
    const DyadicMeasure back = parse_measure_spec(measure_document(mu).dump());
    CHECK_FALSE(back.exact());
    CHECK(close(back.cond_real(BinaryString::parse("00"), 1, 128), mu.cond_real(BinaryString::parse("00"), 1, 128), 120));
    CHECK(parse_synthesis_method("hellinger") == SynthesisMethod::Hellinger);
    CHECK_THROWS_AS(parse_synthesis_method("tv"), ValidationError);
}

}
