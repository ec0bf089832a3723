#include "doctest.h"

#include <random>
#include <sstream>

#include "merging/divergence.hpp"
#include "merging/errors.hpp"
#include "support.hpp"

using namespace merging;
using testsupport::close;

namespace {

const char* kKl = "0.1438410362258904637196095029969137157518";
const char* kAffinity = "0.9659258262890682867497431997288973676339";
const char* kH2 = "0.0681483474218634265005136005422052647322";

DyadicMeasure b14() { return bernoulli(make_rational(1, 4)); }
DyadicMeasure half_mixture() { return mixture({make_rational(1, 2), make_rational(1, 2)}, {uniform(), bernoulli(make_rational(3, 4))}); }

}  // namespace

TEST_SUITE("divergence") {

TEST_CASE("one-step KL") {
    CHECK(kl_step(uniform(), uniform(), BinaryString::parse("0101")).is_zero());
    CHECK(close(kl_step(uniform(), b14(), BinaryString::parse("0110")), kKl, 120));
    CHECK(close(kl_step(uniform(), half_mixture(), BinaryString()), "0.03226926056878558583646195784199646406446", 120));
    CHECK(close(kl_step(bernoulli(make_rational(1, 3)), uniform(), BinaryString()),
                "0.05663301226513249096680829884110190881167", 120));
}

TEST_CASE("KL over horizons") {
    const HorizonSpec weak = HorizonSpec::weak();
    bool same = true;
    std::mt19937_64 rng(5);
    const DyadicMeasure nu = testsupport::random_measure(rng);
    const DyadicMeasure mu = testsupport::random_measure(rng);
    for_each_string(10, [&](const BinaryString& s) {
        same = same && close(kl_step_horizon(nu, mu, s, weak), kl_step(nu, mu, s), 120);
    });
    CHECK(same);
    CHECK(close(kl_step_horizon(uniform(), b14(), BinaryString::parse("1"), HorizonSpec::fixed_step(2)),
                "0.2876820724517809274392190059938274315036", 118));
    CHECK_THROWS_AS(kl_step_horizon(uniform(), b14(), BinaryString(), HorizonSpec::fixed_step(25)), ValidationError);
}

TEST_CASE("Hellinger step") {
    const HellingerStep same = hellinger_step(uniform(), uniform(), BinaryString::parse("01"));
    CHECK(close(same.affinity, "1", 120));
    CHECK(close(same.h_squared, "0", 120));
    const HellingerStep h = hellinger_step(uniform(), b14(), BinaryString());
    CHECK(close(h.affinity, kAffinity, 120));
    CHECK(close(h.h_squared, kH2, 118));
}

TEST_CASE("total variation step") {
    CHECK(tv_step_exact(uniform(), uniform(), BinaryString(), 1) == 0);
    CHECK(tv_step_exact(uniform(), b14(), BinaryString::parse("10"), 0) == make_rational(1, 4));
    CHECK(tv_step_exact(uniform(), b14(), BinaryString::parse("10"), 1) == make_rational(1, 4));
    CHECK(close(tv_step(uniform(), b14(), BinaryString(), 1), "0.25", 120));
}

TEST_CASE("divergence kinds parse") {
    CHECK(parse_divergence_kind("kl") == DivergenceKind::KL);
    CHECK(parse_divergence_kind("hellinger2") == DivergenceKind::HellingerSquared);
    CHECK(parse_divergence_kind("tv") == DivergenceKind::TotalVariation);
    CHECK(to_string(DivergenceKind::HellingerAffinity) == "affinity");
    CHECK_THROWS_AS(parse_divergence_kind("js"), ValidationError);
}

TEST_CASE("series") {
    std::string alt;
    for (int i = 0; i < 50; ++i) alt += "01";
    const DivergenceSeries s =
        divergence_series(uniform(), b14(), BinaryString::parse(alt), HorizonSpec::weak(), DivergenceKind::KL, 1);
    REQUIRE(s.cumulative.size() == 100);
    CHECK(close(s.cumulative[99], Real::parse(kKl, 160) * Real(100, 160), 110));
    CHECK(close(s.tail_max, kKl, 118));

    const DivergenceSeries zero =
        divergence_series(b14(), b14(), BinaryString::parse(alt), HorizonSpec::weak(), DivergenceKind::HellingerSquared, 2);
    bool all_zero = true;
    for (const auto& c : zero.cumulative) all_zero = all_zero && close(c, "0", 100);
    CHECK(all_zero);

    const DivergenceSeries sq =
        divergence_series(uniform(), b14(), BinaryString::parse("0000"), HorizonSpec::weak(), DivergenceKind::TotalVariation, 2);
    CHECK(close(sq.cumulative[3], "0.25", 120));
    const DivergenceSeries raw =
        divergence_series(uniform(), b14(), BinaryString::parse("0000"), HorizonSpec::weak(), DivergenceKind::TotalVariation, 0);
    CHECK(close(raw.cumulative[3], "0.25", 120));

    const DivergenceSeries zeros = divergence_series(uniform(), half_mixture(), BinaryString::zeros(200),
                                                     HorizonSpec::weak(), DivergenceKind::KL, 1);
    const Real bound = log(Rational(2), 128) + pow2_neg(20, 128);
    bool bounded = true;
    for (const auto& c : zeros.cumulative) bounded = bounded && !(c > bound);
    CHECK(bounded);

    std::ostringstream out;
    write_series_csv(s, out);
    CHECK(out.str().rfind("n,sigma_prefix_len,step,cumulative,kind,horizon,p\n", 0) == 0);
}

TEST_CASE("inequalities at the uniform/bernoulli(1/4) node") {
    const StepDistances d = step_distances(make_rational(1, 2), make_rational(1, 4));
    CHECK(close(d.tv, "0.25", 120));
    CHECK(close(d.h_squared, kH2, 118));
    CHECK(close(d.kl, kKl, 118));
    CHECK(close(sqrt(d.h_squared), "0.2610523844401031830968124557909780203875", 110));
    CHECK(violated_inequalities(d, pow2_neg(40, 128)).empty());
    const StepDistances z = step_distances(make_rational(1, 3), make_rational(1, 3));
    CHECK(violated_inequalities(z, pow2_neg(40, 128)).empty());

    StepDistances broken = d;
    broken.kl = Real(0, 128);
    const auto v = violated_inequalities(broken, pow2_neg(40, 128));
    CHECK(std::find(v.begin(), v.end(), "H^2 <= D") != v.end());
    CHECK(std::find(v.begin(), v.end(), "T^2 <= D/2") != v.end());
}

TEST_CASE("inequality suite on random pairs") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 4; ++i) {
        const InequalityReport r =
            inequality_suite(testsupport::random_measure(rng), testsupport::random_measure(rng), 6, pow2_neg(40, 128));
        CHECK(r.pass);
        CHECK(r.nodes_checked == 63);
    }
}

}
