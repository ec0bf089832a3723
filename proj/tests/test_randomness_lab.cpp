#include "doctest.h"

#include <filesystem>

#include "merging/errors.hpp"
#include "merging/randomness_lab.hpp"
#include "merging/report_io.hpp"
#include "support.hpp"

using namespace merging;
using testsupport::close;

namespace {

const char* kKl = "0.1438410362258904637196095029969137157518";

DyadicMeasure b14() { return bernoulli(make_rational(1, 4)); }
DyadicMeasure half_mixture() { return mixture({make_rational(1, 2), make_rational(1, 2)}, {uniform(), bernoulli(make_rational(3, 4))}); }

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("merging_lab_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("randomness-lab") {

TEST_CASE("mildness profile") {
    const MildnessProfile u = mildness_profile(uniform(), BinaryString::parse("0110"));
    CHECK(u.inf == make_rational(1, 2));
    const MildnessProfile h = mildness_profile(harmonic_product(), BinaryString::ones(50));
    CHECK(h.conditionals[0] == make_rational(1, 2));
    CHECK(h.inf == make_rational(1, 51));
    CHECK(h.running_inf.back() == make_rational(1, 51));
    const MildnessProfile b = mildness_profile(b14(), BinaryString::parse("010101"));
    CHECK(b.inf == make_rational(1, 4));
    CHECK(b.conditionals[1] == make_rational(1, 4));
    CHECK(b.conditionals[0] == make_rational(3, 4));
}

TEST_CASE("likelihood ratio steps") {
    for (const auto& s : likelihood_ratio_steps(b14(), b14(), BinaryString::parse("0110"))) {
        CHECK(s.gap == 0);
        CHECK(s.ratio == 1);
    }
    for (const auto& s : likelihood_ratio_steps(b14(), uniform(), BinaryString::parse("11"))) {
        CHECK(s.gap == make_rational(1, 4));
        CHECK(s.ratio == make_rational(1, 2));
    }
    const BinaryString long_path = sample_path(uniform(), 1000, 4);
    CHECK(likelihood_ratio_steps(half_mixture(), uniform(), long_path).size() == 1000);
}

TEST_CASE("kl estimate") {
    const AbconEstimate same = kl_abcon_estimate(b14(), b14(), 6);
    CHECK(same.running_sup.is_zero());
    const AbconEstimate lin = kl_abcon_estimate(uniform(), b14(), 5);
    const Real step = Real::parse(kKl, 160);
    for (std::size_t n = 0; n <= 5; ++n) CHECK(close(lin.values[n], step * Real(static_cast<long>(n), 160), 110));
    CHECK(close(lin.max_identity_gap, "0", 100));
    const AbconEstimate mix = kl_abcon_estimate(uniform(), half_mixture(), 12);
    CHECK(!(mix.running_sup > log(Rational(2), 128)));
    CHECK(close(mix.max_identity_gap, "0", 30));
    CHECK(mix.note.find("evidence at depth 12") != std::string::npos);
    CHECK_THROWS_AS(kl_abcon_estimate(uniform(), b14(), 21), ValidationError);
}

TEST_CASE("bd estimate") {
    const AbconEstimate same = bd_abcon_estimate(b14(), b14(), 6);
    for (const auto& v : same.exact_values) CHECK(v == 1);
    const AbconEstimate mix = bd_abcon_estimate(uniform(), half_mixture(), 10);
    for (const auto& v : mix.exact_values) CHECK(v <= 2);
    CHECK(mix.chain_holds);
}

TEST_CASE("bounded tests") {
    BoundedTestSpec zeros;
    for (std::size_t n = 0; n <= 12; ++n) zeros.levels.push_back({BinaryString::zeros(n)});
    zeros.rho = [](const BinaryString& s) { return Rational(s.all_zeros() ? 1 : 0); };
    zeros.rho_description = "point_mass(zeros)";
    // the point mass vanishes on [1] while V_0 = [∅] does not
    const BoundedTestVerdict pm = bounded_test_check(zeros, uniform(), 12);
    CHECK_FALSE(pm.pass);
    CHECK(*pm.n == 0);
    CHECK(pm.sigma->str() == "1");
    CHECK(pm.lhs == make_rational(1, 2));
    CHECK(pm.rhs == 0);

    BoundedTestSpec whole;
    for (std::size_t n = 0; n <= 6; ++n) whole.levels.push_back({BinaryString()});
    whole.rho = [](const BinaryString& s) { return uniform().mass(s); };
    const BoundedTestVerdict v = bounded_test_check(whole, uniform(), 6);
    CHECK_FALSE(v.pass);
    REQUIRE(v.n);
    CHECK(*v.n == 1);
    CHECK(v.sigma->empty());

    const BoundedTestSpec parsed = BoundedTestSpec::from_json(
        nlohmann::json::parse(R"({"rho":{"kind":"point_mass","path":"zeros"},"levels":[[""],["0"],["00"]]})"));
    CHECK_FALSE(bounded_test_check(parsed, uniform(), 8).pass);
    const BoundedTestSpec empty = BoundedTestSpec::from_json(
        nlohmann::json::parse(R"({"rho":{"kind":"uniform"},"levels":[[],[]]})"));
    CHECK(bounded_test_check(empty, uniform(), 8).pass);
    CHECK_THROWS_AS(BoundedTestSpec::from_json(nlohmann::json::parse(R"({"rho":{"kind":"point_mass","path":"x"},"levels":[]})")),
                    ParseError);

    const BoundedTestSpec derived = bounded_test_from_predictable(PredictableSpec::leading_zeros(), uniform(), 10);
    CHECK_FALSE(derived.levels.empty());
    CHECK(bounded_test_check(derived, uniform(), 10).pass);
}

TEST_CASE("contrast paths") {
    CHECK(parse_contrast("zeros", 5).path.str() == "00000");
    CHECK(parse_contrast("ones", 3).path.str() == "111");
    CHECK(parse_contrast("periodic:1:01", 6).path.str() == "101010");
    CHECK_THROWS_AS(parse_contrast("random", 5), ValidationError);
}

TEST_CASE("experiment is deterministic and job independent") {
    ExperimentConfig c;
    c.nu = uniform();
    c.mu = half_mixture();
    c.paths = 6;
    c.length = 200;
    c.seed = 3;
    const ExperimentReport one = merging_experiment(c);
    c.jobs = 3;
    const ExperimentReport three = merging_experiment(c);
    CHECK(one.to_json().dump() == three.to_json().dump());
    REQUIRE(one.contrasts.size() == 2);
    CHECK(one.contrasts[1].series.final_cumulative() > one.contrasts[0].series.final_cumulative());

    const auto a = scratch("exp_a"), b = scratch("exp_b");
    write_experiment(one, a);
    write_experiment(three, b);
    for (const char* f : {"report.json", "path_0.csv", "path_5.csv", "contrast_zeros.csv", "contrast_ones.csv"}) {
        CHECK(read_file(a / f) == read_file(b / f));
    }
}

TEST_CASE("leading-zeros witness") {
    WitnessConfig c;
    c.samples = 2;
    c.sample_length = 300;
    const WitnessReport r = deficiency_witness(uniform(), PredictableSpec::leading_zeros(), c);
    for (std::size_t n = 0; n <= 50; ++n) CHECK(r.expectations[n] == 2 - 2 * pow2_neg(n));
    REQUIRE(r.supremum);
    CHECK(*r.supremum == 2);
    REQUIRE(r.contrasts.size() == 1);
    CHECK(close(r.contrasts[0].summary.series.final_cumulative(), "50", 30));
    CHECK(r.contrasts[0].a_final == 50);
    CHECK(close(r.max_node_residual, "0", 40));
    for (const auto& s : r.samples) CHECK(close(s.max_path_residual, "0", 30));

    const auto dir = scratch("witness");
    write_witness(r, uniform(), dir);
    for (const char* f : {"report.json", "measure.json", "predictable.json", "root_solve.json", "residuals.csv",
                          "contrast_zeros.csv", "sample_0.csv"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
}

TEST_CASE("witness from a test") {
    const TestSpec t = TestSpec::parse(R"({"levels":[{"q":"0","cylinders":[]},{"q":"3","cylinders":["0"]}]})");
    WitnessConfig c;
    c.depth = 20;
    const WitnessReport r = deficiency_witness(uniform(), test_to_predictable(t, 4, 20), c);
    CHECK(close(r.contrasts[0].summary.series.final_cumulative(), "3", 30));
    REQUIRE(r.supremum);
    CHECK(*r.supremum == make_rational(3, 2));

    const WitnessReport z = deficiency_witness(uniform(), PredictableSpec::zero(), c);
    CHECK(close(z.contrasts[0].summary.series.final_cumulative(), "0", 100));
}

}
