#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "merging/binary_string.hpp"
#include "merging/delta.hpp"
#include "merging/divergence.hpp"
#include "merging/measure.hpp"
#include "merging/synthesis.hpp"

namespace merging {

// ν's one-step conditionals along a path and their running infimum.
struct MildnessProfile {
    std::vector<Rational> conditionals;  // ν(ω↾(n+1) | ω↾n)
    std::vector<Rational> running_inf;
    Rational inf;
};
MildnessProfile mildness_profile(const DyadicMeasure& nu, const BinaryString& prefix);

struct LikelihoodStep {
    Rational gap;      // |μ(ω↾(n+1)|ω↾n) - ν(ω↾(n+1)|ω↾n)|
    Rational ratio;    // M(ω↾(n+1)) / M(ω↾n) with M = μ/ν
    Rational mu_cond;  // μ(ω↾(n+1) | ω↾n)
    Rational nu_cond;  // ν(ω↾(n+1) | ω↾n)
};
// Asserts M(ω↾n)/M(ω↾(n+1)) = ν(..|..)/μ(..|..) exactly at every step, with M
// computed from the masses; a mismatch raises ComputationError.
std::vector<LikelihoodStep> likelihood_ratio_steps(const DyadicMeasure& mu, const DyadicMeasure& nu,
                                                   const BinaryString& prefix);

inline constexpr std::size_t kAbconDepthCeiling = 20;

// Depth-bounded evidence for a merging relation; never a membership claim.
struct AbconEstimate {
    std::string relation;  // "kl" or "bd"
    std::size_t depth = 0;
    // kl: E_ν L_n; bd: E_ν max_{k<=n} ν(·↾k)/μ(·↾k), for n = 0..depth
    std::vector<Real> values;
    Real running_sup;
    // kl: E_ν A_n from the one-step KL increments, and max |E L_n - E A_n|
    std::vector<Real> predictable_values;
    Real max_identity_gap;
    // bd: the exact expectations, and E_ν L_depth <= E_ν max - 1 (+ tol)
    std::vector<Rational> exact_values;
    Real expected_log;
    bool chain_holds = true;
    std::string note;
};
AbconEstimate kl_abcon_estimate(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth,
                                unsigned precision = kDefaultPrecision);
AbconEstimate bd_abcon_estimate(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth,
                                const Real& tol = pow2_neg(40, kDefaultPrecision),
                                unsigned precision = kDefaultPrecision);

// V_n as finite cylinder families (levels[n], n = 0, 1, ...; missing levels
// are empty) and the auxiliary mass assignment ρ, which may lack full support.
struct BoundedTestSpec {
    std::vector<std::vector<BinaryString>> levels;
    std::function<Rational(const BinaryString&)> rho;
    std::string rho_description;

    // {"rho": <measure spec> | {"kind": "point_mass", "path": "zeros"|"ones"},
    //  "levels": [["0"], ["00"], ...]}
    static BoundedTestSpec from_json(const nlohmann::json& node, const std::string& location = "");
    Json to_json() const;
};

struct BoundedTestVerdict {
    bool pass = true;
    std::optional<std::size_t> n;
    std::optional<BinaryString> sigma;
    Rational lhs;  // ν(V_n ∩ [σ])
    Rational rhs;  // 2^{-n} ρ(σ)
    std::size_t checks = 0;
};
// Exhaustive check of ν(V_n ∩ [σ]) <= 2^{-n} ρ(σ) for n <= depth, |σ| <= depth.
BoundedTestVerdict bounded_test_check(const BoundedTestSpec& test, const DyadicMeasure& nu, std::size_t depth);

// With f = A(ω↾depth), E = E_ν f and 2^s the least power of two >= E:
// ρ(σ) = E_ν[f; [σ]] / E and V_n = {f > 2^{n+s}} as minimal cylinders.
BoundedTestSpec bounded_test_from_predictable(const PredictableSpec& target, const DyadicMeasure& nu,
                                              std::size_t depth);

// --- Experiments -----------------------------------------------------------

struct ContrastPath {
    std::string name;
    BinaryString path;
};
// "zeros", "ones", or "periodic:<head>:<cycle>" expanded to `length` bits.
ContrastPath parse_contrast(const std::string& descriptor, std::size_t length);

struct ExperimentConfig {
    DyadicMeasure nu = uniform();
    DyadicMeasure mu = uniform();
    HorizonSpec horizon = HorizonSpec::weak();
    DivergenceKind kind = DivergenceKind::KL;
    unsigned p = 1;
    std::size_t paths = 100;
    std::size_t length = 2000;
    std::uint64_t seed = 1;
    unsigned precision = kDefaultPrecision;
    unsigned jobs = 1;
    std::vector<std::string> contrasts{"zeros", "ones"};
};

struct PathSummary {
    std::string name;  // "path_<i>" or "contrast_<name>"
    std::uint64_t seed = 0;
    BinaryString path;
    DivergenceSeries series;
    Real max_cumulative;
};

struct ExperimentReport {
    Json config;
    std::vector<PathSummary> paths;
    std::vector<PathSummary> contrasts;
    Real mean_final;
    Real min_final;
    Real max_final;

    Json to_json() const;
};

// Paths are sampled from ν with seeds derive_seed(seed, i); the output does
// not depend on `jobs`.
ExperimentReport merging_experiment(const ExperimentConfig& config);
// report.json, path_<i>.csv, contrast_<name>.csv.
void write_experiment(const ExperimentReport& report, const std::filesystem::path& dir);

// --- Deficiency witness ----------------------------------------------------

struct WitnessConfig {
    std::size_t depth = 50;
    RootSolveConfig root_solve;
    unsigned precision = kDefaultPrecision;
    std::vector<std::string> contrasts{"zeros"};
    std::size_t samples = 0;
    std::size_t sample_length = 2000;
    std::uint64_t seed = 1;
    // Per-node residuals are tabulated on the full tree up to this depth.
    std::size_t residual_depth = 8;
    unsigned jobs = 1;
};

struct NodeResidual {
    BinaryString sigma;
    Rational increment;
    Real kl;
    Real residual;  // kl_step - increment
};

struct WitnessPath {
    PathSummary summary;
    Rational a_final;         // A(path)
    Real max_path_residual;   // max_n |cumulative(n) - A(path↾(n+1))|
};

struct WitnessReport {
    DyadicMeasure mu = uniform();
    PredictableSpec target = PredictableSpec::zero();
    WitnessConfig config;
    std::vector<Rational> expectations;  // E_ν A_n, n = 0..depth
    std::string supremum_flag;           // "closed-form: ..." or "unknown"
    std::optional<Rational> supremum;
    std::vector<WitnessPath> contrasts;
    std::vector<WitnessPath> samples;
    std::vector<NodeResidual> residuals;
    Real max_node_residual;

    Json to_json() const;
};

WitnessReport deficiency_witness(const DyadicMeasure& nu, const PredictableSpec& target, const WitnessConfig& config);
// report.json, measure.json, predictable.json, root_solve.json,
// residuals.csv, contrast_<name>.csv, sample_<i>.csv.
void write_witness(const WitnessReport& report, const DyadicMeasure& nu, const std::filesystem::path& dir);

}  // namespace merging
