#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "merging/binary_string.hpp"
#include "merging/measure.hpp"
#include "merging/rational.hpp"
#include "merging/real.hpp"

namespace merging {

// Increments of an increasing predictable process: A(∅) = 0 and
// A(σι) = A(σ) + increment(σ) for both ι.
class PredictableSpec {
public:
    enum class Kind { Table, LeadingZeros, Function };
    using IncrementFn = std::function<Rational(const BinaryString&)>;

    // Listed increments; every other σ gets `default_value`.
    static PredictableSpec table(std::vector<std::pair<BinaryString, Rational>> increments, Rational default_value);
    static PredictableSpec zero();
    // increment(σ) = 1 iff σ = 0^{|σ|}.
    static PredictableSpec leading_zeros();
    // Evaluated lazily; negative values raise ValidationError when met.
    static PredictableSpec function(std::string name, IncrementFn fn);

    // {"increments": [{"sigma": "00", "value": "1/2"}, ...], "default": "0"}
    // or {"kind": "leading_zeros"} / {"kind": "zero"}.
    static PredictableSpec from_json(const nlohmann::json& node, const std::string& location = "");
    static PredictableSpec parse(std::string_view document);
    Json to_json() const;

    Kind kind() const noexcept { return kind_; }
    std::string describe() const;
    Rational increment(const BinaryString& sigma) const;
    // A(σ): sum of the increments along the proper prefixes of σ.
    Rational value(const BinaryString& sigma) const;
    // E_ν A_n, exact. Function specs are summed exhaustively (n <= 20).
    Rational expectation(const DyadicMeasure& nu, std::size_t n) const;

    const std::vector<std::pair<BinaryString, Rational>>& entries() const noexcept { return entries_; }
    const Rational& default_value() const noexcept { return default_; }

    // Free-form provenance echoed into JSON (e.g. the test enumeration order).
    void set_note(std::string note) { note_ = std::move(note); }
    const std::string& note() const noexcept { return note_; }

private:
    Kind kind_ = Kind::Table;
    std::vector<std::pair<BinaryString, Rational>> entries_;
    std::shared_ptr<const std::unordered_map<BinaryString, Rational>> index_;
    Rational default_ = 0;
    std::string name_;
    IncrementFn fn_;
    std::string note_;
};

// Levels (q_m, τ_{m,0}, τ_{m,1}, ...) of a lower semicomputable test
// f(ω) = sup{q_m : ω ∈ ∪_i [τ_{m,i}]}, in the order they are enumerated.
struct TestLevel {
    Rational q;
    std::vector<BinaryString> cylinders;
};
struct TestSpec {
    std::vector<TestLevel> levels;

    // {"levels": [{"q": "0", "cylinders": []}, {"q": "3", "cylinders": ["0"]}]}
    static TestSpec from_json(const nlohmann::json& node, const std::string& location = "");
    static TestSpec parse(std::string_view document);
    Json to_json() const;
    // q_0 = 0 and every q_m >= 0.
    void validate() const;
};

// A(∅) = 0 and A(σι) = max(A(σ), max{q_m : q_m < A(σ) + ε, m <= |σ|,
// τ_{m,i} ⪯ σ for some i <= |σ|}) for |σ| < depth; increments beyond depth are 0.
PredictableSpec test_to_predictable(const TestSpec& test, const Rational& epsilon, std::size_t depth);

struct RootSolveConfig {
    // Bisection stops once the bracket is narrower than 2^{-precision_bits}.
    unsigned precision_bits = 60;
    unsigned max_iterations = 256;
    // MPFR precision used while solving and for the stored conditionals.
    unsigned working_precision = kDefaultPrecision;

    void validate() const;
    Json to_json() const;
    static RootSolveConfig from_json(const nlohmann::json& node, const std::string& location = "");
};

struct RootSolveResult {
    Real root;
    unsigned iterations = 0;
};

// Bisection for a strictly decreasing f with f(lo) > 0 >= f(hi): the midpoint
// goes to `lo` when f(mid) > 0 and to `hi` otherwise. Returns the midpoint
// of the final bracket. Throws ComputationError if the bracket is not
// certified or the iteration budget runs out.
RootSolveResult solve_bracketed_decreasing(const std::function<Real(const Real&)>& f, const Real& lo, const Real& hi,
                                           const RootSolveConfig& cfg);

// Root v in (0, d) of f(v) = (1-p) v^{1/p} - d v^{1/p-1} + p e^{-c/p}.
RootSolveResult kl_node_root(const Real& p, const Real& c, const Real& d, const RootSolveConfig& cfg);
// Root x in (p, 1) of sqrt(xp) + sqrt((1-x)(1-p)) = c, for sqrt(p) < c < 1.
RootSolveResult hellinger_node_root(const Real& p, const Real& c, const RootSolveConfig& cfg);

// Hellinger increments must stay below 2(1 - sqrt(1/2)); exact test.
bool below_hellinger_bound(const Rational& increment);

enum class SynthesisMethod { KL, Hellinger };
std::string to_string(SynthesisMethod method);
SynthesisMethod parse_synthesis_method(std::string_view text);

// μ whose log-likelihood submartingale ln(ν/μ) has Doob predictable part A
// under ν: at each σ the one-step KL of ν against μ equals increment(σ).
DyadicMeasure measure_from_predictable_kl(const DyadicMeasure& nu, const PredictableSpec& target,
                                          const RootSolveConfig& cfg = {});
// μ whose one-step squared Hellinger distance to ν equals increment(σ).
DyadicMeasure measure_from_predictable_hellinger(const DyadicMeasure& nu, const PredictableSpec& target,
                                                 const RootSolveConfig& cfg = {});
DyadicMeasure synthesize(const DyadicMeasure& nu, const PredictableSpec& target, SynthesisMethod method,
                         const RootSolveConfig& cfg = {});

// Makes {"kind": "synthesized", ...} documents parseable by measure_from_json.
void register_synthesized_kind();

}  // namespace merging
