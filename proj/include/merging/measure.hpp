#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "merging/binary_string.hpp"
#include "merging/rational.hpp"
#include "merging/real.hpp"

namespace merging {

using Json = nlohmann::ordered_json;

namespace detail {

// Per-node evaluation state of a measure while walking down the tree. The
// position is tracked by MeasureCursor and passed in.
class CursorState {
public:
    virtual ~CursorState() = default;
    virtual std::unique_ptr<CursorState> clone() const = 0;
    // Exact conditional ν(σb | σ). Inexact measures throw.
    virtual Rational cond(const BinaryString& at, Bit b) const;
    virtual Real cond_real(const BinaryString& at, Bit b, unsigned precision) const;
    virtual void advance(const BinaryString& at, Bit b) = 0;
};

class MeasureImpl {
public:
    virtual ~MeasureImpl() = default;
    // Exact measures have rational conditionals everywhere.
    virtual bool exact() const = 0;
    virtual std::unique_ptr<CursorState> root() const = 0;
    virtual Json to_json() const = 0;
    virtual std::string describe() const = 0;
};

}  // namespace detail

// Walks a measure down one branch of the binary tree, keeping whatever state
// the family needs (posterior weights for mixtures, the previous bit for
// Markov chains) so that each step costs O(1) conditional evaluations.
class MeasureCursor {
public:
    MeasureCursor(std::unique_ptr<detail::CursorState> state, bool exact);
    MeasureCursor(const MeasureCursor& other);
    MeasureCursor(MeasureCursor&&) noexcept = default;
    MeasureCursor& operator=(const MeasureCursor& other);
    MeasureCursor& operator=(MeasureCursor&&) noexcept = default;

    const BinaryString& position() const noexcept { return position_; }
    bool exact() const noexcept { return exact_; }

    Rational cond(Bit b) const { return state_->cond(position_, b); }
    Real cond_real(Bit b, unsigned precision) const { return state_->cond_real(position_, b, precision); }
    void advance(Bit b);

private:
    std::unique_ptr<detail::CursorState> state_;
    BinaryString position_;
    bool exact_;
};

// A full-support probability measure on Cantor space given by its one-step
// conditional probabilities. Immutable and cheap to copy; safe to share
// across threads.
class DyadicMeasure {
public:
    explicit DyadicMeasure(std::shared_ptr<const detail::MeasureImpl> impl);

    bool exact() const { return impl_->exact(); }
    MeasureCursor cursor() const;
    MeasureCursor cursor_at(const BinaryString& sigma) const;

    // ν([σ]) = ∏_{i<|σ|} ν(σ↾(i+1) | σ↾i). Exact measures only.
    Rational mass(const BinaryString& sigma) const;
    // ν(σb | σ). Exact measures only.
    Rational cond(const BinaryString& sigma, Bit b) const;
    Real mass_real(const BinaryString& sigma, unsigned precision = kDefaultPrecision) const;
    Real cond_real(const BinaryString& sigma, Bit b, unsigned precision = kDefaultPrecision) const;

    // Measure spec document (without the top-level spec_version field).
    Json to_json() const { return impl_->to_json(); }
    std::string describe() const { return impl_->describe(); }

    const detail::MeasureImpl& impl() const { return *impl_; }

private:
    std::shared_ptr<const detail::MeasureImpl> impl_;
};

// Built-in families. All parameters are probabilities of the bit 1.
DyadicMeasure uniform();
DyadicMeasure bernoulli(const Rational& p);
// First bit is 1 with probability `initial`; afterwards P(1 | previous bit b) = after[b].
DyadicMeasure markov(const Rational& initial, const Rational& after_zero, const Rational& after_one);

// Coordinate rule for independent products. Coordinates are numbered from 1:
// coordinate n governs the bit at index n-1.
struct ProductRule {
    enum class Form { Constant, InverseShift, RatioShift, Table };
    Form form = Form::Constant;
    Rational c;                   // Constant: p(n)=c; InverseShift: 1/(n+c); RatioShift: c/(n+c)
    std::vector<Rational> table;  // Table: p(1), p(2), ...
    Rational tail;                // Table: p(n) for n beyond the table

    Rational at(std::size_t coordinate) const;
};
DyadicMeasure product(ProductRule rule);
// The harmonic product p(n) = 1/(n+1).
DyadicMeasure harmonic_product();

struct TableEntry {
    BinaryString sigma;
    Rational p0;  // ν(σ0 | σ)
    Rational p1;  // ν(σ1 | σ)
};
enum class Validation { Checked, Unchecked };
// Conditionals for every σ with |σ| < depth; `tail` supplies ν(σb|σ) for
// |σ| >= depth (evaluated at the full σ).
DyadicMeasure table(std::size_t depth, std::vector<TableEntry> entries, DyadicMeasure tail,
                    Validation validation = Validation::Checked);
DyadicMeasure mixture(std::vector<Rational> weights, std::vector<DyadicMeasure> components);

// Conditionals ν(σ0|σ), ν(σ1|σ) for every |σ| < depth, in tree_slot order.
std::vector<std::array<Rational, 2>> conditional_table(const DyadicMeasure& measure, std::size_t depth);
std::vector<std::array<Real, 2>> conditional_table_real(const DyadicMeasure& measure, std::size_t depth,
                                                        unsigned precision = kDefaultPrecision);

struct SupportReport {
    bool pass = true;
    std::optional<BinaryString> witness;  // first violating σ in shortlex order
    std::string violation;
    std::size_t strings_checked = 0;
};

// Exhaustively checks 0 < ν(σb|σ) < 1, ν(σ0|σ)+ν(σ1|σ) = 1 and
// ν(σ0)+ν(σ1) = ν(σ) for every |σ| <= depth. Exact measures are checked with
// zero tolerance; approximate ones to 2^{-(P-4)} at their working precision.
SupportReport verify_full_support(const DyadicMeasure& measure, std::size_t depth,
                                  unsigned precision = kDefaultPrecision);

// Deterministic pseudo-random source: std::mt19937_64 seeded with `seed`;
// each draw k is read as the dyadic rational k/2^64 and the next bit is 0
// iff k/2^64 < ν(σ0|σ) (exact inverse-CDF comparison).
inline constexpr std::string_view kSamplerId = "mt19937_64/inverse-cdf-2^64/v1";
BinaryString sample_path(const DyadicMeasure& measure, std::size_t length, std::uint64_t seed);

// Seed splitting rule for path i: splitmix64(seed + (i+1) * 0x9E3779B97F4A7C15).
inline constexpr std::string_view kSeedSplitId = "splitmix64(seed+(i+1)*golden)/v1";
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Measure spec documents (JSON, rationals as "num/den" strings).
inline constexpr int kSpecVersion = 1;
struct ParseOptions {
    Validation validation = Validation::Checked;
    bool require_version = true;
};
DyadicMeasure parse_measure_spec(std::string_view document, ParseOptions options = {});
DyadicMeasure measure_from_json(const nlohmann::json& node, const std::string& location, Validation validation);
// Full document for a measure, including spec_version.
Json measure_document(const DyadicMeasure& measure);

// Hook for measure kinds defined outside measure-core (e.g. synthesized
// measures); consulted by measure_from_json for unknown kinds.
using MeasureKindParser = DyadicMeasure (*)(const nlohmann::json& node, const std::string& location);
void register_measure_kind(const std::string& kind, MeasureKindParser parser);

}  // namespace merging
