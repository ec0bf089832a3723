#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "merging/binary_string.hpp"
#include "merging/delta.hpp"
#include "merging/measure.hpp"
#include "merging/real.hpp"

namespace merging {

// KL is asymmetric: ν, the measure the expectation is taken under, comes first.
enum class DivergenceKind { KL, HellingerSquared, HellingerAffinity, TotalVariation };
std::string to_string(DivergenceKind kind);
// "kl", "hellinger2", "affinity", "tv"
DivergenceKind parse_divergence_kind(std::string_view text);

// Largest g(n) - n accepted by horizon steps (2^20 extension terms).
inline constexpr std::size_t kHorizonCeiling = 20;

// Σ_ι ν(σι|σ) ln(ν(σι|σ)/μ(σι|σ)).
Real kl_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma,
             unsigned precision = kDefaultPrecision);
Real kl_step(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision = kDefaultPrecision);

// Σ_{|τ| = g(n)-n} ν(στ|σ) ln(ν(στ|σ)/μ(στ|σ)) with n = |σ|.
Real kl_step_horizon(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma,
                     const HorizonSpec& horizon, unsigned precision = kDefaultPrecision,
                     std::size_t ceiling = kHorizonCeiling);

struct HellingerStep {
    Real affinity;   // Σ_ι sqrt(ν(σι|σ) μ(σι|σ))
    Real h_squared;  // 2(1 - affinity)
};
HellingerStep hellinger_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma,
                             unsigned precision = kDefaultPrecision);
HellingerStep hellinger_step(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision = kDefaultPrecision);

// |μ(σι|σ) - ν(σι|σ)| for ι = observed.
Real tv_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma, Bit observed,
             unsigned precision = kDefaultPrecision);
Rational tv_step_exact(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma, Bit observed);

// Step of any kind at the cursors' common position over `steps` further
// bits. TV over more than one bit is ½ Σ_τ |ν(στ|σ) - μ(στ|σ)|; over one bit
// it is the observed-bit gap.
Real divergence_step(const MeasureCursor& nu, const MeasureCursor& mu, DivergenceKind kind, std::size_t steps,
                     Bit observed, unsigned precision = kDefaultPrecision, std::size_t ceiling = kHorizonCeiling);

struct SeriesOptions {
    unsigned precision = kDefaultPrecision;
    std::size_t ceiling = kHorizonCeiling;
};

// step[n] is the divergence at σ = prefix↾n for n < |prefix|. With p >= 1,
// cumulative[n] = Σ_{k<=n} step[k]^p; with p = 0 it repeats step[n].
struct DivergenceSeries {
    std::string horizon;
    DivergenceKind kind = DivergenceKind::KL;
    unsigned p = 1;
    BinaryString prefix;
    std::vector<Real> step;
    std::vector<Real> cumulative;
    // max of step over the last quarter of the series
    Real tail_max;

    Real final_cumulative() const { return cumulative.empty() ? Real() : cumulative.back(); }
};

DivergenceSeries divergence_series(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& prefix,
                                   const HorizonSpec& horizon, DivergenceKind kind, unsigned p,
                                   const SeriesOptions& options = {});

// Columns n,sigma_prefix_len,step,cumulative,kind,horizon,p.
void write_series_csv(const DivergenceSeries& series, std::ostream& out);

// One-step distances T, H² and D between ν(σ·|σ) and μ(σ·|σ).
struct StepDistances {
    Real tv;
    Real h_squared;
    Real kl;
};
StepDistances step_distances(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision = kDefaultPrecision);
// For the Bernoulli pair with P(1) = nu_one and P(1) = mu_one.
StepDistances step_distances(const Rational& nu_one, const Rational& mu_one, unsigned precision = kDefaultPrecision);

// Names of the violated relations among T <= H, H² <= 2T, H² <= D, T² <= D/2
// (each with slack tol).
std::vector<std::string> violated_inequalities(const StepDistances& d, const Real& tol);

struct InequalityFailure {
    std::string inequality;
    BinaryString sigma;
};
struct InequalityReport {
    bool pass = true;
    std::size_t nodes_checked = 0;
    std::vector<InequalityFailure> failures;  // first witness per inequality
};
// Checks all four relations at every |σ| < depth.
InequalityReport inequality_suite(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth, const Real& tol,
                                  unsigned precision = kDefaultPrecision);

}  // namespace merging
