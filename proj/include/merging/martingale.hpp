#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "merging/binary_string.hpp"
#include "merging/delta.hpp"
#include "merging/measure.hpp"
#include "merging/rational.hpp"
#include "merging/real.hpp"

namespace merging {

// Values indexed by the strings of length <= depth, stored by tree_slot.
template <class T>
class DyadicTree {
public:
    DyadicTree() = default;
    DyadicTree(std::size_t depth, std::vector<T> values) : depth_(depth), values_(std::move(values)) {}

    std::size_t depth() const noexcept { return depth_; }
    const T& at(const BinaryString& s) const { return values_.at(tree_slot(s)); }
    const T& operator[](std::size_t slot) const { return values_[slot]; }
    T& operator[](std::size_t slot) { return values_[slot]; }
    const std::vector<T>& values() const noexcept { return values_; }

private:
    std::size_t depth_ = 0;
    std::vector<T> values_;
};

// A real-valued dyadic function. `eval` must be deterministic; `tabulate`,
// when present, fills a whole tree at once and must agree with `eval`.
class DyadicFunction {
public:
    using Eval = std::function<Real(const BinaryString&, unsigned precision)>;
    using Tabulate = std::function<std::vector<Real>(std::size_t depth, unsigned precision)>;

    DyadicFunction(std::string name, Eval eval, Tabulate tabulate = {});

    Real operator()(const BinaryString& s, unsigned precision = kDefaultPrecision) const { return eval_(s, precision); }
    // All values for |σ| <= depth in tree_slot order.
    std::vector<Real> tabulate(std::size_t depth, unsigned precision = kDefaultPrecision) const;
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
    Eval eval_;
    Tabulate tabulate_;
};

class ExactDyadicFunction {
public:
    using Eval = std::function<Rational(const BinaryString&)>;

    ExactDyadicFunction(std::string name, Eval eval);

    Rational operator()(const BinaryString& s) const { return eval_(s); }
    const std::string& name() const noexcept { return name_; }
    DyadicFunction to_real() const;

private:
    std::string name_;
    Eval eval_;
};

// M(σ) = μ(σ)/ν(σ). Exact measures only.
ExactDyadicFunction ratio_martingale(const DyadicMeasure& mu, const DyadicMeasure& nu);

// L(σ) = ln(ν(σ)/μ(σ)) = -ln M(σ), a ν-submartingale.
DyadicFunction log_submartingale(const DyadicMeasure& mu, const DyadicMeasure& nu);

// f = Σ_j q_j 1_{[τ_j]} with q_j >= 0.
struct CylinderTerm {
    Rational coefficient;
    BinaryString tau;
};
// M(σ) = E_ν[f | F_{|σ|}] evaluated on [σ]. Rejects negative coefficients.
ExactDyadicFunction cond_expectation_martingale(std::vector<CylinderTerm> f, const DyadicMeasure& nu);

enum class MartingaleMode { Martingale, Sub, Super };

// residual(σ) = F(σ0)ν(σ0|σ) + F(σ1)ν(σ1|σ) - F(σ). A martingale needs
// |residual| <= tol, a submartingale residual >= -tol, a supermartingale
// residual <= tol.
struct MartingaleVerdict {
    bool pass = true;
    std::optional<BinaryString> witness;  // first violation, breadth-first order
    Real witness_residual;
    Real max_abs_residual;
    std::size_t nodes_checked = 0;
};

// Exact check with zero tolerance. Checks every |σ| < depth.
MartingaleVerdict check_martingale(const ExactDyadicFunction& f, const DyadicMeasure& nu, std::size_t depth,
                                   MartingaleMode mode);
MartingaleVerdict check_martingale(const DyadicFunction& f, const DyadicMeasure& nu, std::size_t depth,
                                   const Real& tol, MartingaleMode mode, unsigned precision = kDefaultPrecision);
// Same check on an already tabulated function.
MartingaleVerdict check_martingale(const std::vector<Real>& values, const std::vector<std::array<Real, 2>>& conds,
                                   std::size_t depth, const Real& tol, MartingaleMode mode);

struct DoobOptions {
    unsigned precision = kDefaultPrecision;
    // Verify the submartingale condition before decomposing.
    bool check_submartingale = false;
    // Predictable increments below -tolerance are reported as errors.
    Real tolerance = pow2_neg(40, kDefaultPrecision);
};

// L = N + A with N a ν-martingale, N(∅) = L(∅), A(∅) = 0 and A predictable
// and increasing.
struct DoobDecomposition {
    std::string source;
    std::string base_measure;
    unsigned precision = kDefaultPrecision;
    DyadicTree<Real> L;
    DyadicTree<Real> N;
    DyadicTree<Real> A;
    // min over σ of A(σι) - A(σ)
    Real min_increment;

    std::size_t depth() const noexcept { return L.depth(); }
    Real increment(const BinaryString& s) const { return A.at(s.extended(0)) - A.at(s); }
};

// A by the increment recursion A(σι) = A(σ) + L(σ0)ν(σ0|σ) + L(σ1)ν(σ1|σ) - L(σ),
// then N = L - A.
DoobDecomposition doob_decompose(const DyadicFunction& L, const DyadicMeasure& nu, std::size_t depth,
                                 const DoobOptions& options = {});
// N(σι) = N(σ) + H(σι) with H(σι) = L(σι) - L(σ0)ν(σ0|σ) - L(σ1)ν(σ1|σ), then A = L - N.
DoobDecomposition doob_via_auxiliary(const DyadicFunction& L, const DyadicMeasure& nu, std::size_t depth,
                                     const DoobOptions& options = {});

// Decomposition over one ∼_g class δ_0 < δ_1 < ...: the values live on the
// strings of length δ_k only; A(σ) = 0 for |σ| = δ_0 and
// A(στ) - A(σ) = Σ_{|ρ| = δ_{k+1}-δ_k} L(σρ)ν(σρ|σ) - L(σ) for |σ| = δ_k, |τ| = δ_{k+1}-δ_k.
struct DaryDoobDecomposition {
    std::string source;
    unsigned precision = kDefaultPrecision;
    std::vector<std::size_t> lengths;
    // [k][index(σ)] for |σ| = lengths[k]
    std::vector<std::vector<Real>> L;
    std::vector<std::vector<Real>> N;
    std::vector<std::vector<Real>> A;
    Real min_increment;

    std::size_t level_of(std::size_t length) const;
    const Real& l(const BinaryString& s) const { return L[level_of(s.size())][s.index()]; }
    const Real& n(const BinaryString& s) const { return N[level_of(s.size())][s.index()]; }
    const Real& a(const BinaryString& s) const { return A[level_of(s.size())][s.index()]; }
};

// Uses the members of `delta_class` that are <= depth.
DaryDoobDecomposition dary_doob(const DyadicFunction& L, const DyadicMeasure& nu,
                                const std::vector<std::size_t>& delta_class, std::size_t depth,
                                const DoobOptions& options = {});

// CSV: sigma,L,N,A,precision_bits; one row per σ in breadth-first order.
void write_doob_csv(const DoobDecomposition& d, std::ostream& out);

}  // namespace merging
