#include "merging/martingale.hpp"

#include <algorithm>

#include "merging/errors.hpp"

namespace merging {

DyadicFunction::DyadicFunction(std::string name, Eval eval, Tabulate tabulate)
    : name_(std::move(name)), eval_(std::move(eval)), tabulate_(std::move(tabulate)) {}

std::vector<Real> DyadicFunction::tabulate(std::size_t depth, unsigned precision) const {
    if (tabulate_) return tabulate_(depth, precision);
    std::vector<Real> out;
    out.reserve(tree_size(depth));
    for_each_string(depth, [&](const BinaryString& s) { out.push_back(eval_(s, precision)); });
    return out;
}

ExactDyadicFunction::ExactDyadicFunction(std::string name, Eval eval) : name_(std::move(name)), eval_(std::move(eval)) {}

DyadicFunction ExactDyadicFunction::to_real() const {
    Eval e = eval_;
    return DyadicFunction(name_, [e](const BinaryString& s, unsigned p) { return Real(e(s), p); });
}

ExactDyadicFunction ratio_martingale(const DyadicMeasure& mu, const DyadicMeasure& nu) {
    if (!mu.exact() || !nu.exact()) throw ValidationError("martingale", "ratio_martingale needs exact measures");
    return ExactDyadicFunction("M = " + mu.describe() + " / " + nu.describe(), [mu, nu](const BinaryString& s) {
        MeasureCursor cm = mu.cursor();
        MeasureCursor cn = nu.cursor();
        Rational r = 1;
        for (std::size_t i = 0; i < s.size(); ++i) {
            r *= cm.cond(s[i]) / cn.cond(s[i]);
            cm.advance(s[i]);
            cn.advance(s[i]);
        }
        return r;
    });
}

namespace {

// ν(σ)/μ(σ) carried down the tree, exactly when both measures are exact.
struct RatioWalk {
    const DyadicMeasure& mu;
    const DyadicMeasure& nu;
    unsigned precision;
    std::size_t depth;
    std::vector<Real>& out;

    void exact(const MeasureCursor& cm, const MeasureCursor& cn, const Rational& ratio) {
        out[tree_slot(cn.position())] = log(ratio, precision);
        if (cn.position().size() == depth) return;
        for (Bit b : {Bit{0}, Bit{1}}) {
            Rational next = ratio * cn.cond(b) / cm.cond(b);
            MeasureCursor m = cm, n = cn;
            m.advance(b);
            n.advance(b);
            exact(m, n, next);
        }
    }

    void approx(const MeasureCursor& cm, const MeasureCursor& cn, const Real& ratio) {
        out[tree_slot(cn.position())] = log(ratio);
        if (cn.position().size() == depth) return;
        for (Bit b : {Bit{0}, Bit{1}}) {
            Real next = ratio * cn.cond_real(b, precision) / cm.cond_real(b, precision);
            MeasureCursor m = cm, n = cn;
            m.advance(b);
            n.advance(b);
            approx(m, n, next);
        }
    }
};

}  // namespace

DyadicFunction log_submartingale(const DyadicMeasure& mu, const DyadicMeasure& nu) {
    const bool exact = mu.exact() && nu.exact();
    auto eval = [mu, nu, exact](const BinaryString& s, unsigned precision) {
        MeasureCursor cm = mu.cursor();
        MeasureCursor cn = nu.cursor();
        if (exact) {
            Rational r = 1;
            for (std::size_t i = 0; i < s.size(); ++i) {
                r *= cn.cond(s[i]) / cm.cond(s[i]);
                cm.advance(s[i]);
                cn.advance(s[i]);
            }
            return log(r, precision);
        }
        Real r(1, precision);
        for (std::size_t i = 0; i < s.size(); ++i) {
            r = r * cn.cond_real(s[i], precision) / cm.cond_real(s[i], precision);
            cm.advance(s[i]);
            cn.advance(s[i]);
        }
        return log(r);
    };
    auto tab = [mu, nu, exact](std::size_t depth, unsigned precision) {
        std::vector<Real> out(tree_size(depth), Real(precision));
        RatioWalk w{mu, nu, precision, depth, out};
        if (exact) {
            w.exact(mu.cursor(), nu.cursor(), Rational(1));
        } else {
            w.approx(mu.cursor(), nu.cursor(), Real(1, precision));
        }
        return out;
    };
    return DyadicFunction("L = ln(" + nu.describe() + " / " + mu.describe() + ")", eval, tab);
}

ExactDyadicFunction cond_expectation_martingale(std::vector<CylinderTerm> f, const DyadicMeasure& nu) {
    if (!nu.exact()) throw ValidationError("martingale", "cond_expectation_martingale needs an exact measure");
    for (const auto& t : f) {
        if (t.coefficient < 0) {
            throw ValidationError("martingale", "negative coefficient " + to_string(t.coefficient) + " on [" +
                                                    t.tau.str() + "]");
        }
    }
    return ExactDyadicFunction("E[f | F_n]", [f = std::move(f), nu](const BinaryString& s) {
        Rational m = 0;
        Rational mass_s;
        bool have_mass = false;
        for (const auto& t : f) {
            if (t.tau.is_prefix_of(s)) {
                m += t.coefficient;
            } else if (s.is_prefix_of(t.tau)) {
                if (!have_mass) {
                    mass_s = nu.mass(s);
                    have_mass = true;
                }
                m += t.coefficient * nu.mass(t.tau) / mass_s;
            }
        }
        return m;
    });
}

namespace {

bool violates(const Real& residual, const Real& tol, MartingaleMode mode) {
    switch (mode) {
        case MartingaleMode::Martingale:
            return abs(residual) > tol;
        case MartingaleMode::Sub:
            return residual < -tol;
        case MartingaleMode::Super:
            return residual > tol;
    }
    return false;
}

}  // namespace

MartingaleVerdict check_martingale(const ExactDyadicFunction& f, const DyadicMeasure& nu, std::size_t depth,
                                   MartingaleMode mode) {
    const auto conds = conditional_table(nu, depth);
    std::vector<Rational> values;
    values.reserve(tree_size(depth));
    for_each_string(depth, [&](const BinaryString& s) { values.push_back(f(s)); });
    MartingaleVerdict v;
    Rational max_abs = 0;
    for_each_string(depth == 0 ? 0 : depth - 1, [&](const BinaryString& s) {
        if (depth == 0) return;
        const std::size_t slot = tree_slot(s);
        const auto& c = conds[slot];
        const Rational residual = values[2 * slot + 1] * c[0] + values[2 * slot + 2] * c[1] - values[slot];
        ++v.nodes_checked;
        max_abs = std::max(max_abs, abs(residual));
        const bool bad = mode == MartingaleMode::Martingale ? residual != 0
                         : mode == MartingaleMode::Sub      ? residual < 0
                                                            : residual > 0;
        if (bad && v.pass) {
            v.pass = false;
            v.witness = s;
            v.witness_residual = Real(residual, kDefaultPrecision);
        }
    });
    v.max_abs_residual = Real(max_abs, kDefaultPrecision);
    return v;
}

MartingaleVerdict check_martingale(const std::vector<Real>& values, const std::vector<std::array<Real, 2>>& conds,
                                   std::size_t depth, const Real& tol, MartingaleMode mode) {
    MartingaleVerdict v;
    v.max_abs_residual = Real(tol.precision());
    if (depth == 0) return v;
    for_each_string(depth - 1, [&](const BinaryString& s) {
        const std::size_t slot = tree_slot(s);
        const auto& c = conds[slot];
        const Real residual = values[2 * slot + 1] * c[0] + values[2 * slot + 2] * c[1] - values[slot];
        ++v.nodes_checked;
        v.max_abs_residual = max(v.max_abs_residual, abs(residual));
        if (v.pass && violates(residual, tol, mode)) {
            v.pass = false;
            v.witness = s;
            v.witness_residual = residual;
        }
    });
    return v;
}

MartingaleVerdict check_martingale(const DyadicFunction& f, const DyadicMeasure& nu, std::size_t depth,
                                   const Real& tol, MartingaleMode mode, unsigned precision) {
    return check_martingale(f.tabulate(depth, precision), conditional_table_real(nu, depth, precision), depth, tol,
                            mode);
}

namespace {

void require_submartingale(const std::vector<Real>& l, const std::vector<std::array<Real, 2>>& conds,
                           std::size_t depth, const DoobOptions& options) {
    if (!options.check_submartingale) return;
    auto v = check_martingale(l, conds, depth, options.tolerance, MartingaleMode::Sub);
    if (!v.pass) {
        throw ValidationError("martingale", "input is not a submartingale at \"" + v.witness->str() +
                                                "\" (residual " + v.witness_residual.to_string(10) + ")");
    }
}

void check_increment(const Real& inc, const BinaryString& s, const DoobOptions& options) {
    if (inc < -options.tolerance) {
        throw ComputationError("martingale", "negative predictable increment " + inc.to_string(10) + " at \"" +
                                                 s.str() + "\" (input is not a submartingale)");
    }
}

}  // namespace

DoobDecomposition doob_decompose(const DyadicFunction& L, const DyadicMeasure& nu, std::size_t depth,
                                 const DoobOptions& options) {
    const unsigned p = options.precision;
    std::vector<Real> l = L.tabulate(depth, p);
    const auto conds = conditional_table_real(nu, depth, p);
    require_submartingale(l, conds, depth, options);

    std::vector<Real> a(l.size(), Real(p));
    Real min_inc = Real::from_double(0, p);
    bool first = true;
    if (depth > 0) {
        for_each_string(depth - 1, [&](const BinaryString& s) {
            const std::size_t slot = tree_slot(s);
            Real inc = l[2 * slot + 1] * conds[slot][0] + l[2 * slot + 2] * conds[slot][1] - l[slot];
            check_increment(inc, s, options);
            if (first || inc < min_inc) min_inc = inc;
            first = false;
            a[2 * slot + 1] = a[slot] + inc;
            a[2 * slot + 2] = a[2 * slot + 1];
        });
    }
    std::vector<Real> n;
    n.reserve(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) n.push_back(l[i] - a[i]);

    DoobDecomposition d;
    d.source = L.name();
    d.base_measure = nu.describe();
    d.precision = p;
    d.L = DyadicTree<Real>(depth, std::move(l));
    d.N = DyadicTree<Real>(depth, std::move(n));
    d.A = DyadicTree<Real>(depth, std::move(a));
    d.min_increment = min_inc;
    return d;
}

DoobDecomposition doob_via_auxiliary(const DyadicFunction& L, const DyadicMeasure& nu, std::size_t depth,
                                     const DoobOptions& options) {
    const unsigned p = options.precision;
    std::vector<Real> l = L.tabulate(depth, p);
    const auto conds = conditional_table_real(nu, depth, p);
    require_submartingale(l, conds, depth, options);

    std::vector<Real> n(l.size(), Real(p));
    n[0] = l[0];
    if (depth > 0) {
        for_each_string(depth - 1, [&](const BinaryString& s) {
            const std::size_t slot = tree_slot(s);
            // The average does not depend on the next bit.
            const Real avg = l[2 * slot + 1] * conds[slot][0] + l[2 * slot + 2] * conds[slot][1];
            n[2 * slot + 1] = n[slot] + (l[2 * slot + 1] - avg);
            n[2 * slot + 2] = n[slot] + (l[2 * slot + 2] - avg);
        });
    }
    std::vector<Real> a;
    a.reserve(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) a.push_back(l[i] - n[i]);

    Real min_inc = Real::from_double(0, p);
    bool first = true;
    if (depth > 0) {
        for_each_string(depth - 1, [&](const BinaryString& s) {
            const std::size_t slot = tree_slot(s);
            Real inc = a[2 * slot + 1] - a[slot];
            check_increment(inc, s, options);
            if (first || inc < min_inc) min_inc = inc;
            first = false;
        });
    }

    DoobDecomposition d;
    d.source = L.name();
    d.base_measure = nu.describe();
    d.precision = p;
    d.L = DyadicTree<Real>(depth, std::move(l));
    d.N = DyadicTree<Real>(depth, std::move(n));
    d.A = DyadicTree<Real>(depth, std::move(a));
    d.min_increment = min_inc;
    return d;
}

std::size_t DaryDoobDecomposition::level_of(std::size_t length) const {
    auto it = std::find(lengths.begin(), lengths.end(), length);
    if (it == lengths.end()) {
        throw ValidationError("martingale", "length " + std::to_string(length) + " is not in the class");
    }
    return static_cast<std::size_t>(it - lengths.begin());
}

namespace {

// Σ_{|ρ| = steps} L(σρ) ν(σρ|σ), walking ν's conditionals from σ.
Real block_average(const MeasureCursor& c, std::size_t steps, const Real& weight, const std::vector<Real>& l,
                   unsigned precision) {
    if (steps == 0) return l[tree_slot(c.position())] * weight;
    Real total(precision);
    for (Bit b : {Bit{0}, Bit{1}}) {
        MeasureCursor child = c;
        Real w = weight * c.cond_real(b, precision);
        child.advance(b);
        total += block_average(child, steps - 1, w, l, precision);
    }
    return total;
}

}  // namespace

DaryDoobDecomposition dary_doob(const DyadicFunction& L, const DyadicMeasure& nu,
                                const std::vector<std::size_t>& delta_class, std::size_t depth,
                                const DoobOptions& options) {
    const unsigned p = options.precision;
    DaryDoobDecomposition d;
    d.source = L.name();
    d.precision = p;
    for (auto len : delta_class) {
        if (len > depth) break;
        if (!d.lengths.empty() && len <= d.lengths.back()) {
            throw ValidationError("martingale", "class lengths must be strictly increasing");
        }
        d.lengths.push_back(len);
    }
    if (d.lengths.empty()) throw ValidationError("martingale", "no class member within depth " + std::to_string(depth));
    if (d.lengths.back() > 24) throw ValidationError("martingale", "Δ-ary decomposition limited to depth 24");

    const std::vector<Real> l = L.tabulate(d.lengths.back(), p);
    d.min_increment = Real::from_double(0, p);
    bool first = true;
    for (std::size_t k = 0; k < d.lengths.size(); ++k) {
        const std::size_t len = d.lengths[k];
        const std::size_t count = std::size_t{1} << len;
        std::vector<Real> lk, ak(count, Real(p));
        lk.reserve(count);
        for (std::size_t i = 0; i < count; ++i) lk.push_back(l[count - 1 + i]);
        if (k > 0) {
            const std::size_t prev = d.lengths[k - 1];
            const std::size_t steps = len - prev;
            for (std::size_t i = 0; i < (std::size_t{1} << prev); ++i) {
                const BinaryString s = BinaryString::from_index(i, prev);
                Real inc = block_average(nu.cursor_at(s), steps, Real(1, p), l, p) - d.L[k - 1][i];
                check_increment(inc, s, options);
                if (first || inc < d.min_increment) d.min_increment = inc;
                first = false;
                const Real next = d.A[k - 1][i] + inc;
                for (std::size_t j = 0; j < (std::size_t{1} << steps); ++j) ak[(i << steps) | j] = next;
            }
        }
        std::vector<Real> nk;
        nk.reserve(count);
        for (std::size_t i = 0; i < count; ++i) nk.push_back(lk[i] - ak[i]);
        d.L.push_back(std::move(lk));
        d.A.push_back(std::move(ak));
        d.N.push_back(std::move(nk));
    }
    return d;
}

void write_doob_csv(const DoobDecomposition& d, std::ostream& out) {
    out << "sigma,L,N,A,precision_bits\n";
    for_each_string(d.depth(), [&](const BinaryString& s) {
        const std::size_t slot = tree_slot(s);
        out << s.str() << ',' << render(d.L[slot]) << ',' << render(d.N[slot]) << ',' << render(d.A[slot]) << ','
            << d.precision << '\n';
    });
}

}  // namespace merging
