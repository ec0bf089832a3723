#include "merging/divergence.hpp"

#include "merging/errors.hpp"

namespace merging {

std::string to_string(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::KL:
            return "kl";
        case DivergenceKind::HellingerSquared:
            return "hellinger2";
        case DivergenceKind::HellingerAffinity:
            return "affinity";
        case DivergenceKind::TotalVariation:
            return "tv";
    }
    return "kl";
}

DivergenceKind parse_divergence_kind(std::string_view text) {
    if (text == "kl") return DivergenceKind::KL;
    if (text == "hellinger2" || text == "hellinger") return DivergenceKind::HellingerSquared;
    if (text == "affinity") return DivergenceKind::HellingerAffinity;
    if (text == "tv") return DivergenceKind::TotalVariation;
    throw ValidationError("divergence", "unknown divergence kind \"" + std::string(text) +
                                            "\" (expected kl, hellinger2, affinity or tv)");
}

namespace {

// Accumulates the leaf terms of one divergence over the extensions of σ.
// Terms that are exact rationals (equal weights, TV gaps) are summed exactly.
struct Accumulator {
    DivergenceKind kind;
    unsigned precision;
    Rational exact_part = 0;
    Real approx_part;

    explicit Accumulator(DivergenceKind k, unsigned p) : kind(k), precision(p), approx_part(p) {}

    void leaf(const Rational& wn, const Rational& wm) {
        switch (kind) {
            case DivergenceKind::KL:
                if (wn != wm) approx_part += Real(wn, precision) * log(Rational(wn / wm), precision);
                break;
            case DivergenceKind::HellingerSquared:
            case DivergenceKind::HellingerAffinity:
                if (wn == wm) {
                    exact_part += wn;
                } else {
                    approx_part += sqrt(Rational(wn * wm), precision);
                }
                break;
            case DivergenceKind::TotalVariation:
                exact_part += abs(Rational(wn - wm));
                break;
        }
    }

    void leaf(const Real& wn, const Real& wm) {
        switch (kind) {
            case DivergenceKind::KL:
                approx_part += wn * log(wn / wm);
                break;
            case DivergenceKind::HellingerSquared:
            case DivergenceKind::HellingerAffinity:
                approx_part += sqrt(wn * wm);
                break;
            case DivergenceKind::TotalVariation:
                approx_part += abs(wn - wm);
                break;
        }
    }

    // Raw sum: KL sum, affinity, or Σ|gap|.
    Real total() const { return approx_part + exact_part; }
};

void walk_exact(const MeasureCursor& n, const MeasureCursor& m, std::size_t steps, const Rational& wn,
                const Rational& wm, Accumulator& acc) {
    for (Bit b : {Bit{0}, Bit{1}}) {
        Rational cn = wn * n.cond(b);
        Rational cm = wm * m.cond(b);
        if (steps == 1) {
            acc.leaf(cn, cm);
            continue;
        }
        MeasureCursor nn = n, mm = m;
        nn.advance(b);
        mm.advance(b);
        walk_exact(nn, mm, steps - 1, cn, cm, acc);
    }
}

void walk_real(const MeasureCursor& n, const MeasureCursor& m, std::size_t steps, const Real& wn, const Real& wm,
               Accumulator& acc) {
    for (Bit b : {Bit{0}, Bit{1}}) {
        Real cn = wn * n.cond_real(b, acc.precision);
        Real cm = wm * m.cond_real(b, acc.precision);
        if (steps == 1) {
            acc.leaf(cn, cm);
            continue;
        }
        MeasureCursor nn = n, mm = m;
        nn.advance(b);
        mm.advance(b);
        walk_real(nn, mm, steps - 1, cn, cm, acc);
    }
}

Accumulator accumulate(const MeasureCursor& nu, const MeasureCursor& mu, DivergenceKind kind, std::size_t steps,
                       unsigned precision, std::size_t ceiling) {
    if (steps == 0) throw ValidationError("divergence", "horizon step must be at least 1");
    if (steps > ceiling) {
        throw ValidationError("divergence", "horizon step " + std::to_string(steps) + " exceeds the ceiling " +
                                                std::to_string(ceiling));
    }
    Accumulator acc(kind, precision);
    if (nu.exact() && mu.exact()) {
        walk_exact(nu, mu, steps, Rational(1), Rational(1), acc);
    } else {
        walk_real(nu, mu, steps, Real(1, precision), Real(1, precision), acc);
    }
    return acc;
}

}  // namespace

Real divergence_step(const MeasureCursor& nu, const MeasureCursor& mu, DivergenceKind kind, std::size_t steps,
                     Bit observed, unsigned precision, std::size_t ceiling) {
    if (kind == DivergenceKind::TotalVariation && steps == 1) {
        if (nu.exact() && mu.exact()) return Real(abs(Rational(mu.cond(observed) - nu.cond(observed))), precision);
        return abs(mu.cond_real(observed, precision) - nu.cond_real(observed, precision));
    }
    Accumulator acc = accumulate(nu, mu, kind, steps, precision, ceiling);
    switch (kind) {
        case DivergenceKind::KL:
        case DivergenceKind::HellingerAffinity:
            return acc.total();
        case DivergenceKind::HellingerSquared: {
            Real h = Real(1, precision) - acc.total();
            return h * Rational(2);
        }
        case DivergenceKind::TotalVariation:
            return acc.total() * make_rational(1, 2);
    }
    return acc.total();
}

Real kl_step(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision) {
    return divergence_step(nu, mu, DivergenceKind::KL, 1, 0, precision);
}

Real kl_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma, unsigned precision) {
    return kl_step(nu.cursor_at(sigma), mu.cursor_at(sigma), precision);
}

Real kl_step_horizon(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma,
                     const HorizonSpec& horizon, unsigned precision, std::size_t ceiling) {
    return divergence_step(nu.cursor_at(sigma), mu.cursor_at(sigma), DivergenceKind::KL, horizon.steps(sigma.size()),
                           0, precision, ceiling);
}

HellingerStep hellinger_step(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision) {
    Real affinity = divergence_step(nu, mu, DivergenceKind::HellingerAffinity, 1, 0, precision);
    Real h = (Real(1, precision) - affinity) * Rational(2);
    return HellingerStep{affinity, h};
}

HellingerStep hellinger_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma,
                             unsigned precision) {
    return hellinger_step(nu.cursor_at(sigma), mu.cursor_at(sigma), precision);
}

Real tv_step(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma, Bit observed,
             unsigned precision) {
    return divergence_step(nu.cursor_at(sigma), mu.cursor_at(sigma), DivergenceKind::TotalVariation, 1, observed,
                           precision);
}

Rational tv_step_exact(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& sigma, Bit observed) {
    return abs(Rational(mu.cond(sigma, observed) - nu.cond(sigma, observed)));
}

DivergenceSeries divergence_series(const DyadicMeasure& nu, const DyadicMeasure& mu, const BinaryString& prefix,
                                   const HorizonSpec& horizon, DivergenceKind kind, unsigned p,
                                   const SeriesOptions& options) {
    const unsigned prec = options.precision;
    DivergenceSeries s;
    s.horizon = horizon.name();
    s.kind = kind;
    s.p = p;
    s.prefix = prefix;
    s.tail_max = Real(prec);
    s.step.reserve(prefix.size());
    s.cumulative.reserve(prefix.size());
    MeasureCursor cn = nu.cursor();
    MeasureCursor cm = mu.cursor();
    Real running(prec);
    for (std::size_t n = 0; n < prefix.size(); ++n) {
        Real step = divergence_step(cn, cm, kind, horizon.steps(n), prefix[n], prec, options.ceiling);
        if (p == 0) {
            s.cumulative.push_back(step);
        } else {
            Real term(1, prec);
            for (unsigned i = 0; i < p; ++i) term *= step;
            running += term;
            s.cumulative.push_back(running);
        }
        s.step.push_back(std::move(step));
        cn.advance(prefix[n]);
        cm.advance(prefix[n]);
    }
    const std::size_t start = s.step.size() * 3 / 4;
    for (std::size_t n = start; n < s.step.size(); ++n) {
        if (n == start || s.step[n] > s.tail_max) s.tail_max = s.step[n];
    }
    return s;
}

void write_series_csv(const DivergenceSeries& series, std::ostream& out) {
    out << "n,sigma_prefix_len,step,cumulative,kind,horizon,p\n";
    const std::string kind = to_string(series.kind);
    for (std::size_t n = 0; n < series.step.size(); ++n) {
        out << n << ',' << n << ',' << render(series.step[n]) << ',' << render(series.cumulative[n]) << ',' << kind
            << ',' << series.horizon << ',' << series.p << '\n';
    }
}

StepDistances step_distances(const MeasureCursor& nu, const MeasureCursor& mu, unsigned precision) {
    StepDistances d;
    d.tv = divergence_step(nu, mu, DivergenceKind::TotalVariation, 1, 1, precision);
    d.h_squared = divergence_step(nu, mu, DivergenceKind::HellingerSquared, 1, 0, precision);
    d.kl = divergence_step(nu, mu, DivergenceKind::KL, 1, 0, precision);
    return d;
}

StepDistances step_distances(const Rational& nu_one, const Rational& mu_one, unsigned precision) {
    return step_distances(bernoulli(nu_one).cursor(), bernoulli(mu_one).cursor(), precision);
}

std::vector<std::string> violated_inequalities(const StepDistances& d, const Real& tol) {
    std::vector<std::string> out;
    const Real h = sqrt(d.h_squared);
    if (d.tv > h + tol) out.push_back("T <= H");
    if (d.h_squared > d.tv * Rational(2) + tol) out.push_back("H^2 <= 2T");
    if (d.h_squared > d.kl + tol) out.push_back("H^2 <= D");
    if (d.tv * d.tv > d.kl * make_rational(1, 2) + tol) out.push_back("T^2 <= D/2");
    return out;
}

namespace {

void suite_walk(const MeasureCursor& nu, const MeasureCursor& mu, std::size_t depth, const Real& tol,
                unsigned precision, InequalityReport& report) {
    if (nu.position().size() >= depth) return;
    ++report.nodes_checked;
    for (auto& name : violated_inequalities(step_distances(nu, mu, precision), tol)) {
        report.pass = false;
        bool seen = false;
        for (const auto& f : report.failures) seen = seen || f.inequality == name;
        if (!seen) report.failures.push_back(InequalityFailure{name, nu.position()});
    }
    for (Bit b : {Bit{0}, Bit{1}}) {
        MeasureCursor n = nu, m = mu;
        n.advance(b);
        m.advance(b);
        suite_walk(n, m, depth, tol, precision, report);
    }
}

}  // namespace

InequalityReport inequality_suite(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth, const Real& tol,
                                  unsigned precision) {
    InequalityReport report;
    suite_walk(nu.cursor(), mu.cursor(), depth, tol, precision, report);
    return report;
}

}  // namespace merging
