#include "merging/randomness_lab.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "merging/errors.hpp"
#include "merging/report_io.hpp"

namespace merging {

namespace {

const std::string kModule = "randomness-lab";

void require_exact(const DyadicMeasure& m, const char* what) {
    if (!m.exact()) throw ValidationError(kModule, std::string(what) + " needs exact measures");
}

}  // namespace

MildnessProfile mildness_profile(const DyadicMeasure& nu, const BinaryString& prefix) {
    require_exact(nu, "mildness_profile");
    if (prefix.empty()) throw ValidationError(kModule, "mildness_profile needs a non-empty prefix");
    MildnessProfile out;
    MeasureCursor c = nu.cursor();
    for (std::size_t n = 0; n < prefix.size(); ++n) {
        Rational v = c.cond(prefix[n]);
        out.inf = n == 0 ? v : std::min(out.inf, v);
        out.conditionals.push_back(std::move(v));
        out.running_inf.push_back(out.inf);
        c.advance(prefix[n]);
    }
    return out;
}

std::vector<LikelihoodStep> likelihood_ratio_steps(const DyadicMeasure& mu, const DyadicMeasure& nu,
                                                   const BinaryString& prefix) {
    require_exact(mu, "likelihood_ratio_steps");
    require_exact(nu, "likelihood_ratio_steps");
    if (prefix.empty()) throw ValidationError(kModule, "likelihood_ratio_steps needs a non-empty prefix");
    std::vector<LikelihoodStep> out;
    out.reserve(prefix.size());
    MeasureCursor cm = mu.cursor();
    MeasureCursor cn = nu.cursor();
    Rational mass_mu = 1, mass_nu = 1;
    for (std::size_t n = 0; n < prefix.size(); ++n) {
        const Bit b = prefix[n];
        LikelihoodStep s;
        s.mu_cond = cm.cond(b);
        s.nu_cond = cn.cond(b);
        s.gap = abs(Rational(s.mu_cond - s.nu_cond));
        const Rational m_before = mass_mu / mass_nu;
        mass_mu *= s.mu_cond;
        mass_nu *= s.nu_cond;
        const Rational m_after = mass_mu / mass_nu;
        s.ratio = m_after / m_before;
        if (m_before / m_after != s.nu_cond / s.mu_cond) {
            throw ComputationError(kModule, "likelihood-ratio identity failed at n = " + std::to_string(n));
        }
        out.push_back(std::move(s));
        cm.advance(b);
        cn.advance(b);
    }
    return out;
}

namespace {

// Exhaustive walk for the kl estimate: per level, Σ ν(σ) L(σ) and
// Σ ν(σ) kl_step(σ).
struct KlWalk {
    std::size_t depth;
    unsigned precision;
    std::vector<Real> el;      // E L_n
    std::vector<Real> einc;    // Σ_{|σ|=n} ν(σ) kl_step(σ)

    void exact(const MeasureCursor& cn, const MeasureCursor& cm, const Rational& mass, const Rational& ratio) {
        const std::size_t n = cn.position().size();
        el[n] += Real(mass, precision) * log(ratio, precision);
        if (n == depth) return;
        einc[n] += Real(mass, precision) * kl_step(cn, cm, precision);
        for (Bit b : {Bit{0}, Bit{1}}) {
            const Rational pn = cn.cond(b);
            const Rational pm = cm.cond(b);
            MeasureCursor nn = cn, mm = cm;
            nn.advance(b);
            mm.advance(b);
            exact(nn, mm, mass * pn, ratio * pn / pm);
        }
    }

    void approx(const MeasureCursor& cn, const MeasureCursor& cm, const Real& mass, const Real& ratio) {
        const std::size_t n = cn.position().size();
        el[n] += mass * log(ratio);
        if (n == depth) return;
        einc[n] += mass * kl_step(cn, cm, precision);
        for (Bit b : {Bit{0}, Bit{1}}) {
            const Real pn = cn.cond_real(b, precision);
            const Real pm = cm.cond_real(b, precision);
            MeasureCursor nn = cn, mm = cm;
            nn.advance(b);
            mm.advance(b);
            approx(nn, mm, mass * pn, ratio * pn / pm);
        }
    }
};

}  // namespace

AbconEstimate kl_abcon_estimate(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth,
                                unsigned precision) {
    if (depth > kAbconDepthCeiling) {
        throw ValidationError(kModule, "depth " + std::to_string(depth) + " exceeds the exhaustive ceiling " +
                                           std::to_string(kAbconDepthCeiling));
    }
    KlWalk w{depth, precision, std::vector<Real>(depth + 1, Real(precision)),
             std::vector<Real>(depth + 1, Real(precision))};
    if (nu.exact() && mu.exact()) {
        w.exact(nu.cursor(), mu.cursor(), Rational(1), Rational(1));
    } else {
        w.approx(nu.cursor(), mu.cursor(), Real(1, precision), Real(1, precision));
    }
    AbconEstimate e;
    e.relation = "kl";
    e.depth = depth;
    e.values = w.el;
    e.running_sup = Real(precision);
    e.max_identity_gap = Real(precision);
    Real a(precision);
    for (std::size_t n = 0; n <= depth; ++n) {
        if (n > 0) a += w.einc[n - 1];
        e.predictable_values.push_back(a);
        e.running_sup = max(e.running_sup, e.values[n]);
        e.max_identity_gap = max(e.max_identity_gap, abs(e.values[n] - a));
    }
    e.note = "evidence at depth " + std::to_string(depth) + " (sup over n <= depth only)";
    return e;
}

namespace {

struct BdWalk {
    std::size_t depth;
    unsigned precision;
    std::vector<Rational> emax;  // per level Σ ν(σ) max_{k<=n} ratio
    Real elog;

    void walk(const MeasureCursor& cn, const MeasureCursor& cm, const Rational& mass, const Rational& ratio,
              const Rational& running_max) {
        const std::size_t n = cn.position().size();
        emax[n] += mass * running_max;
        if (n == depth) {
            elog += Real(mass, precision) * log(ratio, precision);
            return;
        }
        for (Bit b : {Bit{0}, Bit{1}}) {
            const Rational pn = cn.cond(b);
            const Rational pm = cm.cond(b);
            const Rational r = ratio * pn / pm;
            MeasureCursor nn = cn, mm = cm;
            nn.advance(b);
            mm.advance(b);
            walk(nn, mm, mass * pn, r, std::max(running_max, r));
        }
    }
};

}  // namespace

AbconEstimate bd_abcon_estimate(const DyadicMeasure& nu, const DyadicMeasure& mu, std::size_t depth, const Real& tol,
                                unsigned precision) {
    require_exact(nu, "bd_abcon_estimate");
    require_exact(mu, "bd_abcon_estimate");
    if (depth > kAbconDepthCeiling) {
        throw ValidationError(kModule, "depth " + std::to_string(depth) + " exceeds the exhaustive ceiling " +
                                           std::to_string(kAbconDepthCeiling));
    }
    BdWalk w{depth, precision, std::vector<Rational>(depth + 1, Rational(0)), Real(precision)};
    w.walk(nu.cursor(), mu.cursor(), Rational(1), Rational(1), Rational(1));
    AbconEstimate e;
    e.relation = "bd";
    e.depth = depth;
    e.exact_values = w.emax;
    e.running_sup = Real(precision);
    for (const auto& v : w.emax) {
        e.values.push_back(Real(v, precision));
        e.running_sup = max(e.running_sup, e.values.back());
    }
    e.expected_log = w.elog;
    e.chain_holds = !(w.elog > e.values.back() - Rational(1) + tol);
    e.note = "evidence at depth " + std::to_string(depth) + "; E L_depth <= E max ratio - 1 " +
             (e.chain_holds ? "holds" : "FAILS");
    return e;
}

// --- Bounded tests ---------------------------------------------------------

namespace {

// Drops cylinders contained in another listed cylinder.
std::vector<BinaryString> minimal_cylinders(std::vector<BinaryString> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<BinaryString> out;
    for (const auto& t : v) {
        bool covered = false;
        for (const auto& u : v) covered = covered || (u != t && u.is_prefix_of(t));
        if (!covered) out.push_back(t);
    }
    return out;
}

std::function<Rational(const BinaryString&)> point_mass(const BinaryString& point_prefix_bit_pattern, bool zeros) {
    (void)point_prefix_bit_pattern;
    const Bit bit = zeros ? 0 : 1;
    return [bit](const BinaryString& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != bit) return Rational(0);
        }
        return Rational(1);
    };
}

}  // namespace

BoundedTestSpec BoundedTestSpec::from_json(const nlohmann::json& node, const std::string& location) {
    BoundedTestSpec t;
    const auto& rho = json_util::field(node, location, "rho", kModule);
    const std::string rho_kind = json_util::string_field(rho, location + "/rho", "kind", kModule);
    if (rho_kind == "point_mass") {
        const std::string path = json_util::string_field(rho, location + "/rho", "path", kModule);
        if (path != "zeros" && path != "ones") {
            throw ParseError(kModule, location + "/rho/path", "expected \"zeros\" or \"ones\"");
        }
        t.rho = point_mass({}, path == "zeros");
        t.rho_description = "point_mass(" + path + ")";
    } else {
        DyadicMeasure m = measure_from_json(rho, location + "/rho", Validation::Checked);
        require_exact(m, "bounded test rho");
        t.rho = [m](const BinaryString& s) { return m.mass(s); };
        t.rho_description = m.describe();
    }
    const auto& levels = json_util::field(node, location, "levels", kModule);
    if (!levels.is_array()) throw ParseError(kModule, location + "/levels", "expected an array");
    for (std::size_t n = 0; n < levels.size(); ++n) {
        const std::string where = location + "/levels/" + std::to_string(n);
        if (!levels[n].is_array()) throw ParseError(kModule, where, "expected an array of binary strings");
        std::vector<BinaryString> v;
        for (std::size_t i = 0; i < levels[n].size(); ++i) {
            v.push_back(json_util::binary_string(levels[n][i], where + "/" + std::to_string(i), kModule));
        }
        t.levels.push_back(std::move(v));
    }
    return t;
}

Json BoundedTestSpec::to_json() const {
    Json levels_json = Json::array();
    for (const auto& level : levels) {
        Json l = Json::array();
        for (const auto& s : level) l.push_back(s.str());
        levels_json.push_back(l);
    }
    return Json{{"rho", rho_description}, {"levels", levels_json}};
}

BoundedTestVerdict bounded_test_check(const BoundedTestSpec& test, const DyadicMeasure& nu, std::size_t depth) {
    require_exact(nu, "bounded_test_check");
    if (depth > 20) throw ValidationError(kModule, "bounded_test_check depth limited to 20");
    if (!test.rho) throw ValidationError(kModule, "bounded test has no rho");
    BoundedTestVerdict v;
    std::vector<Rational> nu_mass, rho_mass;
    nu_mass.reserve(tree_size(depth));
    for_each_string(depth, [&](const BinaryString& s) {
        nu_mass.push_back(nu.mass(s));
        rho_mass.push_back(test.rho(s));
    });
    for (std::size_t n = 0; n <= depth; ++n) {
        const std::vector<BinaryString> cyl =
            n < test.levels.size() ? minimal_cylinders(test.levels[n]) : std::vector<BinaryString>{};
        std::vector<Rational> cyl_mass;
        for (const auto& t : cyl) cyl_mass.push_back(nu.mass(t));
        const Rational scale = pow2_neg(n);
        bool stop = false;
        for_each_string(depth, [&](const BinaryString& s) {
            if (stop) return;
            const std::size_t slot = tree_slot(s);
            Rational lhs = 0;
            for (std::size_t i = 0; i < cyl.size(); ++i) {
                if (cyl[i].is_prefix_of(s)) {
                    lhs = nu_mass[slot];
                    break;
                }
                if (s.is_prefix_of(cyl[i])) lhs += cyl_mass[i];
            }
            const Rational rhs = scale * rho_mass[slot];
            ++v.checks;
            if (lhs > rhs) {
                v.pass = false;
                v.n = n;
                v.sigma = s;
                v.lhs = lhs;
                v.rhs = rhs;
                stop = true;
            }
        });
        if (stop) break;
    }
    return v;
}

BoundedTestSpec bounded_test_from_predictable(const PredictableSpec& target, const DyadicMeasure& nu,
                                              std::size_t depth) {
    require_exact(nu, "bounded_test_from_predictable");
    if (depth > 20) throw ValidationError(kModule, "bounded_test_from_predictable depth limited to 20");
    // Leaf values f = A(τ), |τ| = depth, and the integrals E_ν[f; [σ]] for |σ| <= depth.
    const std::size_t leaves = std::size_t{1} << depth;
    std::vector<Rational> f(leaves);
    std::vector<Rational> integral(tree_size(depth));
    for (std::size_t i = 0; i < leaves; ++i) {
        const BinaryString t = BinaryString::from_index(i, depth);
        f[i] = target.value(t);
        integral[leaves - 1 + i] = nu.mass(t) * f[i];
    }
    for (std::size_t slot = leaves - 1; slot-- > 0;) integral[slot] = integral[2 * slot + 1] + integral[2 * slot + 2];
    const Rational expectation = integral[0];

    BoundedTestSpec t;
    if (expectation == 0) {
        t.rho = [nu](const BinaryString& s) { return nu.mass(s); };
        t.rho_description = "rho = nu (f = 0)";
        return t;
    }
    unsigned long s = 0;
    while (Rational(mpz_class(1) << s) < expectation) ++s;
    auto shared_integral = std::make_shared<std::vector<Rational>>(std::move(integral));
    auto shared_f = std::make_shared<std::vector<Rational>>(f);
    t.rho = [shared_integral, shared_f, expectation, depth, nu](const BinaryString& sigma) {
        if (sigma.size() <= depth) return Rational((*shared_integral)[tree_slot(sigma)] / expectation);
        return Rational(nu.mass(sigma) * (*shared_f)[sigma.prefix(depth).index()] / expectation);
    };
    t.rho_description = "rho(sigma) = E[A_" + std::to_string(depth) + "; [sigma]] / " + to_string(expectation);

    for (std::size_t n = 0;; ++n) {
        const Rational threshold(mpz_class(1) << (n + s));
        // all[slot]: every leaf below exceeds the threshold
        std::vector<char> all(tree_size(depth), 0);
        bool any = false;
        for (std::size_t i = 0; i < leaves; ++i) {
            all[leaves - 1 + i] = f[i] > threshold;
            any = any || all[leaves - 1 + i];
        }
        if (!any) break;
        for (std::size_t slot = leaves - 1; slot-- > 0;) all[slot] = all[2 * slot + 1] && all[2 * slot + 2];
        std::vector<BinaryString> level;
        for_each_string(depth, [&](const BinaryString& sigma) {
            const std::size_t slot = tree_slot(sigma);
            const bool parent = slot > 0 && all[(slot - 1) / 2];
            if (all[slot] && !parent) level.push_back(sigma);
        });
        t.levels.push_back(std::move(level));
    }
    return t;
}

// --- Experiments -----------------------------------------------------------

ContrastPath parse_contrast(const std::string& descriptor, std::size_t length) {
    if (descriptor == "zeros") return ContrastPath{"zeros", BinaryString::zeros(length)};
    if (descriptor == "ones") return ContrastPath{"ones", BinaryString::ones(length)};
    const std::string prefix = "periodic:";
    if (descriptor.rfind(prefix, 0) == 0) {
        const std::string rest = descriptor.substr(prefix.size());
        const auto colon = rest.find(':');
        if (colon != std::string::npos) {
            try {
                BinaryString head = BinaryString::parse(rest.substr(0, colon));
                BinaryString cycle = BinaryString::parse(rest.substr(colon + 1));
                std::string name = "periodic_" + head.str() + "_" + cycle.str();
                return ContrastPath{name, eventually_periodic(head, cycle, length)};
            } catch (const ValidationError&) {
            }
        }
    }
    throw ValidationError(kModule, "contrast path \"" + descriptor + "\" (expected zeros, ones or periodic:HEAD:CYCLE)");
}

namespace {

Real max_of(const std::vector<Real>& v, unsigned precision) {
    Real m(precision);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i == 0 || v[i] > m) m = v[i];
    }
    return m;
}

// Runs fn(i) for i < count on `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
        workers.emplace_back([&, j] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[j] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

PathSummary summarize(std::string name, std::uint64_t seed, BinaryString path, DivergenceSeries series,
                      unsigned precision) {
    PathSummary s;
    s.name = std::move(name);
    s.seed = seed;
    s.path = std::move(path);
    s.max_cumulative = max_of(series.cumulative, precision);
    s.series = std::move(series);
    return s;
}

Json path_json(const PathSummary& s, bool with_seed) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < s.path.size(); ++i) ones += s.path[i];
    Json j{{"name", s.name}};
    if (with_seed) j["seed"] = s.seed;
    j["length"] = s.path.size();
    j["ones"] = ones;
    j["final_cumulative"] = render(s.series.final_cumulative());
    j["max_cumulative"] = render(s.max_cumulative);
    j["tail_max"] = render(s.series.tail_max);
    return j;
}

std::string series_csv(const DivergenceSeries& series) {
    std::ostringstream out;
    write_series_csv(series, out);
    return out.str();
}

}  // namespace

ExperimentReport merging_experiment(const ExperimentConfig& config) {
    if (config.paths == 0 || config.length == 0) throw ValidationError(kModule, "paths and length must be positive");
    if (config.p != 0 && config.p < 1) throw ValidationError(kModule, "p must be 0 or >= 1");
    const SeriesOptions opts{config.precision, kHorizonCeiling};

    ExperimentReport r;
    r.config = Json{{"nu", config.nu.to_json()},
                    {"mu", config.mu.to_json()},
                    {"horizon", config.horizon.name()},
                    {"kind", to_string(config.kind)},
                    {"p", config.p},
                    {"paths", config.paths},
                    {"length", config.length},
                    {"seed", config.seed},
                    {"precision_bits", config.precision},
                    {"sampler", std::string(kSamplerId)},
                    {"seed_split", std::string(kSeedSplitId)},
                    {"contrasts", config.contrasts}};

    r.paths.resize(config.paths);
    parallel_for(config.paths, config.jobs, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(config.seed, i);
        BinaryString path = sample_path(config.nu, config.length, seed);
        DivergenceSeries series =
            divergence_series(config.nu, config.mu, path, config.horizon, config.kind, config.p, opts);
        r.paths[i] = summarize("path_" + std::to_string(i), seed, std::move(path), std::move(series), config.precision);
    });
    for (const auto& c : config.contrasts) {
        ContrastPath cp = parse_contrast(c, config.length);
        DivergenceSeries series =
            divergence_series(config.nu, config.mu, cp.path, config.horizon, config.kind, config.p, opts);
        r.contrasts.push_back(summarize("contrast_" + cp.name, 0, std::move(cp.path), std::move(series),
                                        config.precision));
    }

    Real sum(config.precision);
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
        const Real f = r.paths[i].series.final_cumulative();
        sum += f;
        if (i == 0 || f < r.min_final) r.min_final = f;
        if (i == 0 || f > r.max_final) r.max_final = f;
    }
    r.mean_final = sum / Real(static_cast<long>(r.paths.size()), config.precision);
    return r;
}

Json ExperimentReport::to_json() const {
    Json paths_json = Json::array();
    for (const auto& p : paths) paths_json.push_back(path_json(p, true));
    Json contrasts_json = Json::array();
    for (const auto& c : contrasts) contrasts_json.push_back(path_json(c, false));
    return Json{{"format_version", 1},
                {"config", config},
                {"aggregates",
                 {{"paths", paths.size()},
                  {"mean_final_cumulative", render(mean_final)},
                  {"min_final_cumulative", render(min_final)},
                  {"max_final_cumulative", render(max_final)}}},
                {"paths", paths_json},
                {"contrasts", contrasts_json},
                {"note", "finite-length evidence only; no randomness or merging membership is claimed"}};
}

void write_experiment(const ExperimentReport& report, const std::filesystem::path& dir) {
    ensure_directory(dir);
    for (std::size_t i = 0; i < report.paths.size(); ++i) {
        write_file_atomic(dir / ("path_" + std::to_string(i) + ".csv"), series_csv(report.paths[i].series));
    }
    for (const auto& c : report.contrasts) write_file_atomic(dir / (c.name + ".csv"), series_csv(c.series));
    write_json_atomic(dir / "report.json", report.to_json());
}

// --- Deficiency witness ----------------------------------------------------

namespace {

WitnessPath witness_path(const DyadicMeasure& nu, const DyadicMeasure& mu, const PredictableSpec& target,
                         std::string name, std::uint64_t seed, BinaryString path, unsigned precision) {
    DivergenceSeries series =
        divergence_series(nu, mu, path, HorizonSpec::weak(), DivergenceKind::KL, 1, SeriesOptions{precision, 1});
    WitnessPath w;
    w.max_path_residual = Real(precision);
    Rational a = 0;
    BinaryString prefix;
    for (std::size_t n = 0; n < path.size(); ++n) {
        a += target.increment(prefix);
        prefix.push_back(path[n]);
        w.max_path_residual = max(w.max_path_residual, abs(series.cumulative[n] - a));
    }
    w.a_final = a;
    w.summary = summarize(std::move(name), seed, std::move(path), std::move(series), precision);
    return w;
}

void supremum_flag(const DyadicMeasure& nu, const PredictableSpec& target, WitnessReport& r) {
    switch (target.kind()) {
        case PredictableSpec::Kind::Table: {
            if (target.default_value() != 0) {
                r.supremum_flag = "unbounded: E A_n >= n * " + to_string(target.default_value());
                return;
            }
            std::size_t longest = 0;
            for (const auto& [sigma, value] : target.entries()) longest = std::max(longest, sigma.size() + 1);
            r.supremum = target.expectation(nu, longest);
            r.supremum_flag = "closed-form: finite table, sup_n E A_n = E A_" + std::to_string(longest) + " = " +
                              to_string(*r.supremum);
            return;
        }
        case PredictableSpec::Kind::LeadingZeros: {
            const Json j = nu.to_json();
            if (j.value("kind", "") == "bernoulli") {
                const Rational p = parse_rational(j["p"].get<std::string>());
                r.supremum = 1 / p;
                r.supremum_flag = "closed-form: geometric sum, sup_n E A_n = 1/p = " + to_string(*r.supremum);
                return;
            }
            break;
        }
        case PredictableSpec::Kind::Function:
            break;
    }
    r.supremum_flag = "unknown";
}

}  // namespace

WitnessReport deficiency_witness(const DyadicMeasure& nu, const PredictableSpec& target, const WitnessConfig& config) {
    require_exact(nu, "deficiency_witness");
    WitnessReport r;
    r.config = config;
    r.target = target;
    r.mu = measure_from_predictable_kl(nu, target, config.root_solve);
    const unsigned prec = config.precision;

    for (std::size_t n = 0; n <= config.depth; ++n) r.expectations.push_back(target.expectation(nu, n));
    supremum_flag(nu, target, r);

    r.max_node_residual = Real(prec);
    const std::size_t rd = std::min(config.residual_depth, config.depth);
    if (rd > 0) {
        for_each_string(rd - 1, [&](const BinaryString& s) {
            NodeResidual nr;
            nr.sigma = s;
            nr.increment = target.increment(s);
            nr.kl = kl_step(nu, r.mu, s, prec);
            nr.residual = nr.kl - nr.increment;
            r.max_node_residual = max(r.max_node_residual, abs(nr.residual));
            r.residuals.push_back(std::move(nr));
        });
    }

    for (const auto& c : config.contrasts) {
        ContrastPath cp = parse_contrast(c, config.depth);
        r.contrasts.push_back(witness_path(nu, r.mu, target, "contrast_" + cp.name, 0, std::move(cp.path), prec));
    }
    r.samples.resize(config.samples);
    parallel_for(config.samples, config.jobs, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(config.seed, i);
        r.samples[i] = witness_path(nu, r.mu, target, "sample_" + std::to_string(i), seed,
                                    sample_path(nu, config.sample_length, seed), prec);
    });
    return r;
}

Json WitnessReport::to_json() const {
    Json expectations_json = Json::array();
    for (const auto& e : expectations) expectations_json.push_back(to_string(e));
    auto paths_json = [](const std::vector<WitnessPath>& v, bool seeds) {
        Json out = Json::array();
        for (const auto& w : v) {
            Json j = path_json(w.summary, seeds);
            j["predictable_value"] = to_string(w.a_final);
            j["max_residual"] = render(w.max_path_residual);
            out.push_back(j);
        }
        return out;
    };
    Json j{{"format_version", 1},
           {"config",
            {{"depth", config.depth},
             {"precision_bits", config.precision},
             {"root_solve", config.root_solve.to_json()},
             {"contrasts", config.contrasts},
             {"samples", config.samples},
             {"sample_length", config.sample_length},
             {"seed", config.seed},
             {"residual_depth", config.residual_depth},
             {"sampler", std::string(kSamplerId)},
             {"seed_split", std::string(kSeedSplitId)}}},
           {"target", target.to_json()},
           {"expectations", expectations_json},
           {"supremum", supremum_flag},
           {"max_node_residual", render(max_node_residual)},
           {"contrasts", paths_json(contrasts, false)},
           {"samples", paths_json(samples, true)},
           {"note", "expectations are exact up to depth " + std::to_string(config.depth) +
                        "; evidence at that depth only"}};
    return j;
}

void write_witness(const WitnessReport& report, const DyadicMeasure& nu, const std::filesystem::path& dir) {
    ensure_directory(dir);
    const unsigned wp = report.config.root_solve.working_precision;
    Json measure = measure_document(report.mu);
    Json conds = Json::array();
    const std::size_t rd = std::min(report.config.residual_depth, report.config.depth);
    if (rd > 0) {
        const auto table = conditional_table_real(report.mu, rd, wp);
        for_each_string(rd - 1, [&](const BinaryString& s) {
            const auto& c = table[tree_slot(s)];
            conds.push_back(Json{{"sigma", s.str()}, {"p0", render(c[0])}, {"p1", render(c[1])}});
        });
    }
    measure["conditionals_precision_bits"] = wp;
    measure["conditionals"] = conds;
    write_json_atomic(dir / "measure.json", measure);
    write_json_atomic(dir / "base_measure.json", measure_document(nu));
    write_json_atomic(dir / "predictable.json", report.target.to_json());
    write_json_atomic(dir / "root_solve.json", report.config.root_solve.to_json());

    std::ostringstream res;
    res << "sigma,increment,kl_step,residual\n";
    for (const auto& r : report.residuals) {
        res << r.sigma.str() << ',' << to_string(r.increment) << ',' << render(r.kl) << ',' << render(r.residual)
            << '\n';
    }
    write_file_atomic(dir / "residuals.csv", res.str());
    for (const auto& c : report.contrasts) write_file_atomic(dir / (c.summary.name + ".csv"), series_csv(c.summary.series));
    for (const auto& s : report.samples) write_file_atomic(dir / (s.summary.name + ".csv"), series_csv(s.summary.series));
    write_json_atomic(dir / "report.json", report.to_json());
}

}  // namespace merging
