#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "merging/binary_string.hpp"
#include "merging/delta.hpp"
#include "merging/divergence.hpp"
#include "merging/errors.hpp"
#include "merging/martingale.hpp"
#include "merging/measure.hpp"
#include "merging/randomness_lab.hpp"
#include "merging/report_io.hpp"
#include "merging/synthesis.hpp"

using namespace merging;
namespace fs = std::filesystem;

namespace {

const std::string kModule = "cli";

// A file path, or an inline JSON document when the text starts with '{'.
std::string load_document(const std::string& arg) {
    if (!arg.empty() && arg.front() == '{') return arg;
    return read_file(arg);
}

DyadicMeasure load_measure(const std::string& arg) {
    if (arg == "uniform") return uniform();
    return parse_measure_spec(load_document(arg));
}

PredictableSpec load_target(const std::string& arg) {
    if (arg == "zeros" || arg == "leading_zeros") return PredictableSpec::leading_zeros();
    if (arg == "zero") return PredictableSpec::zero();
    return PredictableSpec::parse(load_document(arg));
}

void check_precision(unsigned precision) {
    if (precision < 32 || precision > 4096) {
        throw ValidationError(kModule, "--precision must lie in [32, 4096], got " + std::to_string(precision));
    }
}

struct RootFlags {
    unsigned bits = RootSolveConfig{}.precision_bits;
    unsigned iterations = RootSolveConfig{}.max_iterations;
    unsigned working = RootSolveConfig{}.working_precision;

    void add(CLI::App* app) {
        app->add_option("--root-bits", bits, "bisection stops below bracket width 2^-bits")->capture_default_str();
        app->add_option("--root-iterations", iterations, "bisection iteration budget")->capture_default_str();
        app->add_option("--working-precision", working, "MPFR bits while solving")->capture_default_str();
    }
    RootSolveConfig config() const {
        RootSolveConfig c;
        c.precision_bits = bits;
        c.max_iterations = iterations;
        c.working_precision = working;
        c.validate();
        return c;
    }
};

void emit(const std::string& out, const Json& report) {
    if (out.empty()) {
        std::cout << report.dump(2) << "\n";
        return;
    }
    ensure_directory(out);
    write_json_atomic(fs::path(out) / "report.json", report);
    std::cout << "wrote " << (fs::path(out) / "report.json").string() << "\n";
}

// --- validate --------------------------------------------------------------

struct ValidateCmd {
    std::string measure;
    std::size_t depth = 10;
    unsigned precision = kDefaultPrecision;
    std::string out;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("validate", "Check full support and mass additivity of a measure spec");
        app->add_option("--measure", measure, "measure-spec JSON file (or inline JSON, or 'uniform')")->required();
        app->add_option("--depth", depth, "check every |sigma| <= depth")->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits for inexact measures")->capture_default_str();
        app->add_option("--out", out, "output directory (report.json); stdout when omitted");
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (depth > 24) throw ValidationError(kModule, "--depth limited to 24");
        const DyadicMeasure m = load_measure(measure);
        const SupportReport r = verify_full_support(m, depth, precision);
        Json j{{"command", "validate"},
               {"measure", m.to_json()},
               {"depth", depth},
               {"precision_bits", precision},
               {"pass", r.pass},
               {"strings_checked", r.strings_checked}};
        if (!r.pass) {
            j["witness"] = r.witness ? r.witness->str() : "";
            j["violation"] = r.violation;
        }
        emit(out, j);
        if (!r.pass) throw ValidationError("measure-core", "full-support check failed: " + r.violation);
    }
};

// --- diverge ---------------------------------------------------------------

struct DivergeCmd {
    std::string nu, mu, kind = "kl", horizon = "weak", prefix, out;
    unsigned p = 1;
    std::size_t sample_length = 0;
    std::uint64_t seed = 1;
    unsigned precision = kDefaultPrecision;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("diverge", "Per-step divergence series along one path");
        app->add_option("--nu", nu, "measure ν (expectation side)")->required();
        app->add_option("--mu", mu, "measure μ")->required();
        app->add_option("--kind", kind, "kl | hellinger2 | affinity | tv")->capture_default_str();
        app->add_option("--horizon", horizon, "weak | step:L | shift:L | affine:A:B")->capture_default_str();
        app->add_option("--p", p, "exponent: cumulative sums step^p (p >= 1), p = 0 reports the step")
            ->capture_default_str();
        app->add_option("--prefix", prefix, "binary path to evaluate along");
        app->add_option("--sample-length", sample_length, "sample the path from ν instead (uses --seed)")
            ->capture_default_str();
        app->add_option("--seed", seed, "master seed for --sample-length")->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits")->capture_default_str();
        app->add_option("--out", out, "output directory (series.csv, report.json)")->required();
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (prefix.empty() == (sample_length == 0)) {
            throw ValidationError(kModule, "give exactly one of --prefix and --sample-length");
        }
        if (p != 0 && p < 1) throw ValidationError(kModule, "--p must be 0 or >= 1");
        const DivergenceKind k = parse_divergence_kind(kind);
        const DyadicMeasure n = load_measure(nu);
        const DyadicMeasure m = load_measure(mu);
        const BinaryString path =
            prefix.empty() ? sample_path(n, sample_length, derive_seed(seed, 0)) : BinaryString::parse(prefix);
        const HorizonSpec h = HorizonSpec::parse(horizon, path.size());
        const DivergenceSeries s = divergence_series(n, m, path, h, k, p, SeriesOptions{precision, kHorizonCeiling});
        ensure_directory(out);
        std::ostringstream csv;
        write_series_csv(s, csv);
        write_file_atomic(fs::path(out) / "series.csv", csv.str());
        Json j{{"command", "diverge"},
               {"nu", n.to_json()},
               {"mu", m.to_json()},
               {"kind", to_string(k)},
               {"horizon", h.name()},
               {"p", p},
               {"length", path.size()},
               {"path_source", prefix.empty() ? "sampled" : "prefix"},
               {"seed", seed},
               {"sampler", std::string(kSamplerId)},
               {"seed_split", std::string(kSeedSplitId)},
               {"precision_bits", precision},
               {"final_cumulative", render(s.final_cumulative())},
               {"tail_max", render(s.tail_max)}};
        emit(out, j);
    }
};

// --- doob ------------------------------------------------------------------

struct DoobCmd {
    std::string nu, mu, out;
    std::size_t depth = 8;
    unsigned precision = kDefaultPrecision;
    bool check_sub = false;
    bool auxiliary = false;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("doob", "Doob decomposition of L = ln(ν/μ) under ν, dumped to a depth");
        app->add_option("--nu", nu, "base measure ν")->required();
        app->add_option("--mu", mu, "measure μ")->required();
        app->add_option("--depth", depth, "tabulate |sigma| <= depth (at most 20)")->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits")->capture_default_str();
        app->add_flag("--check-submartingale", check_sub, "verify the submartingale property first");
        app->add_flag("--auxiliary", auxiliary, "build N from the auxiliary differences instead");
        app->add_option("--out", out, "output directory (doob.csv, report.json)")->required();
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (depth > 20) throw ValidationError(kModule, "--depth limited to 20");
        const DyadicMeasure n = load_measure(nu);
        const DyadicMeasure m = load_measure(mu);
        DoobOptions opts;
        opts.precision = precision;
        opts.check_submartingale = check_sub;
        opts.tolerance = pow2_neg(40, precision);
        const DyadicFunction L = log_submartingale(m, n);
        const DoobDecomposition d = auxiliary ? doob_via_auxiliary(L, n, depth, opts) : doob_decompose(L, n, depth, opts);
        ensure_directory(out);
        std::ostringstream csv;
        write_doob_csv(d, csv);
        write_file_atomic(fs::path(out) / "doob.csv", csv.str());
        emit(out, Json{{"command", "doob"},
                       {"nu", n.to_json()},
                       {"mu", m.to_json()},
                       {"depth", depth},
                       {"precision_bits", precision},
                       {"check_submartingale", check_sub},
                       {"route", auxiliary ? "auxiliary" : "increment"},
                       {"min_increment", render(d.min_increment)}});
    }
};

// --- classes ---------------------------------------------------------------

struct ClassesCmd {
    std::string g = "shift:2", out;
    std::size_t bound = 64;
    std::size_t ceiling = kDefaultClassCeiling;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("classes", "Partition {0..bound} into ~_g classes");
        app->add_option("--g", g, "shift:L | affine:A:B")->capture_default_str();
        app->add_option("--bound", bound, "largest integer partitioned")->capture_default_str();
        app->add_option("--ceiling", ceiling, "maximum number of classes")->capture_default_str();
        app->add_option("--out", out, "output directory (report.json); stdout when omitted");
        app->callback([this] { run(); });
    }
    void run() {
        const DeltaPartition d = delta_classes(parse_gmap(g), bound, ceiling);
        Json classes = Json::array();
        for (const auto& c : d.classes) classes.push_back(c);
        emit(out, Json{{"command", "classes"},
                       {"g", d.g.descriptor},
                       {"bound", bound},
                       {"ceiling", ceiling},
                       {"count", d.classes.size()},
                       {"classes", classes}});
    }
};

// --- synthesize ------------------------------------------------------------

struct SynthesizeCmd {
    std::string method = "kl", nu, target, out;
    std::size_t depth = 8;
    unsigned precision = kDefaultPrecision;
    RootFlags root_flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("synthesize", "Build μ from ν and a predictable process (kl | hellinger)");
        app->add_option("--method", method, "kl | hellinger")->capture_default_str();
        app->add_option("--nu", nu, "base measure ν")->required();
        app->add_option("--target", target, "predictable-spec JSON, or 'zeros' for the leading-zeros process")
            ->required();
        app->add_option("--depth", depth, "depth of the residual check and the conditional dump (<= 16)")
            ->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits for the step divergences")->capture_default_str();
        root_flags.add(app);
        app->add_option("--out", out, "output directory (measure.json, residuals.csv, report.json)")->required();
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (depth > 16) throw ValidationError(kModule, "--depth limited to 16");
        const SynthesisMethod sm = parse_synthesis_method(method);
        const RootSolveConfig cfg = root_flags.config();
        const DyadicMeasure n = load_measure(nu);
        const PredictableSpec t = load_target(target);
        const DyadicMeasure m = synthesize(n, t, sm, cfg);

        std::ostringstream res;
        res << "sigma,increment,step,residual\n";
        Real worst(precision);
        Json conds = Json::array();
        const auto table = conditional_table_real(m, depth, cfg.working_precision);
        if (depth > 0) {
            for_each_string(depth - 1, [&](const BinaryString& s) {
                const Rational inc = t.increment(s);
                const Real step = sm == SynthesisMethod::KL ? kl_step(n, m, s, precision)
                                                            : hellinger_step(n, m, s, precision).h_squared;
                const Real r = step - Real(inc, precision);
                worst = max(worst, abs(r));
                res << s.str() << ',' << to_string(inc) << ',' << render(step) << ',' << render(r) << '\n';
                const auto& c = table[tree_slot(s)];
                conds.push_back(Json{{"sigma", s.str()}, {"p0", render(c[0])}, {"p1", render(c[1])}});
            });
        }
        ensure_directory(out);
        Json doc = measure_document(m);
        doc["conditionals_precision_bits"] = cfg.working_precision;
        doc["conditionals"] = conds;
        write_json_atomic(fs::path(out) / "measure.json", doc);
        write_file_atomic(fs::path(out) / "residuals.csv", res.str());
        emit(out, Json{{"command", "synthesize"},
                       {"method", to_string(sm)},
                       {"nu", n.to_json()},
                       {"target", t.to_json()},
                       {"depth", depth},
                       {"precision_bits", precision},
                       {"root_solve", cfg.to_json()},
                       {"max_abs_residual", render(worst)}});
    }
};

// --- test2a ----------------------------------------------------------------

struct Test2aCmd {
    std::string test, epsilon = "1/2", out;
    std::size_t depth = 10;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("test2a", "Convert an enumerated L1 test into a predictable process");
        app->add_option("--test", test, "test-spec JSON {\"levels\": [{\"q\", \"cylinders\"}, ...]}")->required();
        app->add_option("--epsilon", epsilon, "positive rational slack")->capture_default_str();
        app->add_option("--depth", depth, "recursion depth (<= 22)")->capture_default_str();
        app->add_option("--out", out, "output directory (predictable.json, report.json)")->required();
        app->callback([this] { run(); });
    }
    void run() {
        const Rational eps = parse_rational(epsilon);
        if (eps <= 0) throw ValidationError(kModule, "--epsilon must be positive");
        const TestSpec ts = TestSpec::parse(load_document(test));
        const PredictableSpec a = test_to_predictable(ts, eps, depth);
        ensure_directory(out);
        write_json_atomic(fs::path(out) / "predictable.json", a.to_json());
        emit(out, Json{{"command", "test2a"},
                       {"test", ts.to_json()},
                       {"epsilon", to_string(eps)},
                       {"depth", depth},
                       {"nonzero_increments", a.entries().size()}});
    }
};

// --- experiment ------------------------------------------------------------

struct ExperimentCmd {
    std::string nu, mu, horizon = "weak", kind = "kl", out;
    unsigned p = 1;
    std::size_t paths = 100, length = 2000;
    std::uint64_t seed = 1;
    unsigned precision = kDefaultPrecision;
    unsigned jobs = 1;
    std::vector<std::string> contrasts{"zeros", "ones"};

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("experiment", "Seeded merging experiment over sampled and contrast paths");
        app->add_option("--nu", nu, "sampling measure ν")->required();
        app->add_option("--mu", mu, "forecasting measure μ")->required();
        app->add_option("--horizon", horizon, "weak | step:L | shift:L | affine:A:B")->capture_default_str();
        app->add_option("--kind", kind, "kl | hellinger2 | affinity | tv")->capture_default_str();
        app->add_option("--p", p, "exponent of the cumulative sum")->capture_default_str();
        app->add_option("--paths", paths, "number of sampled paths")->capture_default_str();
        app->add_option("--length", length, "bits per path")->capture_default_str();
        app->add_option("--seed", seed, "master seed; path i uses derive_seed(seed, i)")->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits")->capture_default_str();
        app->add_option("--jobs", jobs, "worker threads (does not change the output)")->capture_default_str();
        app->add_option("--contrast", contrasts, "zeros | ones | periodic:HEAD:CYCLE (repeatable)")
            ->capture_default_str();
        app->add_option("--out", out, "output directory (report.json, path_<i>.csv, contrast_<name>.csv)")
            ->required();
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (jobs == 0) throw ValidationError(kModule, "--jobs must be positive");
        ExperimentConfig c;
        c.nu = load_measure(nu);
        c.mu = load_measure(mu);
        c.horizon = HorizonSpec::parse(horizon, length);
        c.kind = parse_divergence_kind(kind);
        c.p = p;
        c.paths = paths;
        c.length = length;
        c.seed = seed;
        c.precision = precision;
        c.jobs = jobs;
        c.contrasts = contrasts;
        for (const auto& s : contrasts) parse_contrast(s, 1);
        const ExperimentReport r = merging_experiment(c);
        write_experiment(r, out);
        std::cout << "wrote " << (fs::path(out) / "report.json").string() << "\n";
    }
};

// --- witness ---------------------------------------------------------------

struct WitnessCmd {
    std::string nu, target = "zeros", out;
    WitnessConfig c;
    RootFlags root_flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("witness", "Deficiency witness: μ synthesized from a predictable process");
        app->add_option("--nu", nu, "base measure ν")->required();
        app->add_option("--target", target, "predictable-spec JSON, or 'zeros'")->capture_default_str();
        app->add_option("--depth", c.depth, "contrast length and exact expectation depth")->capture_default_str();
        app->add_option("--precision", c.precision, "MPFR bits")->capture_default_str();
        app->add_option("--contrast", c.contrasts, "zeros | ones | periodic:HEAD:CYCLE (repeatable)")
            ->capture_default_str();
        app->add_option("--samples", c.samples, "number of paths sampled from ν")->capture_default_str();
        app->add_option("--sample-length", c.sample_length, "bits per sampled path")->capture_default_str();
        app->add_option("--seed", c.seed, "master seed; sample i uses derive_seed(seed, i)")->capture_default_str();
        app->add_option("--residual-depth", c.residual_depth, "full-tree residual table depth")
            ->capture_default_str();
        app->add_option("--jobs", c.jobs, "worker threads (does not change the output)")->capture_default_str();
        root_flags.add(app);
        app->add_option("--out", out, "output directory for the witness bundle")->required();
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(c.precision);
        if (c.jobs == 0) throw ValidationError(kModule, "--jobs must be positive");
        if (c.residual_depth > 16) throw ValidationError(kModule, "--residual-depth limited to 16");
        c.root_solve = root_flags.config();
        for (const auto& s : c.contrasts) parse_contrast(s, 1);
        const DyadicMeasure n = load_measure(nu);
        const WitnessReport r = deficiency_witness(n, load_target(target), c);
        write_witness(r, n, out);
        std::cout << "wrote " << (fs::path(out) / "report.json").string() << "\n";
    }
};

// --- check-inequalities ----------------------------------------------------

struct InequalitiesCmd {
    std::string nu, mu, out;
    std::size_t depth = 6;
    std::size_t random_pairs = 1000;
    std::uint64_t seed = 1;
    unsigned tol_bits = 40;
    unsigned precision = kDefaultPrecision;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("check-inequalities", "Check T <= H, H^2 <= 2T, H^2 <= D, T^2 <= D/2");
        app->add_option("--nu", nu, "measure ν (optional: exhaustive tree check)");
        app->add_option("--mu", mu, "measure μ (with --nu)");
        app->add_option("--depth", depth, "tree check over |sigma| < depth")->capture_default_str();
        app->add_option("--random", random_pairs, "random Bernoulli pairs with 16-bit dyadic parameters")
            ->capture_default_str();
        app->add_option("--seed", seed, "seed for the random pairs")->capture_default_str();
        app->add_option("--tol-bits", tol_bits, "slack 2^-tol_bits")->capture_default_str();
        app->add_option("--precision", precision, "MPFR bits")->capture_default_str();
        app->add_option("--out", out, "output directory (report.json); stdout when omitted");
        app->callback([this] { run(); });
    }
    void run() {
        check_precision(precision);
        if (nu.empty() != mu.empty()) throw ValidationError(kModule, "--nu and --mu go together");
        if (depth > 20) throw ValidationError(kModule, "--depth limited to 20");
        const Real tol = pow2_neg(static_cast<long>(tol_bits), precision);
        Json failures = Json::array();
        std::mt19937_64 rng(derive_seed(seed, 0));
        std::uniform_int_distribution<long> draw(1, 65535);
        for (std::size_t i = 0; i < random_pairs; ++i) {
            const Rational a(draw(rng), 65536), b(draw(rng), 65536);
            for (const auto& v : violated_inequalities(step_distances(a, b, precision), tol)) {
                failures.push_back(Json{{"pair", i}, {"nu_one", to_string(a)}, {"mu_one", to_string(b)},
                                        {"inequality", v}});
            }
        }
        Json j{{"command", "check-inequalities"},
               {"random_pairs", random_pairs},
               {"seed", seed},
               {"tolerance_bits", tol_bits},
               {"precision_bits", precision}};
        bool pass = failures.empty();
        if (!nu.empty()) {
            const DyadicMeasure n = load_measure(nu);
            const DyadicMeasure m = load_measure(mu);
            const InequalityReport r = inequality_suite(n, m, depth, tol, precision);
            Json tf = Json::array();
            for (const auto& f : r.failures) tf.push_back(Json{{"inequality", f.inequality}, {"sigma", f.sigma.str()}});
            j["tree"] = Json{{"nu", n.to_json()}, {"mu", m.to_json()}, {"depth", depth},
                             {"nodes_checked", r.nodes_checked}, {"pass", r.pass}, {"failures", tf}};
            pass = pass && r.pass;
        }
        j["random_failures"] = failures;
        j["pass"] = pass;
        emit(out, j);
        if (!pass) throw ComputationError("divergence", "inequality violated");
    }
};

// --- bounded-test ----------------------------------------------------------

struct BoundedTestCmd {
    std::string nu, test, target, out;
    std::size_t depth = 10;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("bounded-test", "Check a bounded sequential test, given or derived");
        app->add_option("--nu", nu, "measure ν")->required();
        app->add_option("--test", test, "bounded-test JSON {\"rho\": ..., \"levels\": [[...], ...]}");
        app->add_option("--target", target, "derive the test from a predictable-spec JSON (or 'zeros')");
        app->add_option("--depth", depth, "exhaustive check depth (<= 20)")->capture_default_str();
        app->add_option("--out", out, "output directory (report.json); stdout when omitted");
        app->callback([this] { run(); });
    }
    void run() {
        if (test.empty() == target.empty()) throw ValidationError(kModule, "give exactly one of --test and --target");
        const DyadicMeasure n = load_measure(nu);
        const BoundedTestSpec t = test.empty() ? bounded_test_from_predictable(load_target(target), n, depth)
                                               : BoundedTestSpec::from_json(nlohmann::json::parse(load_document(test)));
        const BoundedTestVerdict v = bounded_test_check(t, n, depth);
        Json j{{"command", "bounded-test"},
               {"nu", n.to_json()},
               {"depth", depth},
               {"source", test.empty() ? "derived" : "file"},
               {"test", t.to_json()},
               {"pass", v.pass},
               {"checks", v.checks}};
        if (!v.pass) {
            j["n"] = *v.n;
            j["sigma"] = v.sigma->str();
            j["lhs"] = to_string(v.lhs);
            j["rhs"] = to_string(v.rhs);
        }
        emit(out, j);
    }
};

}  // namespace

int main(int argc, char** argv) {
    register_synthesized_kind();
    CLI::App app{"Executable merging-of-opinions toolkit on Cantor space"};
    app.require_subcommand(1);
    ValidateCmd validate;
    DivergeCmd diverge;
    DoobCmd doob;
    ClassesCmd classes;
    SynthesizeCmd synth;
    Test2aCmd test2a;
    ExperimentCmd experiment;
    WitnessCmd witness;
    InequalitiesCmd inequalities;
    BoundedTestCmd bounded;
    validate.add(app);
    diverge.add(app);
    doob.add(app);
    classes.add(app);
    synth.add(app);
    test2a.add(app);
    experiment.add(app);
    witness.add(app);
    inequalities.add(app);
    bounded.add(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ComputationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: cli: malformed JSON: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
