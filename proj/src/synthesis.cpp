#include "merging/synthesis.hpp"

#include <array>
#include <mutex>
#include <unordered_map>

#include "json_util.hpp"
#include "merging/errors.hpp"

namespace merging {

namespace {

const std::string kModule = "synthesis";

}  // namespace

// --- PredictableSpec -------------------------------------------------------

PredictableSpec PredictableSpec::table(std::vector<std::pair<BinaryString, Rational>> increments,
                                       Rational default_value) {
    if (default_value < 0) throw ValidationError(kModule, "negative default increment " + to_string(default_value));
    auto index = std::make_shared<std::unordered_map<BinaryString, Rational>>();
    for (const auto& [sigma, value] : increments) {
        if (value < 0) {
            throw ValidationError(kModule, "negative increment " + to_string(value) + " at \"" + sigma.str() + "\"");
        }
        if (!index->emplace(sigma, value).second) {
            throw ValidationError(kModule, "duplicate increment for \"" + sigma.str() + "\"");
        }
    }
    PredictableSpec s;
    s.kind_ = Kind::Table;
    s.entries_ = std::move(increments);
    s.index_ = std::move(index);
    s.default_ = std::move(default_value);
    return s;
}

PredictableSpec PredictableSpec::zero() { return table({}, Rational(0)); }

PredictableSpec PredictableSpec::leading_zeros() {
    PredictableSpec s;
    s.kind_ = Kind::LeadingZeros;
    return s;
}

PredictableSpec PredictableSpec::function(std::string name, IncrementFn fn) {
    PredictableSpec s;
    s.kind_ = Kind::Function;
    s.name_ = std::move(name);
    s.fn_ = std::move(fn);
    return s;
}

PredictableSpec PredictableSpec::from_json(const nlohmann::json& node, const std::string& location) {
    if (!node.is_object()) throw ParseError(kModule, location.empty() ? "/" : location, "expected an object");
    PredictableSpec s;
    if (node.contains("kind")) {
        const std::string kind = json_util::string_field(node, location, "kind", kModule);
        if (kind == "leading_zeros") {
            s = leading_zeros();
        } else if (kind == "zero") {
            s = zero();
        } else if (kind != "table") {
            throw ParseError(kModule, location + "/kind", "unknown predictable kind \"" + kind + "\"");
        }
        if (kind != "table") {
            if (node.contains("note")) s.note_ = json_util::string_field(node, location, "note", kModule);
            return s;
        }
    }
    const auto& incs = json_util::field(node, location, "increments", kModule);
    if (!incs.is_array()) throw ParseError(kModule, location + "/increments", "expected an array");
    std::vector<std::pair<BinaryString, Rational>> entries;
    for (std::size_t i = 0; i < incs.size(); ++i) {
        const std::string where = location + "/increments/" + std::to_string(i);
        BinaryString sigma =
            json_util::binary_string(json_util::field(incs[i], where, "sigma", kModule), where + "/sigma", kModule);
        entries.emplace_back(std::move(sigma), json_util::rational_field(incs[i], where, "value", kModule));
    }
    Rational def = node.contains("default") ? json_util::rational_field(node, location, "default", kModule) : Rational(0);
    s = table(std::move(entries), std::move(def));
    if (node.contains("note")) s.note_ = json_util::string_field(node, location, "note", kModule);
    return s;
}

PredictableSpec PredictableSpec::parse(std::string_view document) {
    return from_json(json_util::parse_document(document, kModule), "");
}

Json PredictableSpec::to_json() const {
    Json j;
    switch (kind_) {
        case Kind::LeadingZeros:
            j = Json{{"kind", "leading_zeros"}};
            break;
        case Kind::Function:
            throw ValidationError(kModule, "function-based predictable spec \"" + name_ + "\" has no JSON form");
        case Kind::Table: {
            Json incs = Json::array();
            for (const auto& [sigma, value] : entries_) {
                incs.push_back(Json{{"sigma", sigma.str()}, {"value", merging::to_string(value)}});
            }
            j = Json{{"increments", incs}, {"default", merging::to_string(default_)}};
            break;
        }
    }
    if (!note_.empty()) j["note"] = note_;
    return j;
}

std::string PredictableSpec::describe() const {
    switch (kind_) {
        case Kind::LeadingZeros:
            return "leading_zeros";
        case Kind::Function:
            return name_;
        case Kind::Table:
            return "table(" + std::to_string(entries_.size()) + " entries, default " + merging::to_string(default_) + ")";
    }
    return "";
}

Rational PredictableSpec::increment(const BinaryString& sigma) const {
    switch (kind_) {
        case Kind::LeadingZeros:
            return sigma.all_zeros() ? Rational(1) : Rational(0);
        case Kind::Function: {
            Rational v = fn_(sigma);
            if (v < 0) {
                throw ValidationError(kModule, "negative increment " + merging::to_string(v) + " at \"" + sigma.str() + "\"");
            }
            return v;
        }
        case Kind::Table: {
            auto it = index_->find(sigma);
            return it == index_->end() ? default_ : it->second;
        }
    }
    return 0;
}

Rational PredictableSpec::value(const BinaryString& sigma) const {
    if (kind_ == Kind::LeadingZeros) {
        std::size_t k = 0;
        while (k < sigma.size() && sigma[k] == 0) ++k;
        // increments at ∅, 0, ..., 0^k, but only proper prefixes count
        return Rational(static_cast<unsigned long>(std::min(k + 1, sigma.size())));
    }
    Rational a = 0;
    BinaryString prefix;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        a += increment(prefix);
        prefix.push_back(sigma[i]);
    }
    return a;
}

Rational PredictableSpec::expectation(const DyadicMeasure& nu, std::size_t n) const {
    if (!nu.exact()) throw ValidationError(kModule, "exact expectations need an exact base measure");
    switch (kind_) {
        case Kind::LeadingZeros: {
            Rational total = 0;
            MeasureCursor c = nu.cursor();
            Rational mass = 1;
            for (std::size_t k = 0; k < n; ++k) {
                total += mass;
                mass *= c.cond(0);
                c.advance(0);
            }
            return total;
        }
        case Kind::Table: {
            Rational total = default_ * Rational(static_cast<unsigned long>(n));
            for (const auto& [sigma, value] : entries_) {
                if (sigma.size() < n && value != default_) total += nu.mass(sigma) * (value - default_);
            }
            return total;
        }
        case Kind::Function: {
            if (n > 21) throw ValidationError(kModule, "exhaustive expectation limited to n <= 21");
            Rational total = 0;
            if (n == 0) return total;
            for_each_string(n - 1, [&](const BinaryString& s) { total += nu.mass(s) * increment(s); });
            return total;
        }
    }
    return 0;
}

// --- TestSpec --------------------------------------------------------------

TestSpec TestSpec::from_json(const nlohmann::json& node, const std::string& location) {
    const auto& levels = json_util::field(node, location, "levels", kModule);
    if (!levels.is_array()) throw ParseError(kModule, location + "/levels", "expected an array");
    TestSpec t;
    for (std::size_t m = 0; m < levels.size(); ++m) {
        const std::string where = location + "/levels/" + std::to_string(m);
        TestLevel level;
        level.q = json_util::rational_field(levels[m], where, "q", kModule);
        const auto& cyl = json_util::field(levels[m], where, "cylinders", kModule);
        if (!cyl.is_array()) throw ParseError(kModule, where + "/cylinders", "expected an array");
        for (std::size_t i = 0; i < cyl.size(); ++i) {
            level.cylinders.push_back(json_util::binary_string(cyl[i], where + "/cylinders/" + std::to_string(i), kModule));
        }
        t.levels.push_back(std::move(level));
    }
    t.validate();
    return t;
}

TestSpec TestSpec::parse(std::string_view document) {
    return from_json(json_util::parse_document(document, kModule), "");
}

Json TestSpec::to_json() const {
    Json levels_json = Json::array();
    for (const auto& level : levels) {
        Json cyl = Json::array();
        for (const auto& c : level.cylinders) cyl.push_back(c.str());
        levels_json.push_back(Json{{"q", merging::to_string(level.q)}, {"cylinders", cyl}});
    }
    return Json{{"levels", levels_json}};
}

void TestSpec::validate() const {
    if (levels.empty() || levels[0].q != 0) throw ValidationError(kModule, "test levels must start with q_0 = 0");
    for (std::size_t m = 0; m < levels.size(); ++m) {
        if (levels[m].q < 0) throw ValidationError(kModule, "negative level q_" + std::to_string(m));
    }
}

PredictableSpec test_to_predictable(const TestSpec& test, const Rational& epsilon, std::size_t depth) {
    test.validate();
    if (!(epsilon > 0)) throw ValidationError(kModule, "epsilon must be > 0");
    if (depth > 22) throw ValidationError(kModule, "test_to_predictable depth limited to 22");
    std::vector<std::pair<BinaryString, Rational>> entries;
    if (depth > 0) {
        std::vector<Rational> a(tree_size(depth - 1) * 2 + 1);
        for_each_string(depth - 1, [&](const BinaryString& s) {
            const std::size_t slot = tree_slot(s);
            const Rational& current = a[slot];
            Rational best = current;
            const std::size_t n = s.size();
            for (std::size_t m = 0; m <= n && m < test.levels.size(); ++m) {
                const auto& level = test.levels[m];
                if (!(level.q < current + epsilon) || !(level.q > best)) continue;
                for (std::size_t i = 0; i <= n && i < level.cylinders.size(); ++i) {
                    if (level.cylinders[i].is_prefix_of(s)) {
                        best = level.q;
                        break;
                    }
                }
            }
            a[2 * slot + 1] = best;
            a[2 * slot + 2] = best;
            if (best != current) entries.emplace_back(s, Rational(best - current));
        });
    }
    PredictableSpec spec = PredictableSpec::table(std::move(entries), Rational(0));
    spec.set_note("test_to_predictable: epsilon " + to_string(epsilon) + ", depth " + std::to_string(depth) +
                  ", enumeration level-major (m, then i) in listed order");
    return spec;
}

// --- Root solving ----------------------------------------------------------

void RootSolveConfig::validate() const {
    if (precision_bits < 10) throw ValidationError(kModule, "precision_bits must be >= 10");
    if (working_precision < 32) throw ValidationError(kModule, "working_precision must be >= 32");
    if (precision_bits + 8 > working_precision) {
        throw ValidationError(kModule, "precision_bits must be at most working_precision - 8");
    }
    if (max_iterations == 0) throw ValidationError(kModule, "max_iterations must be >= 1");
}

Json RootSolveConfig::to_json() const {
    return Json{{"precision_bits", precision_bits},
                {"max_iterations", max_iterations},
                {"working_precision", working_precision}};
}

RootSolveConfig RootSolveConfig::from_json(const nlohmann::json& node, const std::string& location) {
    RootSolveConfig cfg;
    if (!node.is_object()) throw ParseError(kModule, location.empty() ? "/" : location, "expected an object");
    if (node.contains("precision_bits")) cfg.precision_bits = json_util::uint_field(node, location, "precision_bits", kModule);
    if (node.contains("max_iterations")) cfg.max_iterations = json_util::uint_field(node, location, "max_iterations", kModule);
    if (node.contains("working_precision")) {
        cfg.working_precision = json_util::uint_field(node, location, "working_precision", kModule);
    }
    cfg.validate();
    return cfg;
}

RootSolveResult solve_bracketed_decreasing(const std::function<Real(const Real&)>& f, const Real& lo_in,
                                           const Real& hi_in, const RootSolveConfig& cfg) {
    cfg.validate();
    const unsigned wp = cfg.working_precision;
    Real lo = lo_in.with_precision(wp);
    Real hi = hi_in.with_precision(wp);
    if (!(lo < hi)) throw ComputationError(kModule, "empty bracket");
    if (!(f(lo).sign() > 0) || !(f(hi).sign() <= 0)) {
        throw ComputationError(kModule, "bracket not certified: need f(lo) > 0 >= f(hi) at " + std::to_string(wp) +
                                            " bits (retry at higher precision)");
    }
    const Real width = pow2_neg(static_cast<long>(cfg.precision_bits), wp);
    const Rational half = make_rational(1, 2);
    unsigned iterations = 0;
    while (hi - lo > width) {
        if (iterations == cfg.max_iterations) {
            throw ComputationError(kModule, "bisection exceeded " + std::to_string(cfg.max_iterations) + " iterations");
        }
        ++iterations;
        Real mid = (lo + hi) * half;
        if (f(mid).sign() > 0) {
            lo = std::move(mid);
        } else {
            hi = std::move(mid);
        }
    }
    return RootSolveResult{(lo + hi) * half, iterations};
}

RootSolveResult kl_node_root(const Real& p_in, const Real& c_in, const Real& d_in, const RootSolveConfig& cfg) {
    const unsigned wp = cfg.working_precision;
    const Real p = p_in.with_precision(wp);
    const Real d = d_in.with_precision(wp);
    if (!(p.sign() > 0 && p < Rational(1))) throw ValidationError(kModule, "kl node needs 0 < p < 1");
    if (!(d.sign() > 0)) throw ValidationError(kModule, "kl node needs d > 0");
    const Real one(1, wp);
    const Real one_minus_p = one - p;
    const Real e = one / p - one;  // exponent 1/p - 1 > 0
    const Real k = p * exp(-(c_in.with_precision(wp) / p));
    auto f = [&](const Real& v) {
        // (1-p) v^{1/p} - d v^{1/p-1} = v^{1/p-1} ((1-p) v - d)
        return pow(v, e) * (one_minus_p * v - d) + k;
    };
    return solve_bracketed_decreasing(f, Real(wp), d, cfg);
}

RootSolveResult hellinger_node_root(const Real& p_in, const Real& c_in, const RootSolveConfig& cfg) {
    const unsigned wp = cfg.working_precision;
    const Real p = p_in.with_precision(wp);
    const Real c = c_in.with_precision(wp);
    const Real one(1, wp);
    const Real q = one - p;
    auto g = [&](const Real& x) { return sqrt(x * p) + sqrt((one - x) * q) - c; };
    return solve_bracketed_decreasing(g, p, one, cfg);
}

bool below_hellinger_bound(const Rational& increment) {
    // increment < 2 - sqrt(2)  <=>  2 - increment > sqrt(2)
    const Rational r = 2 - increment;
    return r > 0 && r * r > 2;
}

std::string to_string(SynthesisMethod method) { return method == SynthesisMethod::KL ? "kl" : "hellinger"; }

SynthesisMethod parse_synthesis_method(std::string_view text) {
    if (text == "kl") return SynthesisMethod::KL;
    if (text == "hellinger") return SynthesisMethod::Hellinger;
    throw ValidationError(kModule, "unknown synthesis method \"" + std::string(text) + "\" (expected kl or hellinger)");
}

// --- Synthesized measures --------------------------------------------------

namespace {

using CondPair = std::array<Real, 2>;

class SynthesizedImpl final : public detail::MeasureImpl {
public:
    SynthesizedImpl(DyadicMeasure base, PredictableSpec target, SynthesisMethod method, RootSolveConfig cfg)
        : base_(std::move(base)), target_(std::move(target)), method_(method), cfg_(cfg) {
        cfg_.validate();
        if (method_ == SynthesisMethod::Hellinger) check_hellinger_bounds();
    }

    class State final : public detail::CursorState {
    public:
        State(const SynthesizedImpl* m, MeasureCursor base) : m_(m), base_(std::move(base)) {}
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Real cond_real(const BinaryString& at, Bit b, unsigned precision) const override {
            if (!memo_) memo_ = m_->node(at, base_);
            const Real& v = (*memo_)[b];
            return v.precision() == precision ? v : v.with_precision(precision);
        }
        void advance(const BinaryString&, Bit b) override {
            base_.advance(b);
            memo_.reset();
        }

    private:
        const SynthesizedImpl* m_;
        MeasureCursor base_;
        mutable std::optional<CondPair> memo_;
    };

    bool exact() const override { return false; }
    std::unique_ptr<detail::CursorState> root() const override {
        return std::make_unique<State>(this, base_.cursor());
    }
    Json to_json() const override {
        return Json{{"kind", "synthesized"},
                    {"method", to_string(method_)},
                    {"base", base_.to_json()},
                    {"target", target_.to_json()},
                    {"root_solve", cfg_.to_json()}};
    }
    std::string describe() const override {
        return "synthesized(" + to_string(method_) + ", " + base_.describe() + ", " + target_.describe() + ")";
    }

    CondPair node(const BinaryString& at, const MeasureCursor& base) const {
        const unsigned wp = cfg_.working_precision;
        const Rational inc = target_.increment(at);
        if (inc == 0) return CondPair{base.cond_real(0, wp), base.cond_real(1, wp)};
        {
            std::lock_guard lock(mutex_);
            auto it = cache_.find(at);
            if (it != cache_.end()) return it->second;
        }
        CondPair solved = method_ == SynthesisMethod::KL ? solve_kl(at, base, inc) : solve_hellinger(at, base, inc);
        std::lock_guard lock(mutex_);
        cache_.emplace(at, solved);
        return solved;
    }

private:
    void check_hellinger_bounds() const {
        auto check = [](const Rational& inc, const std::string& where) {
            if (!below_hellinger_bound(inc)) {
                throw ValidationError(kModule, "Hellinger increment " + merging::to_string(inc) + " at " + where +
                                                   " is not below 2(1 - sqrt(1/2)) = 0.585786...");
            }
        };
        switch (target_.kind()) {
            case PredictableSpec::Kind::LeadingZeros:
                check(Rational(1), "\"\"");
                break;
            case PredictableSpec::Kind::Table:
                check(target_.default_value(), "the default");
                for (const auto& [sigma, value] : target_.entries()) check(value, "\"" + sigma.str() + "\"");
                break;
            case PredictableSpec::Kind::Function:
                break;
        }
    }

    void require_full_support(const Real& x, const BinaryString& at) const {
        const Real floor = pow2_neg(static_cast<long>(cfg_.precision_bits), cfg_.working_precision);
        if (!(x > floor) || !(x < Real(1, cfg_.working_precision) - floor)) {
            throw ComputationError(kModule, "solved conditional at \"" + at.str() + "\" leaves (2^-" +
                                                std::to_string(cfg_.precision_bits) + ", 1 - 2^-" +
                                                std::to_string(cfg_.precision_bits) + ")");
        }
    }

    // The node equation depends on L(σ) only through the scaling v = d v',
    // under which f_d(d v') = d^{1/p} f_1(v') with the same c' = increment, so
    // the root is solved with d = 1 and c = increment(σ).
    CondPair solve_kl(const BinaryString& at, const MeasureCursor& base, const Rational& inc) const {
        const unsigned wp = cfg_.working_precision;
        const Real p = base.cond_real(0, wp);
        const Real one(1, wp);
        const RootSolveResult r = kl_node_root(p, Real(inc, wp), one, cfg_);
        Real mu1 = r.root * (one - p);
        require_full_support(mu1, at);
        Real mu0 = one - mu1;
        return CondPair{std::move(mu0), std::move(mu1)};
    }

    CondPair solve_hellinger(const BinaryString& at, const MeasureCursor& base, const Rational& inc) const {
        if (!below_hellinger_bound(inc)) {
            throw ValidationError(kModule, "Hellinger increment " + merging::to_string(inc) + " at \"" + at.str() +
                                               "\" is not below 2(1 - sqrt(1/2)) = 0.585786...");
        }
        const unsigned wp = cfg_.working_precision;
        const Rational c = 1 - inc / 2;
        const Rational c2 = c * c;
        const CondPair nu{base.cond_real(0, wp), base.cond_real(1, wp)};
        Bit j = 0;
        if (!(nu[0] < c2)) j = 1;
        if (!(nu[j] < c2)) {
            throw ComputationError(kModule, "no candidate bit with sqrt(nu) < c at \"" + at.str() + "\"");
        }
        const RootSolveResult r = hellinger_node_root(nu[j], Real(c, wp), cfg_);
        require_full_support(r.root, at);
        CondPair out{Real(wp), Real(wp)};
        out[j] = r.root;
        out[1 - j] = Real(1, wp) - r.root;
        return out;
    }

    DyadicMeasure base_;
    PredictableSpec target_;
    SynthesisMethod method_;
    RootSolveConfig cfg_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<BinaryString, CondPair> cache_;
};

DyadicMeasure parse_synthesized(const nlohmann::json& node, const std::string& location) {
    const auto method = parse_synthesis_method(json_util::string_field(node, location, "method", kModule));
    DyadicMeasure base = measure_from_json(json_util::field(node, location, "base", kModule), location + "/base",
                                           Validation::Checked);
    PredictableSpec target =
        PredictableSpec::from_json(json_util::field(node, location, "target", kModule), location + "/target");
    RootSolveConfig cfg;
    if (node.contains("root_solve")) cfg = RootSolveConfig::from_json(node["root_solve"], location + "/root_solve");
    return synthesize(base, target, method, cfg);
}

const bool registered = (register_measure_kind("synthesized", parse_synthesized), true);

}  // namespace

DyadicMeasure measure_from_predictable_kl(const DyadicMeasure& nu, const PredictableSpec& target,
                                          const RootSolveConfig& cfg) {
    return DyadicMeasure(std::make_shared<SynthesizedImpl>(nu, target, SynthesisMethod::KL, cfg));
}

DyadicMeasure measure_from_predictable_hellinger(const DyadicMeasure& nu, const PredictableSpec& target,
                                                 const RootSolveConfig& cfg) {
    return DyadicMeasure(std::make_shared<SynthesizedImpl>(nu, target, SynthesisMethod::Hellinger, cfg));
}

DyadicMeasure synthesize(const DyadicMeasure& nu, const PredictableSpec& target, SynthesisMethod method,
                         const RootSolveConfig& cfg) {
    return method == SynthesisMethod::KL ? measure_from_predictable_kl(nu, target, cfg)
                                         : measure_from_predictable_hellinger(nu, target, cfg);
}

void register_synthesized_kind() {
    (void)registered;
    register_measure_kind("synthesized", parse_synthesized);
}

}  // namespace merging
