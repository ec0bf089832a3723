#include "merging/measure.hpp"

#include <random>
#include <unordered_map>

#include "merging/errors.hpp"

namespace merging {

namespace detail {

Rational CursorState::cond(const BinaryString&, Bit) const {
    throw ValidationError("measure-core", "exact conditional requested from an approximate measure");
}

Real CursorState::cond_real(const BinaryString& at, Bit b, unsigned precision) const {
    return Real(cond(at, b), precision);
}

}  // namespace detail

MeasureCursor::MeasureCursor(std::unique_ptr<detail::CursorState> state, bool exact)
    : state_(std::move(state)), exact_(exact) {}

MeasureCursor::MeasureCursor(const MeasureCursor& other)
    : state_(other.state_->clone()), position_(other.position_), exact_(other.exact_) {}

MeasureCursor& MeasureCursor::operator=(const MeasureCursor& other) {
    if (this != &other) {
        state_ = other.state_->clone();
        position_ = other.position_;
        exact_ = other.exact_;
    }
    return *this;
}

void MeasureCursor::advance(Bit b) {
    state_->advance(position_, b);
    position_.push_back(b);
}

DyadicMeasure::DyadicMeasure(std::shared_ptr<const detail::MeasureImpl> impl) : impl_(std::move(impl)) {}

MeasureCursor DyadicMeasure::cursor() const { return MeasureCursor(impl_->root(), impl_->exact()); }

MeasureCursor DyadicMeasure::cursor_at(const BinaryString& sigma) const {
    MeasureCursor c = cursor();
    for (std::size_t i = 0; i < sigma.size(); ++i) c.advance(sigma[i]);
    return c;
}

Rational DyadicMeasure::mass(const BinaryString& sigma) const {
    MeasureCursor c = cursor();
    Rational m = 1;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        m *= c.cond(sigma[i]);
        c.advance(sigma[i]);
    }
    return m;
}

Rational DyadicMeasure::cond(const BinaryString& sigma, Bit b) const { return cursor_at(sigma).cond(b); }

Real DyadicMeasure::mass_real(const BinaryString& sigma, unsigned precision) const {
    if (exact()) return Real(mass(sigma), precision);
    MeasureCursor c = cursor();
    Real m(1, precision);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        m *= c.cond_real(sigma[i], precision);
        c.advance(sigma[i]);
    }
    return m;
}

Real DyadicMeasure::cond_real(const BinaryString& sigma, Bit b, unsigned precision) const {
    return cursor_at(sigma).cond_real(b, precision);
}

namespace {

void require_open_unit(const Rational& p, const std::string& what) {
    if (!(p > 0 && p < 1)) throw ValidationError("measure-core", what + " out of (0,1): " + to_string(p));
}

// --- Bernoulli -------------------------------------------------------------

class BernoulliImpl final : public detail::MeasureImpl {
public:
    explicit BernoulliImpl(Rational p) : p_(std::move(p)) {}

    class State final : public detail::CursorState {
    public:
        explicit State(const BernoulliImpl* m) : m_(m) {}
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Rational cond(const BinaryString&, Bit b) const override { return b ? m_->p_ : Rational(1 - m_->p_); }
        void advance(const BinaryString&, Bit) override {}

    private:
        const BernoulliImpl* m_;
    };

    bool exact() const override { return true; }
    std::unique_ptr<detail::CursorState> root() const override { return std::make_unique<State>(this); }
    Json to_json() const override { return Json{{"kind", "bernoulli"}, {"p", to_string(p_)}}; }
    std::string describe() const override { return "bernoulli(" + to_string(p_) + ")"; }

private:
    Rational p_;
};

// --- Markov ----------------------------------------------------------------

class MarkovImpl final : public detail::MeasureImpl {
public:
    MarkovImpl(Rational initial, Rational after0, Rational after1)
        : initial_(std::move(initial)), after_{std::move(after0), std::move(after1)} {}

    class State final : public detail::CursorState {
    public:
        explicit State(const MarkovImpl* m) : m_(m) {}
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Rational cond(const BinaryString& at, Bit b) const override {
            const Rational& p1 = at.empty() ? m_->initial_ : m_->after_[at.back()];
            return b ? p1 : Rational(1 - p1);
        }
        void advance(const BinaryString&, Bit) override {}

    private:
        const MarkovImpl* m_;
    };

    bool exact() const override { return true; }
    std::unique_ptr<detail::CursorState> root() const override { return std::make_unique<State>(this); }
    Json to_json() const override {
        return Json{{"kind", "markov"},
                    {"initial", to_string(initial_)},
                    {"transition", Json::array({to_string(after_[0]), to_string(after_[1])})}};
    }
    std::string describe() const override {
        return "markov(" + to_string(initial_) + "; " + to_string(after_[0]) + ", " + to_string(after_[1]) + ")";
    }

private:
    Rational initial_;
    Rational after_[2];
};

// --- Product ---------------------------------------------------------------

class ProductImpl final : public detail::MeasureImpl {
public:
    explicit ProductImpl(ProductRule rule) : rule_(std::move(rule)) {}

    class State final : public detail::CursorState {
    public:
        explicit State(const ProductImpl* m) : m_(m) {}
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Rational cond(const BinaryString& at, Bit b) const override {
            Rational p1 = m_->rule_.at(at.size() + 1);
            return b ? p1 : Rational(1 - p1);
        }
        void advance(const BinaryString&, Bit) override {}

    private:
        const ProductImpl* m_;
    };

    bool exact() const override { return true; }
    std::unique_ptr<detail::CursorState> root() const override { return std::make_unique<State>(this); }
    Json to_json() const override {
        Json j{{"kind", "product"}};
        switch (rule_.form) {
            case ProductRule::Form::Constant:
                j["rule"] = "constant";
                j["c"] = to_string(rule_.c);
                break;
            case ProductRule::Form::InverseShift:
                j["rule"] = "inverse_shift";
                j["c"] = to_string(rule_.c);
                break;
            case ProductRule::Form::RatioShift:
                j["rule"] = "ratio_shift";
                j["c"] = to_string(rule_.c);
                break;
            case ProductRule::Form::Table: {
                j["rule"] = "table";
                Json values = Json::array();
                for (const auto& v : rule_.table) values.push_back(to_string(v));
                j["values"] = values;
                j["tail"] = to_string(rule_.tail);
                break;
            }
        }
        return j;
    }
    std::string describe() const override { return "product(" + to_json()["rule"].get<std::string>() + ")"; }

private:
    ProductRule rule_;
};

// --- Table -----------------------------------------------------------------

class TableImpl final : public detail::MeasureImpl {
public:
    TableImpl(std::size_t depth, std::vector<TableEntry> entries, DyadicMeasure tail)
        : depth_(depth), entries_(std::move(entries)), tail_(std::move(tail)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].sigma, i);
    }

    class State final : public detail::CursorState {
    public:
        State(const TableImpl* m, MeasureCursor tail) : m_(m), tail_(std::move(tail)) {}
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Rational cond(const BinaryString& at, Bit b) const override {
            if (at.size() >= m_->depth_) return tail_.cond(b);
            const TableEntry& e = m_->entries_[m_->index_.at(at)];
            return b ? e.p1 : e.p0;
        }
        Real cond_real(const BinaryString& at, Bit b, unsigned precision) const override {
            if (at.size() >= m_->depth_) return tail_.cond_real(b, precision);
            return Real(cond(at, b), precision);
        }
        void advance(const BinaryString&, Bit b) override { tail_.advance(b); }

    private:
        const TableImpl* m_;
        MeasureCursor tail_;
    };

    bool exact() const override { return tail_.exact(); }
    std::unique_ptr<detail::CursorState> root() const override {
        return std::make_unique<State>(this, tail_.cursor());
    }
    Json to_json() const override {
        Json conds = Json::array();
        for (const auto& e : entries_) {
            conds.push_back(Json{{"sigma", e.sigma.str()}, {"p0", to_string(e.p0)}, {"p1", to_string(e.p1)}});
        }
        return Json{{"kind", "table"}, {"depth", depth_}, {"conditionals", conds}, {"tail", tail_.to_json()}};
    }
    std::string describe() const override {
        return "table(depth " + std::to_string(depth_) + ", tail " + tail_.describe() + ")";
    }

private:
    std::size_t depth_;
    std::vector<TableEntry> entries_;
    std::unordered_map<BinaryString, std::size_t> index_;
    DyadicMeasure tail_;
};

// --- Mixture ---------------------------------------------------------------

class MixtureImpl final : public detail::MeasureImpl {
public:
    MixtureImpl(std::vector<Rational> weights, std::vector<DyadicMeasure> components)
        : weights_(std::move(weights)), components_(std::move(components)) {}

    // Carries the posterior weights w_i(σ) = w_i ν_i(σ) / Σ_j w_j ν_j(σ).
    class State final : public detail::CursorState {
    public:
        explicit State(const MixtureImpl* m) : posterior_(m->weights_) {
            cursors_.reserve(m->components_.size());
            for (const auto& c : m->components_) cursors_.push_back(c.cursor());
        }
        std::unique_ptr<CursorState> clone() const override { return std::make_unique<State>(*this); }
        Rational cond(const BinaryString&, Bit b) const override {
            Rational total = 0;
            for (std::size_t i = 0; i < cursors_.size(); ++i) total += posterior_[i] * cursors_[i].cond(b);
            return total;
        }
        void advance(const BinaryString& at, Bit b) override {
            const Rational denom = cond(at, b);
            for (std::size_t i = 0; i < cursors_.size(); ++i) {
                posterior_[i] = posterior_[i] * cursors_[i].cond(b) / denom;
                cursors_[i].advance(b);
            }
        }

    private:
        std::vector<Rational> posterior_;
        std::vector<MeasureCursor> cursors_;
    };

    bool exact() const override { return true; }
    std::unique_ptr<detail::CursorState> root() const override { return std::make_unique<State>(this); }
    Json to_json() const override {
        Json w = Json::array();
        Json c = Json::array();
        for (const auto& x : weights_) w.push_back(to_string(x));
        for (const auto& m : components_) c.push_back(m.to_json());
        return Json{{"kind", "mixture"}, {"weights", w}, {"components", c}};
    }
    std::string describe() const override {
        std::string s = "mixture(";
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (i) s += " + ";
            s += to_string(weights_[i]) + "*" + components_[i].describe();
        }
        return s + ")";
    }

private:
    std::vector<Rational> weights_;
    std::vector<DyadicMeasure> components_;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

Rational ProductRule::at(std::size_t coordinate) const {
    switch (form) {
        case Form::Constant:
            return c;
        case Form::InverseShift: {
            Rational q = 1 / (Rational(static_cast<unsigned long>(coordinate)) + c);
            return q;
        }
        case Form::RatioShift:
            return c / (Rational(static_cast<unsigned long>(coordinate)) + c);
        case Form::Table:
            return coordinate >= 1 && coordinate <= table.size() ? table[coordinate - 1] : tail;
    }
    return c;
}

DyadicMeasure uniform() { return bernoulli(make_rational(1, 2)); }

DyadicMeasure bernoulli(const Rational& p) {
    require_open_unit(p, "p");
    return DyadicMeasure(std::make_shared<BernoulliImpl>(p));
}

DyadicMeasure markov(const Rational& initial, const Rational& after_zero, const Rational& after_one) {
    require_open_unit(initial, "initial");
    require_open_unit(after_zero, "transition[0]");
    require_open_unit(after_one, "transition[1]");
    return DyadicMeasure(std::make_shared<MarkovImpl>(initial, after_zero, after_one));
}

DyadicMeasure product(ProductRule rule) {
    switch (rule.form) {
        case ProductRule::Form::Constant:
            require_open_unit(rule.c, "p");
            break;
        case ProductRule::Form::InverseShift:
        case ProductRule::Form::RatioShift:
            // With n >= 1, c > 0 keeps 1/(n+c) and c/(n+c) inside (0,1).
            if (!(rule.c > 0)) throw ValidationError("measure-core", "product rule shift c must be > 0");
            break;
        case ProductRule::Form::Table:
            for (std::size_t i = 0; i < rule.table.size(); ++i) {
                require_open_unit(rule.table[i], "p(" + std::to_string(i + 1) + ")");
            }
            require_open_unit(rule.tail, "tail p");
            break;
    }
    return DyadicMeasure(std::make_shared<ProductImpl>(std::move(rule)));
}

DyadicMeasure harmonic_product() {
    ProductRule rule;
    rule.form = ProductRule::Form::InverseShift;
    rule.c = 1;
    return product(rule);
}

DyadicMeasure table(std::size_t depth, std::vector<TableEntry> entries, DyadicMeasure tail, Validation validation) {
    if (depth > 24) throw ValidationError("measure-core", "table depth " + std::to_string(depth) + " exceeds 24");
    std::unordered_map<BinaryString, std::size_t> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.sigma.size() >= depth) {
            throw ValidationError("measure-core", "table entry \"" + e.sigma.str() + "\" is not shorter than depth " +
                                                      std::to_string(depth));
        }
        if (!seen.emplace(e.sigma, i).second) {
            throw ValidationError("measure-core", "duplicate table entry \"" + e.sigma.str() + "\"");
        }
    }
    // Every string of length < depth needs a row, checked or not: the oracle
    // must be total.
    for (std::size_t len = 0; len < depth; ++len) {
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
            BinaryString s = BinaryString::from_index(v, len);
            if (!seen.count(s)) throw ValidationError("measure-core", "table is missing conditionals for \"" + s.str() + "\"");
        }
    }
    if (validation == Validation::Checked) {
        for (const auto& e : entries) {
            require_open_unit(e.p0, "cond(\"" + e.sigma.str() + "\",0)");
            require_open_unit(e.p1, "cond(\"" + e.sigma.str() + "\",1)");
            if (e.p0 + e.p1 != 1) {
                throw ValidationError("measure-core", "additivity violated at \"" + e.sigma.str() + "\": p0 + p1 != 1");
            }
        }
    }
    return DyadicMeasure(std::make_shared<TableImpl>(depth, std::move(entries), std::move(tail)));
}

DyadicMeasure mixture(std::vector<Rational> weights, std::vector<DyadicMeasure> components) {
    if (weights.empty() || weights.size() != components.size()) {
        throw ValidationError("measure-core", "mixture needs one positive weight per component");
    }
    Rational total = 0;
    for (const auto& w : weights) {
        if (!(w > 0)) throw ValidationError("measure-core", "mixture weight not positive: " + to_string(w));
        total += w;
    }
    if (total != 1) throw ValidationError("measure-core", "mixture weights sum to " + to_string(total) + ", not 1");
    for (const auto& c : components) {
        if (!c.exact()) throw ValidationError("measure-core", "mixture components must be exact measures");
    }
    return DyadicMeasure(std::make_shared<MixtureImpl>(std::move(weights), std::move(components)));
}

namespace {

struct SupportWalker {
    std::size_t depth;
    unsigned precision;
    SupportReport report;

    bool fail(const BinaryString& at, std::string why) {
        report.pass = false;
        report.witness = at;
        report.violation = std::move(why);
        return false;
    }

    bool check_exact(const MeasureCursor& c) {
        const BinaryString& at = c.position();
        Rational p0 = c.cond(0);
        Rational p1 = c.cond(1);
        if (!(p0 > 0 && p0 < 1)) return fail(at, "cond(sigma,0) = " + to_string(p0) + " not in (0,1)");
        if (!(p1 > 0 && p1 < 1)) return fail(at, "cond(sigma,1) = " + to_string(p1) + " not in (0,1)");
        if (p0 + p1 != 1) return fail(at, "cond(sigma,0) + cond(sigma,1) = " + to_string(Rational(p0 + p1)));
        return true;
    }

    bool check_real(const MeasureCursor& c) {
        const BinaryString& at = c.position();
        Real p0 = c.cond_real(0, precision);
        Real p1 = c.cond_real(1, precision);
        Real slack = pow2_neg(static_cast<long>(precision) - 4, precision);
        if (!(p0.sign() > 0 && p0 < Rational(1))) return fail(at, "cond(sigma,0) = " + p0.to_string() + " not in (0,1)");
        if (!(p1.sign() > 0 && p1 < Rational(1))) return fail(at, "cond(sigma,1) = " + p1.to_string() + " not in (0,1)");
        if (abs(p0 + p1 - Rational(1)) > slack) {
            return fail(at, "cond(sigma,0) + cond(sigma,1) - 1 = " + (p0 + p1 - Rational(1)).to_string());
        }
        return true;
    }

    // Mass is carried down the walk; additivity of child masses is checked
    // against the parent mass directly.
    bool walk_exact(const MeasureCursor& c, const Rational& mass) {
        ++report.strings_checked;
        if (c.position().size() == depth) return true;
        if (!check_exact(c)) return false;
        Rational m0 = mass * c.cond(0);
        Rational m1 = mass * c.cond(1);
        if (m0 + m1 != mass) return fail(c.position(), "mass(sigma0) + mass(sigma1) != mass(sigma)");
        for (Bit b : {Bit{0}, Bit{1}}) {
            MeasureCursor child = c;
            child.advance(b);
            if (!walk_exact(child, b ? m1 : m0)) return false;
        }
        return true;
    }

    bool walk_real(const MeasureCursor& c) {
        ++report.strings_checked;
        if (c.position().size() == depth) return true;
        if (!check_real(c)) return false;
        for (Bit b : {Bit{0}, Bit{1}}) {
            MeasureCursor child = c;
            child.advance(b);
            if (!walk_real(child)) return false;
        }
        return true;
    }
};

}  // namespace

SupportReport verify_full_support(const DyadicMeasure& measure, std::size_t depth, unsigned precision) {
    SupportWalker w{depth, precision, {}};
    // Conditionals are checked at every σ with |σ| <= depth, so the walk goes
    // one level deeper than the last checked node.
    w.depth = depth + 1;
    if (measure.exact()) {
        w.walk_exact(measure.cursor(), Rational(1));
    } else {
        w.walk_real(measure.cursor());
    }
    // Leaves at depth+1 are not themselves checked.
    w.report.strings_checked = std::min(w.report.strings_checked, tree_size(depth));
    return w.report;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

BinaryString sample_path(const DyadicMeasure& measure, std::size_t length, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    MeasureCursor c = measure.cursor();
    const mpz_class two64 = mpz_class(1) << 64;
    for (std::size_t i = 0; i < length; ++i) {
        const std::uint64_t k = gen();
        mpz_class draw;
        mpz_import(draw.get_mpz_t(), 1, 1, sizeof(k), 0, 0, &k);
        bool zero;
        if (c.exact()) {
            const Rational p0 = c.cond(0);
            // k / 2^64 < num/den  <=>  k * den < num * 2^64
            zero = draw * p0.get_den() < p0.get_num() * two64;
        } else {
            Real u(64);
            mpfr_set_z_2exp(u.get(), draw.get_mpz_t(), -64, MPFR_RNDN);
            zero = u < c.cond_real(0, kDefaultPrecision);
        }
        c.advance(zero ? 0 : 1);
    }
    return c.position();
}

}  // namespace merging

namespace merging {

namespace {

template <class T, class Fill>
void walk_conditionals(const MeasureCursor& c, std::size_t depth, std::vector<std::array<T, 2>>& out, Fill fill) {
    if (c.position().size() >= depth) return;
    out[tree_slot(c.position())] = fill(c);
    for (Bit b : {Bit{0}, Bit{1}}) {
        MeasureCursor child = c;
        child.advance(b);
        walk_conditionals(child, depth, out, fill);
    }
}

}  // namespace

std::vector<std::array<Rational, 2>> conditional_table(const DyadicMeasure& measure, std::size_t depth) {
    std::vector<std::array<Rational, 2>> out(depth == 0 ? 0 : tree_size(depth - 1));
    walk_conditionals(measure.cursor(), depth, out,
                      [](const MeasureCursor& c) { return std::array<Rational, 2>{c.cond(0), c.cond(1)}; });
    return out;
}

std::vector<std::array<Real, 2>> conditional_table_real(const DyadicMeasure& measure, std::size_t depth,
                                                        unsigned precision) {
    std::vector<std::array<Real, 2>> out(depth == 0 ? 0 : tree_size(depth - 1),
                                         std::array<Real, 2>{Real(precision), Real(precision)});
    walk_conditionals(measure.cursor(), depth, out, [precision](const MeasureCursor& c) {
        return std::array<Real, 2>{c.cond_real(0, precision), c.cond_real(1, precision)};
    });
    return out;
}

}  // namespace merging
