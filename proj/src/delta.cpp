#include "merging/delta.hpp"

#include <charconv>

#include "merging/errors.hpp"

namespace merging {

namespace {

std::uint64_t parse_uint(std::string_view text, std::string_view descriptor) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("martingale", "\"" + std::string(descriptor) + "\"", "expected a non-negative integer");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto colon = s.find(':', start);
        parts.push_back(s.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    return parts;
}

}  // namespace

GMap shift_map(std::uint64_t ell) {
    if (ell == 0) throw ValidationError("martingale", "shift:L needs L >= 1");
    return GMap{"shift:" + std::to_string(ell), [ell](std::uint64_t n) { return n + ell; }};
}

GMap affine_map(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) throw ValidationError("martingale", "affine:A:B needs A >= 1 and B >= 1");
    return GMap{"affine:" + std::to_string(a) + ":" + std::to_string(b), [a, b](std::uint64_t n) { return a * n + b; }};
}

GMap parse_gmap(std::string_view descriptor) {
    auto parts = split(descriptor);
    if (parts[0] == "shift" && parts.size() == 2) return shift_map(parse_uint(parts[1], descriptor));
    if (parts[0] == "affine" && parts.size() == 3) {
        return affine_map(parse_uint(parts[1], descriptor), parse_uint(parts[2], descriptor));
    }
    throw ParseError("martingale", "\"" + std::string(descriptor) + "\"", "expected shift:L or affine:A:B");
}

std::size_t DeltaPartition::class_of(std::size_t n) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        for (auto m : classes[i]) {
            if (m == n) return i;
            if (m > n) break;
        }
    }
    throw ValidationError("martingale", std::to_string(n) + " is outside the partition bound " + std::to_string(bound));
}

DeltaPartition delta_classes(const GMap& g, std::size_t bound, std::size_t ceiling) {
    for (std::size_t n = 0; n <= bound; ++n) {
        const auto gn = g(n);
        const auto gn1 = g(n + 1);
        if (!(n < gn && gn < gn1)) {
            throw ValidationError("martingale", "g = " + g.descriptor + " violates n < g(n) < g(n+1) at n = " +
                                                    std::to_string(n));
        }
    }
    DeltaPartition out;
    out.g = g;
    out.bound = bound;
    // g is strictly increasing, hence injective, so two orbits that meet are
    // nested: each class is the forward orbit of its least element.
    std::vector<bool> assigned(bound + 1, false);
    for (std::size_t n = 0; n <= bound; ++n) {
        if (assigned[n]) continue;
        if (out.classes.size() == ceiling) {
            throw ComputationError("martingale", "g = " + g.descriptor + " has more than " + std::to_string(ceiling) +
                                                     " classes below " + std::to_string(bound) +
                                                     " (not finitely augmented within the bound)");
        }
        std::vector<std::size_t> cls;
        for (std::uint64_t m = n; m <= bound; m = g(m)) {
            assigned[m] = true;
            cls.push_back(m);
        }
        out.classes.push_back(std::move(cls));
    }
    return out;
}

HorizonSpec HorizonSpec::weak() { return HorizonSpec(); }

HorizonSpec HorizonSpec::fixed_step(std::size_t ell) {
    if (ell == 0) throw ValidationError("divergence", "fixed-step horizon needs l >= 1");
    HorizonSpec h;
    h.variant_ = ell == 1 ? Variant::Weak : Variant::FixedStep;
    h.ell_ = ell;
    return h;
}

HorizonSpec HorizonSpec::augmented(DeltaPartition partition) {
    HorizonSpec h;
    h.variant_ = Variant::Augmented;
    h.partition_ = std::move(partition);
    return h;
}

HorizonSpec HorizonSpec::parse(std::string_view descriptor, std::size_t bound, std::size_t ceiling) {
    if (descriptor == "weak") return weak();
    auto parts = split(descriptor);
    if (parts[0] == "step" && parts.size() == 2) return fixed_step(parse_uint(parts[1], descriptor));
    return augmented(delta_classes(parse_gmap(descriptor), bound, ceiling));
}

std::size_t HorizonSpec::target(std::size_t n) const {
    if (variant_ != Variant::Augmented) return n + ell_;
    if (n > partition_.bound) {
        throw ValidationError("divergence", "horizon index " + std::to_string(n) + " beyond the partition bound " +
                                                std::to_string(partition_.bound));
    }
    return partition_.g(n);
}

std::string HorizonSpec::name() const {
    switch (variant_) {
        case Variant::Weak:
            return "weak";
        case Variant::FixedStep:
            return "step:" + std::to_string(ell_);
        case Variant::Augmented:
            return partition_.g.descriptor;
    }
    return "weak";
}

}  // namespace merging
