#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace merging {

// An integer map g used to augment a horizon. Descriptors:
//   "shift:L"     g(n) = n + L   (L >= 1)
//   "affine:A:B"  g(n) = A*n + B (A >= 1, B >= 1)
struct GMap {
    std::string descriptor;
    std::function<std::uint64_t(std::uint64_t)> fn;

    std::uint64_t operator()(std::uint64_t n) const { return fn(n); }
};
GMap parse_gmap(std::string_view descriptor);
GMap shift_map(std::uint64_t ell);
GMap affine_map(std::uint64_t a, std::uint64_t b);

// The ~_g classes of {0, ..., bound}. Each class is listed increasingly from
// its least element by iterating g, up to bound.
struct DeltaPartition {
    GMap g;
    std::size_t bound = 0;
    std::vector<std::vector<std::size_t>> classes;

    // Index of the class containing n (n <= bound).
    std::size_t class_of(std::size_t n) const;
};

inline constexpr std::size_t kDefaultClassCeiling = 16;

// Throws ValidationError if n < g(n) < g(n+1) fails on [0, bound], and
// ComputationError once more than `ceiling` classes appear.
DeltaPartition delta_classes(const GMap& g, std::size_t bound, std::size_t ceiling = kDefaultClassCeiling);

// The sigma-algebras at which conditioned forecasts are compared: F_{n+1}
// (weak), F_{n+l} (fixed step) or F_{g(n)} (augmented).
class HorizonSpec {
public:
    enum class Variant { Weak, FixedStep, Augmented };

    static HorizonSpec weak();
    static HorizonSpec fixed_step(std::size_t ell);
    static HorizonSpec augmented(DeltaPartition partition);
    // "weak", "step:L", or a GMap descriptor (partitioned up to `bound`).
    static HorizonSpec parse(std::string_view descriptor, std::size_t bound,
                             std::size_t ceiling = kDefaultClassCeiling);

    Variant variant() const noexcept { return variant_; }
    // g(n); throws ValidationError for augmented horizons beyond the partition bound.
    std::size_t target(std::size_t n) const;
    std::size_t steps(std::size_t n) const { return target(n) - n; }
    std::string name() const;
    const DeltaPartition* partition() const noexcept { return variant_ == Variant::Augmented ? &partition_ : nullptr; }

private:
    Variant variant_ = Variant::Weak;
    std::size_t ell_ = 1;
    DeltaPartition partition_;
};

}  // namespace merging
