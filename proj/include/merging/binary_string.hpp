#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace merging {

using Bit = std::uint8_t;

// A finite binary string, indexed from 0. The empty string is the root of
// the binary tree 2^{<N}.
class BinaryString {
public:
    BinaryString() = default;

    // Accepts only '0' and '1'; throws ValidationError otherwise.
    static BinaryString parse(std::string_view text);
    static BinaryString zeros(std::size_t n);
    static BinaryString ones(std::size_t n);
    // The lowest `length` bits of `value`, most significant first.
    static BinaryString from_index(std::uint64_t value, std::size_t length);

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    Bit operator[](std::size_t i) const noexcept { return bits_[i]; }
    Bit at(std::size_t i) const;
    Bit back() const noexcept { return bits_.back(); }

    void push_back(Bit b);
    void pop_back() noexcept { bits_.pop_back(); }

    BinaryString prefix(std::size_t n) const;
    BinaryString extended(Bit b) const;
    BinaryString concat(const BinaryString& tail) const;

    // True when *this is an initial segment of `other` (σ ⪯ other).
    bool is_prefix_of(const BinaryString& other) const noexcept;
    bool all_zeros() const noexcept;

    // Bits read as a binary number, most significant first. Requires size() <= 63.
    std::uint64_t index() const noexcept;

    std::string str() const;

    friend bool operator==(const BinaryString&, const BinaryString&) = default;
    friend std::strong_ordering operator<=>(const BinaryString& a, const BinaryString& b);

private:
    std::vector<Bit> bits_;
};

// Heap position of σ in a complete binary tree stored breadth first:
// 2^{|σ|} - 1 + index(σ).
inline std::size_t tree_slot(const BinaryString& s) noexcept {
    return (std::size_t{1} << s.size()) - 1 + static_cast<std::size_t>(s.index());
}

// Number of strings of length <= depth.
inline std::size_t tree_size(std::size_t depth) noexcept {
    return (std::size_t{1} << (depth + 1)) - 1;
}

// Calls fn(σ) for every σ with |σ| <= depth in breadth-first, lexicographic order.
void for_each_string(std::size_t depth, const std::function<void(const BinaryString&)>& fn);

// Eventually periodic string of the given length: `head` followed by `cycle` repeated.
BinaryString eventually_periodic(const BinaryString& head, const BinaryString& cycle, std::size_t length);

}  // namespace merging

template <>
struct std::hash<merging::BinaryString> {
    std::size_t operator()(const merging::BinaryString& s) const noexcept;
};
