#include "merging/binary_string.hpp"

#include <algorithm>

#include "merging/errors.hpp"

namespace merging {

BinaryString BinaryString::parse(std::string_view text) {
    BinaryString s;
    s.bits_.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '0' && c != '1') {
            throw ValidationError("binary-string", "invalid character '" + std::string(1, c) + "' at offset " +
                                                       std::to_string(i) + " in \"" + std::string(text) + "\"");
        }
        s.bits_.push_back(static_cast<Bit>(c - '0'));
    }
    return s;
}

BinaryString BinaryString::zeros(std::size_t n) {
    BinaryString s;
    s.bits_.assign(n, 0);
    return s;
}

BinaryString BinaryString::ones(std::size_t n) {
    BinaryString s;
    s.bits_.assign(n, 1);
    return s;
}

BinaryString BinaryString::from_index(std::uint64_t value, std::size_t length) {
    BinaryString s;
    s.bits_.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        s.bits_[length - 1 - i] = static_cast<Bit>((value >> i) & 1u);
    }
    return s;
}

Bit BinaryString::at(std::size_t i) const {
    if (i >= bits_.size()) {
        throw ValidationError("binary-string", "index " + std::to_string(i) + " out of range for length " +
                                                   std::to_string(bits_.size()));
    }
    return bits_[i];
}

void BinaryString::push_back(Bit b) { bits_.push_back(b ? 1 : 0); }

BinaryString BinaryString::prefix(std::size_t n) const {
    BinaryString s;
    s.bits_.assign(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(std::min(n, bits_.size())));
    return s;
}

BinaryString BinaryString::extended(Bit b) const {
    BinaryString s = *this;
    s.push_back(b);
    return s;
}

BinaryString BinaryString::concat(const BinaryString& tail) const {
    BinaryString s = *this;
    s.bits_.insert(s.bits_.end(), tail.bits_.begin(), tail.bits_.end());
    return s;
}

bool BinaryString::is_prefix_of(const BinaryString& other) const noexcept {
    if (bits_.size() > other.bits_.size()) return false;
    return std::equal(bits_.begin(), bits_.end(), other.bits_.begin());
}

bool BinaryString::all_zeros() const noexcept {
    return std::all_of(bits_.begin(), bits_.end(), [](Bit b) { return b == 0; });
}

std::uint64_t BinaryString::index() const noexcept {
    std::uint64_t v = 0;
    for (Bit b : bits_) v = (v << 1) | b;
    return v;
}

std::string BinaryString::str() const {
    std::string out(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = static_cast<char>('0' + bits_[i]);
    return out;
}

std::strong_ordering operator<=>(const BinaryString& a, const BinaryString& b) {
    // Shortlex: shorter strings first, then lexicographic.
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.bits_.begin(), a.bits_.end(), b.bits_.begin(), b.bits_.end());
}

void for_each_string(std::size_t depth, const std::function<void(const BinaryString&)>& fn) {
    for (std::size_t len = 0; len <= depth; ++len) {
        const std::uint64_t count = std::uint64_t{1} << len;
        for (std::uint64_t v = 0; v < count; ++v) fn(BinaryString::from_index(v, len));
    }
}

BinaryString eventually_periodic(const BinaryString& head, const BinaryString& cycle, std::size_t length) {
    if (cycle.empty() && head.size() < length) {
        throw ValidationError("binary-string", "eventually periodic string needs a non-empty cycle");
    }
    BinaryString s = head.prefix(length);
    std::size_t i = 0;
    while (s.size() < length) {
        s.push_back(cycle[i]);
        i = (i + 1) % cycle.size();
    }
    return s;
}

}  // namespace merging

std::size_t std::hash<merging::BinaryString>::operator()(const merging::BinaryString& s) const noexcept {
    std::size_t h = 1469598103934665603ull ^ s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        h ^= s[i] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}
