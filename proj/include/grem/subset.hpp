#pragma once

// Subsets of the coordinate set I = {1..n}, stored as bitmasks (bit i-1 for
// coordinate i), and chains of nested subsets. n is capped at 20 so that the
// whole lattice fits comfortably in lookup tables.

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "grem/errors.hpp"

namespace grem {

constexpr int max_coordinates = 20;

/// A subset of I = {1..n}; equality is set equality (mask equality).
struct subset_t {
    std::uint32_t bits = 0;

    constexpr subset_t() = default;
    constexpr explicit subset_t(std::uint32_t mask) : bits(mask) {}

    static constexpr subset_t empty() { return subset_t{0}; }
    static constexpr subset_t full(int n) { return subset_t{(1u << n) - 1u}; }
    /// Singleton {i}, i 1-based.
    static constexpr subset_t single(int i) { return subset_t{1u << (i - 1)}; }

    constexpr bool contains(int i) const { return (bits >> (i - 1)) & 1u; }
    constexpr bool subset_of(subset_t other) const { return (bits & ~other.bits) == 0; }
    constexpr bool is_empty() const { return bits == 0; }
    int size() const { return std::popcount(bits); }

    constexpr subset_t operator|(subset_t o) const { return subset_t{bits | o.bits}; }
    constexpr subset_t operator&(subset_t o) const { return subset_t{bits & o.bits}; }
    /// Set difference.
    constexpr subset_t operator-(subset_t o) const { return subset_t{bits & ~o.bits}; }

    constexpr bool operator==(const subset_t&) const = default;
    constexpr bool operator<(subset_t o) const { return bits < o.bits; }

    /// 1-based members in ascending order.
    std::vector<int> members() const {
        std::vector<int> out;
        for (std::uint32_t m = bits; m != 0; m &= m - 1)
            out.push_back(std::countr_zero(m) + 1);
        return out;
    }

    std::string str() const {
        if (bits == 0) return "{}";
        std::string s = "{";
        bool first = true;
        for (int i : members()) {
            if (!first) s += ",";
            s += std::to_string(i);
            first = false;
        }
        return s + "}";
    }
};

/// Calls f(subset_t) for every subset of `space`, the empty set included,
/// in increasing mask order.
template <typename F>
void for_each_subset_of(subset_t space, F&& f) {
    std::uint32_t sub = 0;
    while (true) {
        f(subset_t{sub});
        if (sub == space.bits) break;
        sub = (sub - space.bits) & space.bits;
    }
}

/// A chain: strictly increasing sequence of subsets from the empty set to I.
struct chain_t {
    std::vector<subset_t> sets;

    int levels() const { return static_cast<int>(sets.size()) - 1; }
    subset_t level_set(int j) const { return sets[static_cast<std::size_t>(j)]; }
    /// Coordinates added at level j (1-based level).
    subset_t level_increment(int j) const { return sets[j] - sets[j - 1]; }

    bool operator==(const chain_t&) const = default;

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            if (i) s += " < ";
            s += sets[i].str();
        }
        return s;
    }
};

/// Checks the chain invariants against a coordinate count.
inline void require_valid_chain(const chain_t& chain, int n) {
    if (chain.sets.size() < 2 || !chain.sets.front().is_empty() ||
        chain.sets.back() != subset_t::full(n))
        fail(errc::chain_mismatch, "chain must run from {} to I, got " + chain.str());
    for (std::size_t j = 1; j < chain.sets.size(); ++j) {
        if (!chain.sets[j - 1].subset_of(chain.sets[j]) || chain.sets[j - 1] == chain.sets[j])
            fail(errc::chain_mismatch, "chain not strictly increasing at level " + std::to_string(j));
    }
}

} // namespace grem
