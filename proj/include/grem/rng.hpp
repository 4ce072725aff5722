#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. SC'11).
//
// Every variate in the library is a pure function of (seed, stream, index),
// so tables and replica loops can be evaluated lazily, in any order, or on
// any number of threads and still produce bit-identical results.

#include <array>
#include <cmath>
#include <cstdint>

namespace grem {

namespace detail {

constexpr std::uint32_t philox_w32a = 0x9E3779B9u;
constexpr std::uint32_t philox_w32b = 0xBB67AE85u;
constexpr std::uint32_t philox_m4x32a = 0xD2511F53u;
constexpr std::uint32_t philox_m4x32b = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(philox_m4x32a) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(philox_m4x32b) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += philox_w32a;
    key[1] += philox_w32b;
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) philox_round(ctr, key);
    return ctr;
}

// Stafford mix13 finalizer; used to fold ids into derived stream labels.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Counter-based generator: 128-bit block per (stream, block_index) pair under
/// a fixed 64-bit seed acting as the Philox key.
class counter_rng {
public:
    explicit counter_rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Two independent 64-bit words per block.
    std::array<std::uint64_t, 2> block(std::uint64_t stream, std::uint64_t block_index) const {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_index),
            static_cast<std::uint32_t>(block_index >> 32),
            static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32),
        };
        const std::array<std::uint32_t, 2> key = {
            static_cast<std::uint32_t>(seed_),
            static_cast<std::uint32_t>(seed_ >> 32),
        };
        const auto out = detail::philox4x32_10(ctr, key);
        return {static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32),
                static_cast<std::uint64_t>(out[2]) | (static_cast<std::uint64_t>(out[3]) << 32)};
    }

    /// The index-th 64-bit word of a stream.
    std::uint64_t word(std::uint64_t stream, std::uint64_t index) const {
        return block(stream, index >> 1)[index & 1];
    }

private:
    std::uint64_t seed_;
};

/// Uniform in the open interval (0,1); never returns an endpoint (the +0.5
/// offset stays representable at 52 bits, so the top value is 1 - 2^-53).
inline double to_uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Derive a child stream label from a parent label and an id.
inline std::uint64_t substream(std::uint64_t parent, std::uint64_t id) {
    return detail::mix64(parent ^ detail::mix64(id + 0x9E3779B97F4A7C15ull));
}

// Stream namespaces; keeps variates of unrelated purposes non-overlapping.
namespace streams {
constexpr std::uint64_t field_table = 0x11;
constexpr std::uint64_t gibbs_draw = 0x22;
constexpr std::uint64_t cascade_branch = 0x33;
constexpr std::uint64_t mc_generic = 0x44;
constexpr std::uint64_t replica = 0x55;
constexpr std::uint64_t permutation = 0x66;
} // namespace streams

/// Seed for replica r of an experiment keyed by `seed`.
inline std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t r) {
    return counter_rng(seed).word(substream(streams::replica, 0), r);
}

/// Inverse of the standard normal CDF, Wichura's algorithm AS241 (PPND16).
/// Deterministic arithmetic only, accurate to ~1e-16 over (0,1).
inline double normal_icdf(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

/// Standard normal variate at (stream, index).
inline double normal_at(const counter_rng& rng, std::uint64_t stream, std::uint64_t index) {
    return normal_icdf(to_uniform01(rng.word(stream, index)));
}

/// Exponential(1) variate at (stream, index).
inline double exponential_at(const counter_rng& rng, std::uint64_t stream, std::uint64_t index) {
    return -std::log(to_uniform01(rng.word(stream, index)));
}

} // namespace grem
