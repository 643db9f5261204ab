#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace drlab {

/// Stateless counter-based randomness. Every draw is a pure function of a
/// key built from (seed, tags...), so evaluation order never matters.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x1d8e4e27c47d124fULL;
    for (auto p : parts) h = hash_combine(h, p);
    return h;
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small sequential generator seeded from a key; used where a draw needs
/// several uniforms (binomial, Box-Muller).
class KeyedStream {
public:
    explicit KeyedStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_bits() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    double uniform() { return to_unit(next_bits()); }

    /// Standard normal via Box-Muller; deterministic across platforms.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace drlab
