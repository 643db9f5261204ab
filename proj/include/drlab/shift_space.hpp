#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "drlab/cocycle.hpp"

namespace drlab {

/// A point of {0,1}^(Z^d) evaluated on demand: bits are a keyed hash of the
/// coordinate unless overridden. 1-D configurations use the first coordinate
/// and keep the second at 0.
struct LazyConfig {
    std::uint64_t seed = 0;
    int dimension = 1;
    std::map<Lattice, int> overrides;
    std::int64_t bound = std::int64_t{1} << 60;

    void set(Lattice u, int bit);
    void set(std::int64_t u, int bit) { set(Lattice{u, 0}, bit); }
};

int omega_at(const LazyConfig& config, Lattice u);
inline int omega_at(const LazyConfig& config, std::int64_t u) { return omega_at(config, Lattice{u, 0}); }

/// phi(omega)(u): omega(0) at the origin, the complement elsewhere (1-D).
int phi_at(const LazyConfig& config, std::int64_t u);

/// Where a transformed configuration reads its bit at a query coordinate.
struct Pullback {
    Lattice source{0, 0};
    bool complement = false;
};

/// A coordinate permutation with per-coordinate complement, as used by a twist
/// (g omega)(v) = omega(pi(v)) xor c(v). Implementations may refuse queries
/// they cannot decide by throwing HorizonError.
class CoordinateTwist {
public:
    virtual ~CoordinateTwist() = default;
    /// (pi(v), c(v)).
    virtual Pullback forward(Lattice v) const = 0;
    /// Pullback of the inverse twist: (pi^{-1}(w), c(pi^{-1}(w))).
    virtual Pullback inverse(Lattice w) const = 0;
};

struct Primitive {
    enum class Kind { shift, flip, twist, inverse_twist };
    Kind kind = Kind::shift;
    Lattice v{0, 0};
    std::shared_ptr<const CoordinateTwist> map;

    static Primitive shift(Lattice by) { return {Kind::shift, by, nullptr}; }
    static Primitive shift(std::int64_t by) { return {Kind::shift, Lattice{by, 0}, nullptr}; }
    static Primitive flip() { return {Kind::flip, Lattice{0, 0}, nullptr}; }
    static Primitive twist(std::shared_ptr<const CoordinateTwist> m) {
        return {Kind::twist, Lattice{0, 0}, std::move(m)};
    }
    static Primitive inverse_twist(std::shared_ptr<const CoordinateTwist> m) {
        return {Kind::inverse_twist, Lattice{0, 0}, std::move(m)};
    }

    /// One pullback step. Shift reads omega(u + v); flip complements off the origin.
    Pullback pull(Lattice u) const;
};

/// g_m( ... g_1(base)) for pipeline = {g_1, ..., g_m}; bits are read by pulling
/// the query coordinate back from g_m to g_1.
struct TwistedView {
    LazyConfig base;
    std::vector<Primitive> pipeline;

    TwistedView& then(Primitive p) {
        pipeline.push_back(std::move(p));
        return *this;
    }
    int at(Lattice u) const;
    int at(std::int64_t u) const { return at(Lattice{u, 0}); }
    /// Coordinate in the base read by a query, with the accumulated complement.
    Pullback trace(Lattice u) const;
};

/// omega part of T~^n(y, omega) at u: omega(u + S_n(f)(y)).
int tilde_T_bit(CocycleEvaluator& y, const LazyConfig& config, std::int64_t n, Lattice u);
int tilde_T_bit(const FieldSpec& y, const LazyConfig& config, std::int64_t n, Lattice u);

/// omega part of S~^n(y, omega) at u for the 1-D flip conjugate phi^{-1} sigma phi.
int tilde_S_bit_1d(CocycleEvaluator& y, const LazyConfig& config, std::int64_t n, std::int64_t u);
int tilde_S_bit_1d(const FieldSpec& y, const LazyConfig& config, std::int64_t n, std::int64_t u);

/// The view phi^{-1} o sigma_s o phi of a 1-D configuration.
TwistedView flip_conjugate_shift(const LazyConfig& config, std::int64_t s);

}  // namespace drlab
