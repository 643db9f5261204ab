#include "drlab/shift_space.hpp"

#include <string>

#include "drlab/errors.hpp"
#include "drlab/hash_rng.hpp"

namespace drlab {
namespace {

constexpr std::uint64_t kOmegaTag = 0x0e6a5b17ULL;

void check_bounds(const LazyConfig& config, Lattice u) {
    const std::int64_t b = config.bound;
    if (u[0] < -b || u[0] > b || u[1] < -b || u[1] > b) {
        throw DomainError("coordinate (" + std::to_string(u[0]) + ", " + std::to_string(u[1]) +
                          ") outside the configured bound");
    }
    if (config.dimension == 1 && u[1] != 0) throw DomainError("1-D configuration queried off-axis");
}

}  // namespace

void LazyConfig::set(Lattice u, int bit) {
    if (bit != 0 && bit != 1) throw DomainError("configuration bits are 0 or 1");
    check_bounds(*this, u);
    overrides[u] = bit;
}

int omega_at(const LazyConfig& config, Lattice u) {
    check_bounds(config, u);
    if (!config.overrides.empty()) {
        auto it = config.overrides.find(u);
        if (it != config.overrides.end()) return it->second;
    }
    const std::uint64_t h = hash_key({config.seed, kOmegaTag, static_cast<std::uint64_t>(u[0]),
                                      static_cast<std::uint64_t>(u[1])});
    return static_cast<int>(h >> 63);
}

int phi_at(const LazyConfig& config, std::int64_t u) {
    if (config.dimension != 1) throw DomainError("phi is defined on 1-D configurations");
    const int bit = omega_at(config, u);
    return u == 0 ? bit : 1 - bit;
}

Pullback Primitive::pull(Lattice u) const {
    switch (kind) {
        case Kind::shift:
            return {Lattice{u[0] + v[0], u[1] + v[1]}, false};
        case Kind::flip:
            return {u, !(u[0] == 0 && u[1] == 0)};
        case Kind::twist:
            return map->forward(u);
        case Kind::inverse_twist:
            return map->inverse(u);
    }
    return {u, false};
}

Pullback TwistedView::trace(Lattice u) const {
    Pullback acc{u, false};
    for (auto it = pipeline.rbegin(); it != pipeline.rend(); ++it) {
        const Pullback step = it->pull(acc.source);
        acc.source = step.source;
        acc.complement = acc.complement != step.complement;
    }
    return acc;
}

int TwistedView::at(Lattice u) const {
    const Pullback p = trace(u);
    const int bit = omega_at(base, p.source);
    return p.complement ? 1 - bit : bit;
}

int tilde_T_bit(CocycleEvaluator& y, const LazyConfig& config, std::int64_t n, Lattice u) {
    const Lattice s = y.sum(n);
    return omega_at(config, Lattice{u[0] + s[0], u[1] + s[1]});
}

int tilde_T_bit(const FieldSpec& y, const LazyConfig& config, std::int64_t n, Lattice u) {
    CocycleEvaluator ev(y);
    return tilde_T_bit(ev, config, n, u);
}

TwistedView flip_conjugate_shift(const LazyConfig& config, std::int64_t s) {
    TwistedView view{config, {}};
    view.then(Primitive::flip()).then(Primitive::shift(s)).then(Primitive::flip());
    return view;
}

int tilde_S_bit_1d(CocycleEvaluator& y, const LazyConfig& config, std::int64_t n, std::int64_t u) {
    if (config.dimension != 1 || y.spec().dimension != 1) {
        throw DomainError("tilde_S_bit_1d needs 1-D field and configuration");
    }
    return flip_conjugate_shift(config, y.sum(n)[0]).at(u);
}

int tilde_S_bit_1d(const FieldSpec& y, const LazyConfig& config, std::int64_t n, std::int64_t u) {
    CocycleEvaluator ev(y);
    return tilde_S_bit_1d(ev, config, n, u);
}

}  // namespace drlab
