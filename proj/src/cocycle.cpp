#include "drlab/cocycle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "absl/container/flat_hash_map.h"
#include "absl/container/flat_hash_set.h"

#include "drlab/discrete_sampling.hpp"
#include "drlab/errors.hpp"
#include "drlab/hash_rng.hpp"

namespace drlab {

namespace {

constexpr int kTopLevel = 24;
constexpr std::int64_t kTopSize = std::int64_t{1} << kTopLevel;
constexpr std::int64_t kSparseLimit = 4096;
constexpr int kLeafLevel = 6;

std::int64_t floor_shift(std::int64_t x, int level) { return x >> level; }

}  // namespace

double ScaleParams::d_real() const { return std::ldexp(1.0, lag_log2); }

ScaleParams scale_params(int k) {
    if (k <= 0) throw DomainError("scale index must be positive, got " + std::to_string(k));
    if (k > 61) throw DomainError("scale index too large: " + std::to_string(k));
    ScaleParams sp;
    sp.k = k;
    sp.p = (std::int64_t{1} << k) + (k % 2 == 1 ? 1 : 0);
    sp.lag_log2 = k * k;
    if (k == 1) {
        sp.alpha = 0.5;
    } else {
        const double kk = static_cast<double>(k);
        sp.alpha = 1.0 / (static_cast<double>(sp.p) * std::sqrt(kk * std::log2(kk)));
    }
    sp.alpha2 = sp.alpha * sp.alpha;
    if (k == 2) sp.alpha2 = 1.0 / 32.0;  // exact: 1 / (16 * 2 * log2 2)
    return sp;
}

FieldTime normalize_time(const ScaleParams& sp, FieldTime t) {
    if (sp.k <= kMaxNormalizedScale) return FieldTime{0, t.lag * sp.d() + t.offset};
    return t;
}

FieldKey FieldSpec::absolute_key(int k, int i, FieldTime t) const {
    const auto sp = scale_params(k);
    t.offset += time_shift;
    return FieldKey{k, i, normalize_time(sp, t)};
}

void FieldSpec::force(int k, int i, FieldTime t, int value) {
    if (value < -1 || value > 1) throw DomainError("forced field value must lie in {-1,0,1}");
    // Stored values are pre-negation so that a negated spec negates forced values too.
    const int stored = negated ? -value : value;
    const auto key = absolute_key(k, i, t);
    auto [it, inserted] = overrides.emplace(key, stored);
    if (!inserted && it->second != stored) {
        throw ConsistencyError("conflicting forced values at scale " + std::to_string(k) +
                               ", coordinate " + std::to_string(i) + ", time " +
                               std::to_string(t.lag) + "*d+" + std::to_string(t.offset));
    }
}

void FieldSpec::validate() const {
    if (dimension != 1 && dimension != 2) throw DomainError("dimension must be 1 or 2");
    if (k_min < 1 || k_max < k_min || k_max > kMaxScale)
        throw DomainError("scale range must satisfy 1 <= k_min <= k_max <= 40");
    if (fill && (*fill < -1 || *fill > 1)) throw DomainError("fill value must lie in {-1,0,1}");
    for (const auto& [key, v] : overrides) {
        if (v < -1 || v > 1) throw DomainError("forced field value must lie in {-1,0,1}");
        if (key.i < 1 || key.i > 2) throw DomainError("forced coordinate index must be 1 or 2");
        if (key.time.lag < 0 || key.time.lag > 1) throw DomainError("forced field lag must be 0 or 1");
    }
}

int default_k_max(std::int64_t n_max) {
    if (n_max < 1) n_max = 1;
    int bits = 0;
    while ((std::int64_t{1} << bits) < n_max) ++bits;
    return std::min(bits + 2, kMaxScale);
}

double tail_variance_bound(std::int64_t n, int k_max) {
    const double nn = static_cast<double>(n);
    double total = 0.0;
    for (int k = std::max(k_max + 1, 2); k <= 200; ++k) {
        const double kk = k;
        const double p = std::ldexp(1.0, k) + (k % 2 == 1 ? 1.0 : 0.0);
        const double term = 2.0 * nn * nn / (p * kk * std::log2(kk));
        total += term;
        if (term < 1e-18 * total) break;
    }
    return total;
}

// ---------------------------------------------------------------------------

struct CocycleEvaluator::Impl {
    struct Node {
        std::int64_t nnz = 0;
        std::int64_t plus = 0;
    };

    struct NodeKey {
        int family;
        int level;
        std::int64_t index;
        bool operator==(const NodeKey&) const = default;
    };
    struct NodeKeyHash {
        std::size_t operator()(const NodeKey& key) const {
            return static_cast<std::size_t>(
                hash_combine(hash_combine(static_cast<std::uint64_t>(key.family),
                                          static_cast<std::uint64_t>(key.level)),
                             static_cast<std::uint64_t>(key.index)));
        }
    };

    // Top blocks with few nonzeros are stored as sorted position lists. Given
    // its counts, a block's nonzero set is a uniform subset and its +1 set a
    // uniform subset of that, so distinct uniform draws realize the same law.
    struct SparseBlock {
        std::vector<std::int64_t> pos;
        std::vector<int> val;
        std::vector<std::int64_t> prefix;  // prefix[m] = sum of the first m values
    };

    // Leaves of a 64-position node: given its counts, a uniform subset of
    // positions is nonzero and a uniform subset of those is +1.
    struct LeafMask {
        std::uint64_t nonzero = 0;
        std::uint64_t plus = 0;
    };

    struct Family {
        std::uint64_t key = 0;
        double alpha2 = 0.0;
        // Forced-value corrections (forced - unforced), sorted by offset.
        std::vector<std::pair<std::int64_t, int>> deltas;
        std::vector<std::int64_t> delta_prefix;  // delta_prefix[m] = sum of first m deltas
        // Cumulative unforced totals of whole top blocks: blocks [0, m) and [-m, 0).
        std::vector<std::int64_t> blocks_up{0};
        std::vector<std::int64_t> blocks_down{0};
        std::int64_t last_top = std::numeric_limits<std::int64_t>::min();
        const SparseBlock* last_block = nullptr;
    };

    const FieldSpec& spec;
    std::vector<ScaleParams> params;  // indexed by k
    std::vector<int> family_slots;  // (k, i, lag) -> index into families
    std::vector<Family> families;
    absl::flat_hash_map<NodeKey, Node, NodeKeyHash> nodes;
    std::unordered_map<NodeKey, std::optional<SparseBlock>, NodeKeyHash> sparse_blocks;
    absl::flat_hash_map<NodeKey, LeafMask, NodeKeyHash> leaf_masks;
    std::vector<std::optional<std::int64_t>> origin_terms;  // G(0) per (k, i)
    int sign = 1;

    explicit Impl(const FieldSpec& s) : spec(s) {
        spec.validate();
        sign = spec.negated ? -1 : 1;
        origin_terms.resize(static_cast<std::size_t>(2 * spec.k_max + 2));
        family_slots.assign(static_cast<std::size_t>(4 * spec.k_max + 4), -1);
        params.resize(static_cast<std::size_t>(spec.k_max) + 1);
        for (int k = spec.k_min; k <= spec.k_max; ++k) params[static_cast<std::size_t>(k)] = scale_params(k);
        for (const auto& [key, value] : spec.overrides) {
            if (key.k < spec.k_min || key.k > spec.k_max || key.i > spec.dimension) continue;
            const int fam = family_id(key.k, key.i, key.time.lag);
            const int base = unforced_value(fam, key.time.offset);
            if (value != base) families[static_cast<std::size_t>(fam)].deltas.emplace_back(key.time.offset, value - base);
        }
        for (auto& fam : families) {
            std::sort(fam.deltas.begin(), fam.deltas.end());
            fam.delta_prefix.assign(1, 0);
            for (const auto& d : fam.deltas) fam.delta_prefix.push_back(fam.delta_prefix.back() + d.second);
        }
    }

    const ScaleParams& sp(int k) const {
        if (k < spec.k_min || k > spec.k_max)
            throw DomainError("scale " + std::to_string(k) + " outside [" + std::to_string(spec.k_min) +
                              ", " + std::to_string(spec.k_max) + "]");
        return params[static_cast<std::size_t>(k)];
    }

    void check_coordinate(int i) const {
        if (i < 1 || i > spec.dimension)
            throw DomainError("coordinate index " + std::to_string(i) + " outside the field dimension");
    }

    int family_id(int k, int i, std::int64_t lag) {
        if (lag < 0 || lag > 1) throw DomainError("field lag must be 0 or 1");
        const auto slot = static_cast<std::size_t>((k * 2 + (i - 1)) * 2 + lag);
        if (family_slots[slot] >= 0) return family_slots[slot];
        Family fam;
        fam.key = hash_key({spec.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(lag)});
        fam.alpha2 = params[static_cast<std::size_t>(k)].alpha2;
        fam.delta_prefix.assign(1, 0);
        families.push_back(std::move(fam));
        const int id = static_cast<int>(families.size() - 1);
        family_slots[slot] = id;
        return id;
    }

    // Resolves a spec-frame (lag, offset) to (family, absolute offset).
    std::pair<int, std::int64_t> locate(int k, int i, std::int64_t lag, std::int64_t offset) {
        const auto& s = sp(k);
        check_coordinate(i);
        const std::int64_t abs_offset = offset + spec.time_shift;
        if (abs_offset > kMaxTime || abs_offset < -kMaxTime)
            throw DomainError("field time outside the supported range |t| <= 2^40");
        const FieldTime t = normalize_time(s, FieldTime{lag, abs_offset});
        return {family_id(k, i, t.lag), t.offset};
    }

    double node_uniform(const Family& fam, int level, std::int64_t index, std::uint64_t purpose) const {
        return to_unit(hash_key({fam.key, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(index),
                                 purpose}));
    }

    Node node(int fam_id, int level, std::int64_t index) {
        const NodeKey key{fam_id, level, index};
        if (auto it = nodes.find(key); it != nodes.end()) return it->second;
        const Family& fam = families[static_cast<std::size_t>(fam_id)];
        Node result;
        if (level == kTopLevel) {
            result.nnz = sample_binomial(std::int64_t{1} << kTopLevel, fam.alpha2, node_uniform(fam, level, index, 0));
            result.plus = sample_binomial(result.nnz, 0.5, node_uniform(fam, level, index, 1));
            nodes.emplace(key, result);
            return result;
        }
        const Node parent = node(fam_id, level + 1, floor_shift(index, 1));
        Node left;
        Node right;
        if (parent.nnz > 0) {
            const std::int64_t parent_index = floor_shift(index, 1);
            left.nnz = sample_hypergeometric(std::int64_t{2} << level, parent.nnz, std::int64_t{1} << level,
                                             node_uniform(fam, level + 1, parent_index, 2));
            left.plus = sample_hypergeometric(parent.nnz, parent.plus, left.nnz,
                                              node_uniform(fam, level + 1, parent_index, 3));
            right.nnz = parent.nnz - left.nnz;
            right.plus = parent.plus - left.plus;
        }
        const std::int64_t left_index = floor_shift(index, 1) * 2;
        nodes.emplace(NodeKey{fam_id, level, left_index}, left);
        nodes.emplace(NodeKey{fam_id, level, left_index + 1}, right);
        return index == left_index ? left : right;
    }

    const SparseBlock* sparse_block(int fam_id, std::int64_t top) {
        Family& fam_state = families[static_cast<std::size_t>(fam_id)];
        if (fam_state.last_top == top) return fam_state.last_block;
        const SparseBlock* found = lookup_sparse_block(fam_id, top);
        fam_state.last_top = top;
        fam_state.last_block = found;
        return found;
    }

    const SparseBlock* lookup_sparse_block(int fam_id, std::int64_t top) {
        const NodeKey key{fam_id, kTopLevel, top};
        if (auto it = sparse_blocks.find(key); it != sparse_blocks.end()) return it->second ? &*it->second : nullptr;
        const Node root = node(fam_id, kTopLevel, top);
        if (root.nnz > kSparseLimit) {
            sparse_blocks.emplace(key, std::nullopt);
            return nullptr;
        }
        const Family& fam = families[static_cast<std::size_t>(fam_id)];
        KeyedStream stream(hash_key({fam.key, static_cast<std::uint64_t>(top), 0x5b1d}));
        // Offsets packed as (offset << 1) | plus; offsets are distinct, so sorting
        // the packed words sorts by position.
        std::vector<std::uint64_t> drawn;
        drawn.reserve(static_cast<std::size_t>(root.nnz));
        absl::flat_hash_set<std::uint64_t> seen;
        seen.reserve(static_cast<std::size_t>(root.nnz));
        while (static_cast<std::int64_t>(drawn.size()) < root.nnz) {
            const std::uint64_t offset = stream.next_bits() >> (64 - kTopLevel);
            if (!seen.insert(offset).second) continue;
            drawn.push_back(offset << 1 | (static_cast<std::int64_t>(drawn.size()) < root.plus ? 1u : 0u));
        }
        std::sort(drawn.begin(), drawn.end());
        const std::int64_t base = top * (std::int64_t{1} << kTopLevel);
        SparseBlock block;
        block.pos.reserve(drawn.size());
        block.val.reserve(drawn.size());
        block.prefix.reserve(drawn.size() + 1);
        block.prefix.assign(1, 0);
        for (const std::uint64_t w : drawn) {
            const int v = (w & 1u) ? 1 : -1;
            block.pos.push_back(base + static_cast<std::int64_t>(w >> 1));
            block.val.push_back(v);
            block.prefix.push_back(block.prefix.back() + v);
        }
        auto [it, _] = sparse_blocks.emplace(key, std::move(block));
        return &*it->second;
    }

    std::int64_t block_range_sum(int fam_id, std::int64_t top, std::int64_t a, std::int64_t b) {
        if (const SparseBlock* block = sparse_block(fam_id, top)) {
            const auto lo = std::lower_bound(block->pos.begin(), block->pos.end(), a) - block->pos.begin();
            const auto hi = std::lower_bound(block->pos.begin(), block->pos.end(), b) - block->pos.begin();
            return block->prefix[static_cast<std::size_t>(hi)] - block->prefix[static_cast<std::size_t>(lo)];
        }
        return tree_range_sum(fam_id, kTopLevel, top, a, b);
    }

    template <class Visit>
    void block_enumerate(int fam_id, std::int64_t top, std::int64_t a, std::int64_t b, Visit& visit) {
        if (const SparseBlock* block = sparse_block(fam_id, top)) {
            auto it = std::lower_bound(block->pos.begin(), block->pos.end(), a);
            for (; it != block->pos.end() && *it < b; ++it)
                visit(*it, block->val[static_cast<std::size_t>(it - block->pos.begin())]);
            return;
        }
        tree_enumerate(fam_id, kTopLevel, top, a, b, visit);
    }

    // Unforced sum over top blocks [0, q) (negated sum over [q, 0) when q < 0).
    std::int64_t whole_blocks(int fam_id, std::int64_t q) {
        auto& up = families[static_cast<std::size_t>(fam_id)].blocks_up;
        auto& down = families[static_cast<std::size_t>(fam_id)].blocks_down;
        auto total = [&](std::int64_t m) {
            const Node n = node(fam_id, kTopLevel, m);
            return 2 * n.plus - n.nnz;
        };
        if (q >= 0) {
            while (static_cast<std::int64_t>(up.size()) <= q) {
                const std::int64_t m = static_cast<std::int64_t>(up.size()) - 1;
                const std::int64_t add = total(m);
                up.push_back(up.back() + add);
            }
            return up[static_cast<std::size_t>(q)];
        }
        while (static_cast<std::int64_t>(down.size()) <= -q) {
            const std::int64_t m = -static_cast<std::int64_t>(down.size());
            const std::int64_t add = total(m);
            down.push_back(down.back() + add);
        }
        return -down[static_cast<std::size_t>(-q)];
    }

    static std::uint64_t bit_window(std::int64_t from, std::int64_t to) {
        const std::uint64_t upper = to >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << to) - 1;
        const std::uint64_t lower = (std::uint64_t{1} << from) - 1;
        return upper & ~lower;
    }

    LeafMask leaf_mask(int fam_id, std::int64_t index, const Node& n) {
        const NodeKey key{fam_id, kLeafLevel, index};
        if (auto it = leaf_masks.find(key); it != leaf_masks.end()) return it->second;
        const Family& fam = families[static_cast<std::size_t>(fam_id)];
        KeyedStream stream(hash_key({fam.key, static_cast<std::uint64_t>(index), 0x1eaf}));
        std::array<int, 64> slots;
        for (int j = 0; j < 64; ++j) slots[static_cast<std::size_t>(j)] = j;
        LeafMask m;
        for (std::int64_t j = 0; j < n.nnz; ++j) {
            const auto span = static_cast<unsigned __int128>(64 - j);
            const auto pick = j + static_cast<std::int64_t>((span * stream.next_bits()) >> 64);
            std::swap(slots[static_cast<std::size_t>(j)], slots[static_cast<std::size_t>(pick)]);
            const std::uint64_t bit = std::uint64_t{1} << slots[static_cast<std::size_t>(j)];
            m.nonzero |= bit;
            if (j < n.plus) m.plus |= bit;
        }
        leaf_masks.emplace(key, m);
        return m;
    }

    int tree_value(int fam_id, std::int64_t pos) {
        return static_cast<int>(block_range_sum(fam_id, floor_shift(pos, kTopLevel), pos, pos + 1));
    }

    int unforced_value(int fam_id, std::int64_t pos) {
        if (spec.fill) return *spec.fill;
        return tree_value(fam_id, pos);
    }

    std::int64_t tree_range_sum(int fam_id, int level, std::int64_t index, std::int64_t a, std::int64_t b) {
        const std::int64_t lo = index * (std::int64_t{1} << level);
        const std::int64_t hi = lo + (std::int64_t{1} << level);
        if (b <= lo || hi <= a) return 0;
        const Node n = node(fam_id, level, index);
        if (n.nnz == 0) return 0;
        if (a <= lo && hi <= b) return 2 * n.plus - n.nnz;
        if (level == kLeafLevel) {
            const LeafMask m = leaf_mask(fam_id, index, n);
            const std::uint64_t window = bit_window(std::max(a, lo) - lo, std::min(b, hi) - lo);
            return std::popcount(m.plus & window) - std::popcount(m.nonzero & ~m.plus & window);
        }
        return tree_range_sum(fam_id, level - 1, 2 * index, a, b) +
               tree_range_sum(fam_id, level - 1, 2 * index + 1, a, b);
    }

    template <class Visit>
    void tree_enumerate(int fam_id, int level, std::int64_t index, std::int64_t a, std::int64_t b, Visit& visit) {
        const std::int64_t lo = index * (std::int64_t{1} << level);
        const std::int64_t hi = lo + (std::int64_t{1} << level);
        if (b <= lo || hi <= a) return;
        const Node n = node(fam_id, level, index);
        if (n.nnz == 0) return;
        if (level == kLeafLevel) {
            const LeafMask m = leaf_mask(fam_id, index, n);
            std::uint64_t bits = m.nonzero & bit_window(std::max(a, lo) - lo, std::min(b, hi) - lo);
            while (bits != 0) {
                const int offset = std::countr_zero(bits);
                visit(lo + offset, ((m.plus >> offset) & 1U) != 0 ? 1 : -1);
                bits &= bits - 1;
            }
            return;
        }
        tree_enumerate(fam_id, level - 1, 2 * index, a, b, visit);
        tree_enumerate(fam_id, level - 1, 2 * index + 1, a, b, visit);
    }

    template <class Visit>
    void enumerate_unforced(int fam_id, std::int64_t a, std::int64_t b, Visit& visit) {
        for (std::int64_t top = floor_shift(a, kTopLevel); top <= floor_shift(b - 1, kTopLevel); ++top)
            block_enumerate(fam_id, top, a, b, visit);
    }

    // Sum of effective (signed, forced) values over absolute offsets [a, b).
    std::int64_t range_sum_abs(int fam_id, std::int64_t a, std::int64_t b) {
        if (a >= b) return 0;
        std::int64_t total = 0;
        if (spec.fill) {
            total = static_cast<std::int64_t>(*spec.fill) * (b - a);
        } else {
            const std::int64_t first = floor_shift(a, kTopLevel);
            const std::int64_t last = floor_shift(b - 1, kTopLevel);
            if (first == last) {
                total = block_range_sum(fam_id, first, a, b);
            } else {
                // Aligned ends are folded into the whole-block totals.
                const std::int64_t whole_from = a == first * kTopSize ? first : first + 1;
                const std::int64_t whole_to = b == (last + 1) * kTopSize ? last + 1 : last;
                total = whole_blocks(fam_id, whole_to) - whole_blocks(fam_id, whole_from);
                if (whole_from != first) total += block_range_sum(fam_id, first, a, (first + 1) * kTopSize);
                if (whole_to != last + 1) total += block_range_sum(fam_id, last, last * kTopSize, b);
            }
        }
        const Family& fam = families[static_cast<std::size_t>(fam_id)];
        auto cmp = [](const std::pair<std::int64_t, int>& d, std::int64_t v) { return d.first < v; };
        const auto lo = std::lower_bound(fam.deltas.begin(), fam.deltas.end(), a, cmp) - fam.deltas.begin();
        const auto hi = std::lower_bound(fam.deltas.begin(), fam.deltas.end(), b, cmp) - fam.deltas.begin();
        total += fam.delta_prefix[static_cast<std::size_t>(hi)] - fam.delta_prefix[static_cast<std::size_t>(lo)];
        return sign * total;
    }

    // Sum of X(u) * (c - u) over absolute offsets u in [a, b).
    std::int64_t weighted_sum_abs(int fam_id, std::int64_t a, std::int64_t b, std::int64_t c) {
        if (a >= b) return 0;
        std::int64_t total = 0;
        if (spec.fill) {
            // sum over u in [a,b) of (c - u)
            const std::int64_t count = b - a;
            const std::int64_t first = c - a;
            const std::int64_t last = c - (b - 1);
            const std::int64_t series = (count % 2 == 0) ? (count / 2) * (first + last) : count * ((first + last) / 2);
            total = static_cast<std::int64_t>(*spec.fill) * series;
        } else {
            auto visit = [&](std::int64_t pos, int v) { total += v * (c - pos); };
            enumerate_unforced(fam_id, a, b, visit);
        }
        const Family& fam = families[static_cast<std::size_t>(fam_id)];
        auto cmp = [](const std::pair<std::int64_t, int>& d, std::int64_t v) { return d.first < v; };
        for (auto it = std::lower_bound(fam.deltas.begin(), fam.deltas.end(), a, cmp);
             it != fam.deltas.end() && it->first < b; ++it)
            total += it->second * (c - it->first);
        return sign * total;
    }

    std::int64_t range_sum(int k, int i, std::int64_t lag, std::int64_t a, std::int64_t b) {
        if (a >= b) return 0;
        const auto [fam, start] = locate(k, i, lag, a);
        locate(k, i, lag, b);  // bounds check on the far end
        return range_sum_abs(fam, start, start + (b - a));
    }

    // Bilateral prefix: P(t) - P(s) = sum over [s, t).
    std::int64_t prefix(int k, int i, std::int64_t lag, std::int64_t t) {
        return t >= 0 ? range_sum(k, i, lag, 0, t) : -range_sum(k, i, lag, t, 0);
    }

    // sum_{j=0}^{p-1} P(n + j) up to a constant independent of n.
    std::int64_t block_prefix(int k, int i, std::int64_t lag, std::int64_t n) {
        const auto& s = sp(k);
        const auto [fam, start] = locate(k, i, lag, n);
        locate(k, i, lag, n + s.p);
        const std::int64_t window = weighted_sum_abs(fam, start, start + s.p - 1, start + s.p - 1);
        return s.p * prefix(k, i, lag, n) + window;
    }

    std::int64_t f_k(int k, int i, std::int64_t t) {
        const auto& s = sp(k);
        return range_sum(k, i, 0, t, t + s.p) - range_sum(k, i, 1, t, t + s.p);
    }

    std::int64_t sum_k(int k, int i, std::int64_t n) {
        if (n == 0) return 0;
        const std::int64_t g_n = block_prefix(k, i, 0, n) - block_prefix(k, i, 1, n);
        auto& g_0 = origin_terms[static_cast<std::size_t>(2 * k + i - 1)];
        if (!g_0) g_0 = block_prefix(k, i, 0, 0) - block_prefix(k, i, 1, 0);
        return g_n - *g_0;
    }

    // Effective values at spec-frame times [a, b) of one lag family.
    std::vector<int> materialize(int k, int i, std::int64_t lag, std::int64_t a, std::int64_t b) {
        std::vector<int> out(static_cast<std::size_t>(std::max<std::int64_t>(b - a, 0)), 0);
        if (a >= b) return out;
        const auto [fam, start] = locate(k, i, lag, a);
        locate(k, i, lag, b);
        if (spec.fill) {
            std::fill(out.begin(), out.end(), *spec.fill);
        } else {
            auto visit = [&](std::int64_t pos, int v) { out[static_cast<std::size_t>(pos - start)] = v; };
            enumerate_unforced(fam, start, start + (b - a), visit);
        }
        const Family& family = families[static_cast<std::size_t>(fam)];
        auto cmp = [](const std::pair<std::int64_t, int>& d, std::int64_t v) { return d.first < v; };
        for (auto it = std::lower_bound(family.deltas.begin(), family.deltas.end(), start, cmp);
             it != family.deltas.end() && it->first < start + (b - a); ++it)
            out[static_cast<std::size_t>(it->first - start)] += it->second;
        if (sign < 0)
            for (auto& v : out) v = -v;
        return out;
    }
};

CocycleEvaluator::CocycleEvaluator(FieldSpec spec) : spec_(std::move(spec)), impl_(std::make_unique<Impl>(spec_)) {}
CocycleEvaluator::~CocycleEvaluator() = default;
CocycleEvaluator::CocycleEvaluator(CocycleEvaluator&& other) noexcept
    : spec_(std::move(other.spec_)), impl_(std::make_unique<Impl>(spec_)) {}
CocycleEvaluator& CocycleEvaluator::operator=(CocycleEvaluator&& other) noexcept {
    spec_ = std::move(other.spec_);
    impl_ = std::make_unique<Impl>(spec_);
    return *this;
}

std::size_t CocycleEvaluator::cache_size() const { return impl_->nodes.size(); }

int CocycleEvaluator::field(int k, int i, FieldTime t) {
    const auto [fam, pos] = impl_->locate(k, i, t.lag, t.offset);
    return static_cast<int>(impl_->range_sum_abs(fam, pos, pos + 1));
}

std::int64_t CocycleEvaluator::f_k(int k, int i, std::int64_t t) { return impl_->f_k(k, i, t); }

Lattice CocycleEvaluator::f(std::int64_t t) {
    Lattice out{0, 0};
    for (int i = 1; i <= spec_.dimension; ++i)
        for (int k = spec_.k_min; k <= spec_.k_max; ++k) out[static_cast<std::size_t>(i - 1)] += impl_->f_k(k, i, t);
    if (spec_.doubling)
        for (auto& v : out) v *= 2;
    return out;
}

std::int64_t CocycleEvaluator::sum_k(int k, int i, std::int64_t n) { return impl_->sum_k(k, i, n); }

Lattice CocycleEvaluator::sum(std::int64_t n) {
    Lattice out{0, 0};
    if (n == 0) return out;
    for (int i = 1; i <= spec_.dimension; ++i)
        for (int k = spec_.k_min; k <= spec_.k_max; ++k) out[static_cast<std::size_t>(i - 1)] += impl_->sum_k(k, i, n);
    if (spec_.doubling)
        for (auto& v : out) v *= 2;
    return out;
}

PathSample CocycleEvaluator::path(std::int64_t first, std::int64_t last) {
    if (first > last) throw DomainError("path window must satisfy first <= last");
    if (first > 0 || last < 0) throw DomainError("path window must contain time 0");
    PathSample out;
    out.spec = spec_;
    out.first = first;
    out.last = last;
    const std::size_t len = static_cast<std::size_t>(last - first + 1);
    out.values.assign(len, Lattice{0, 0});
    if (first == last) return out;
    const std::size_t steps = len - 1;  // f(t) for t in [first, last)
    std::vector<std::int64_t> increments(steps);
    for (int i = 1; i <= spec_.dimension; ++i) {
        std::fill(increments.begin(), increments.end(), 0);
        for (int k = spec_.k_min; k <= spec_.k_max; ++k) {
            const auto& s = impl_->sp(k);
            // Fields entering (t + p) and leaving (t) the moving block, for both lags.
            const auto near0 = impl_->materialize(k, i, 0, first, last);
            const auto far0 = impl_->materialize(k, i, 0, first + s.p, last + s.p);
            const auto near1 = impl_->materialize(k, i, 1, first, last);
            const auto far1 = impl_->materialize(k, i, 1, first + s.p, last + s.p);
            std::int64_t fk = impl_->f_k(k, i, first);
            for (std::size_t step = 0; step < steps; ++step) {
                increments[step] += fk;
                fk += far0[step] - near0[step] - far1[step] + near1[step];
            }
        }
        const std::size_t zero = static_cast<std::size_t>(-first);
        const std::size_t c = static_cast<std::size_t>(i - 1);
        for (std::size_t t = zero; t < steps; ++t) out.values[t + 1][c] = out.values[t][c] + increments[t];
        for (std::size_t t = zero; t-- > 0;) out.values[t][c] = out.values[t + 1][c] - increments[t];
    }
    if (spec_.doubling)
        for (auto& v : out.values)
            for (auto& x : v) x *= 2;
    return out;
}

// ---------------------------------------------------------------------------

int field_value(const FieldSpec& spec, int k, int i, FieldTime t) {
    CocycleEvaluator ev(spec);
    return ev.field(k, i, t);
}

int field_value(const FieldSpec& spec, int k, int i, std::int64_t j) {
    return field_value(spec, k, i, FieldTime{0, j});
}

std::int64_t f_k_at(const FieldSpec& spec, int k, int i, std::int64_t t) {
    CocycleEvaluator ev(spec);
    return ev.f_k(k, i, t);
}

Lattice f_at(const FieldSpec& spec, std::int64_t t) {
    CocycleEvaluator ev(spec);
    return ev.f(t);
}

PathSample partial_sums(const FieldSpec& spec, std::int64_t first, std::int64_t last) {
    CocycleEvaluator ev(spec);
    return ev.path(first, last);
}

FieldSpec shift_base(const FieldSpec& spec, std::int64_t n) {
    FieldSpec out = spec;
    out.time_shift += n;
    return out;
}

ConditioningPlan make_distinct_range_plan(std::int64_t N, std::int64_t C, int k_max, int coordinate) {
    if (N < 1) throw ParametersError("conditioning horizon N must be >= 1");
    if (C < 1) throw ParametersError("conditioning level C must be >= 1");
    ConditioningPlan plan;
    plan.N = N;
    plan.C = C;
    plan.coordinate = coordinate;
    int kappa = 1;
    while (2 * N >= scale_params(kappa).p) ++kappa;
    int big_k = kappa + 1;
    // 2 p_K < d_K; d_K overflows int64 only when it is certainly large enough.
    while (true) {
        const auto s = scale_params(big_k);
        if (!s.lag_fits() || 2 * s.p < s.d()) break;
        ++big_k;
    }
    plan.kappa = kappa;
    plan.K = big_k;
    if (k_max < big_k)
        throw ParametersError("k_max = " + std::to_string(k_max) + " does not reach K(N) = " + std::to_string(big_k));
    plan.k_last = k_max;
    FieldSpec scratch;
    scratch.k_max = k_max;
    scratch.dimension = 2;
    for (int k = kappa; k <= k_max; ++k) {
        const auto s = scale_params(k);
        const bool lifted = k >= big_k && k < big_k + C;
        const std::int64_t span = s.p + 2 * N;
        if (lifted && (span >= 2 * s.p || (s.lag_fits() && 2 * s.p > s.d())))
            throw ParametersError("conditioning collision at scale " + std::to_string(k));
        for (std::int64_t j = 0; j < span; ++j) {
            scratch.force(k, coordinate, FieldTime{0, j}, lifted ? 1 : 0);
            scratch.force(k, coordinate, FieldTime{1, j}, 0);
        }
    }
    plan.assignments = std::move(scratch.overrides);
    return plan;
}

FieldSpec conditioned_spec(const FieldSpec& spec, const ConditioningPlan& plan) {
    FieldSpec out = spec;
    for (const auto& [key, value] : plan.assignments) {
        if (key.k < out.k_min || key.k > out.k_max) continue;
        // Plan keys are normalized spec-frame times; re-express them in this frame.
        out.force(key.k, key.i, key.time, value);
    }
    return out;
}

}  // namespace drlab
