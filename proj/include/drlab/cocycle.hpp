#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace drlab {

/// Parameters of scale k: block length p_k, lag d_k = 2^(k^2), amplitude alpha_k.
struct ScaleParams {
    int k = 1;
    std::int64_t p = 3;
    int lag_log2 = 1;  // d_k = 2^lag_log2
    double alpha = 0.5;
    double alpha2 = 0.25;

    bool lag_fits() const { return lag_log2 <= 62; }
    /// d_k; only meaningful when lag_fits().
    std::int64_t d() const { return std::int64_t{1} << lag_log2; }
    /// d_k as a floating value (exact power of two for every k used here).
    double d_real() const;
};

ScaleParams scale_params(int k);

/// Largest |time| addressable by the field. Lags d_k above this bound are kept
/// symbolic, so t and d_k + t never alias.
inline constexpr std::int64_t kMaxTime = std::int64_t{1} << 40;
/// Largest scale index a FieldSpec may include.
inline constexpr int kMaxScale = 40;
/// Scales up to this index store d_k + t as a plain integer time.
inline constexpr int kMaxNormalizedScale = 6;

/// A field time of the form lag * d_k + offset with lag in {0, 1}.
struct FieldTime {
    std::int64_t lag = 0;
    std::int64_t offset = 0;
    auto operator<=>(const FieldTime&) const = default;
};

struct FieldKey {
    int k = 1;
    int i = 1;
    FieldTime time;  // absolute, normalized
    auto operator<=>(const FieldKey&) const = default;
};

/// Canonical absolute representation of lag * d_k + offset.
FieldTime normalize_time(const ScaleParams& sp, FieldTime t);

/// Seed-addressed description of the i.i.d. fields bar f_k^{(i)} o T^j and of
/// the cocycle built from them.
struct FieldSpec {
    int dimension = 1;
    int k_min = 1;
    int k_max = 16;
    bool doubling = false;
    std::uint64_t seed = 0;
    /// Forced values keyed by absolute (unshifted) coordinates.
    std::map<FieldKey, int> overrides;
    /// When set, every non-forced field takes this value (degenerate controls).
    std::optional<int> fill;
    /// Time origin of this spec relative to the underlying field (Q^n shifts).
    std::int64_t time_shift = 0;
    /// Sign wrapper: negates every field value, forced ones included.
    bool negated = false;

    /// Forces the field at spec-frame time t. Throws ConsistencyError on a
    /// conflicting assignment.
    void force(int k, int i, FieldTime t, int value);
    void force(int k, int i, std::int64_t t, int value) { force(k, i, FieldTime{0, t}, value); }

    /// Absolute key of (k, i, t) in this spec's frame.
    FieldKey absolute_key(int k, int i, FieldTime t) const;

    void validate() const;
};

/// Default truncation ceil(log2 n_max) + 2.
int default_k_max(std::int64_t n_max);

/// Analytic bound on the variance of S_n carried by the scales above k_max.
double tail_variance_bound(std::int64_t n, int k_max);

using Lattice = std::array<std::int64_t, 2>;

struct PathSample {
    FieldSpec spec;
    std::int64_t first = 0;
    std::int64_t last = 0;
    std::vector<Lattice> values;  // values[t - first] = S_t

    const Lattice& at(std::int64_t t) const { return values.at(static_cast<std::size_t>(t - first)); }
};

/// Evaluates fields, block functions and partial sums of one FieldSpec.
///
/// Each (scale, coordinate, lag) family of fields is realized as a dyadic tree
/// of nonzero counts: top blocks of 2^24 times draw Binomial counts, children
/// split their parent's counts hypergeometrically. Every position is then an
/// independent three-valued atom with P(+-1) = alpha^2/2, while range sums cost
/// O(depth) instead of O(length). Instances cache tree nodes and are therefore
/// not thread-safe; they are cheap to construct per worker.
class CocycleEvaluator {
public:
    explicit CocycleEvaluator(FieldSpec spec);
    ~CocycleEvaluator();
    CocycleEvaluator(CocycleEvaluator&&) noexcept;
    CocycleEvaluator& operator=(CocycleEvaluator&&) noexcept;

    const FieldSpec& spec() const { return spec_; }

    int field(int k, int i, FieldTime t);
    int field(int k, int i, std::int64_t t) { return field(k, i, FieldTime{0, t}); }

    /// f_k^{(i)} o T^t (before doubling).
    std::int64_t f_k(int k, int i, std::int64_t t);
    /// f o T^t, doubled when FieldSpec::doubling is set.
    Lattice f(std::int64_t t);

    /// Bilateral S_n(f), evaluated directly in O(k_max * depth).
    Lattice sum(std::int64_t n);
    /// S_n(f_k^{(i)}) (before doubling).
    std::int64_t sum_k(int k, int i, std::int64_t n);

    /// S_t for t in [first, last]; the window must contain 0. Uses dense field
    /// windows and incremental stepping.
    PathSample path(std::int64_t first, std::int64_t last);

    /// Number of cached tree nodes (diagnostics).
    std::size_t cache_size() const;

private:
    struct Impl;
    FieldSpec spec_;
    std::unique_ptr<Impl> impl_;
};

/// Spec-level conveniences. Each builds a fresh evaluator; use CocycleEvaluator
/// directly for repeated queries.
int field_value(const FieldSpec& spec, int k, int i, FieldTime t);
int field_value(const FieldSpec& spec, int k, int i, std::int64_t j);
std::int64_t f_k_at(const FieldSpec& spec, int k, int i, std::int64_t t);
Lattice f_at(const FieldSpec& spec, std::int64_t t);
PathSample partial_sums(const FieldSpec& spec, std::int64_t first, std::int64_t last);

/// Q^n realized as a time shift of the field.
FieldSpec shift_base(const FieldSpec& spec, std::int64_t n);

/// Forced assignments realizing the event D = cap_k D_k that certifies
/// Y(n) > C for 0 <= n < 2N.
struct ConditioningPlan {
    std::int64_t N = 1;
    std::int64_t C = 1;
    int kappa = 1;   // smallest k with 2N < p_k
    int K = 2;       // smallest k > kappa with 2 p_k < d_k
    int k_last = 1;  // largest conditioned scale (<= k_max)
    int coordinate = 1;
    std::map<FieldKey, int> assignments;  // spec-frame (unshifted) keys
};

/// Builds the plan for scales kappa..k_max on coordinate `coordinate`.
/// Throws ParametersError when k_max < K(N) or a forced block would collide
/// with its lagged copy.
ConditioningPlan make_distinct_range_plan(std::int64_t N, std::int64_t C, int k_max,
                                          int coordinate = 1);

/// Merges the plan into the FieldSpec overrides. Throws ConsistencyError on a
/// conflicting assignment.
FieldSpec conditioned_spec(const FieldSpec& spec, const ConditioningPlan& plan);

}  // namespace drlab
