#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drlab/cocycle.hpp"
#include "drlab/shift_space.hpp"

namespace drlab {

/// p(n) = sum_i coefficients[i] n^i with coefficients[0] = 0.
struct PolynomialSpec {
    std::vector<std::int64_t> coefficients{0, 1};

    static PolynomialSpec monomial(int degree);
    /// Parses "n^3", "2n^2+n", "n^3-n" style expressions.
    static PolynomialSpec parse(const std::string& text);

    int degree() const;
    int leading_sign() const;
    /// Throws DomainError on overflow.
    std::int64_t operator()(std::int64_t n) const;
    std::string to_string() const;
    /// Throws DomainError unless p(0) = 0 and p is injective on {1, ..., N}.
    void validate(std::int64_t N) const;
};

struct RangeTable {
    PolynomialSpec p;
    std::int64_t N = 0;
    /// values[m - 1] = S_{p(m)}(f)(y).
    std::vector<Lattice> values;
    /// Distinct visited values in first-visit order.
    std::vector<Lattice> range;
    /// K^{(p)}(y) cap [1, N], increasing.
    std::vector<std::int64_t> fresh;

    double range_density() const { return N ? static_cast<double>(range.size()) / static_cast<double>(N) : 0.0; }
};

/// Largest polynomial time a range may query.
inline constexpr std::int64_t kRangeTimeBudget = kMaxTime;

RangeTable build_range(CocycleEvaluator& y, const PolynomialSpec& p, std::int64_t N);
RangeTable build_range(const FieldSpec& y, const PolynomialSpec& p, std::int64_t N);

/// K^{(p1)}(y) cap K^{(p2)}(y) from two tables of the same field.
std::vector<std::int64_t> curly_K(const RangeTable& r1, const RangeTable& r2);
std::vector<std::int64_t> curly_K(const FieldSpec& y, const PolynomialSpec& p1, const PolynomialSpec& p2,
                                  std::int64_t N);

double density(const std::vector<std::int64_t>& indices, std::int64_t N);

enum class PointClass { origin, s2_member, other, unresolved };

struct Classification {
    PointClass kind = PointClass::unresolved;
    std::int64_t index = 0;  // n for s2_member
};

/// The partial bijection pi_y = pi_{p1,y} o pi_{p2,y}^{-1} of Z^2, known up to
/// horizon N.
///
/// L(j, y) is enumerated by interleaving: odd positions run through the points
/// with an odd coordinate in outward spiral order, even positions run through
/// the remaining points of 2Z^2 \ ({0} u S(j, y)) in spiral order. Both
/// enumerations share their odd positions, so pi_y fixes every point off 2Z^2,
/// and only even points outside the tables are left undecided.
class PermutationView : public CoordinateTwist {
public:
    PermutationView(const RangeTable& r1, const RangeTable& r2);
    PermutationView(const FieldSpec& y, const PolynomialSpec& p1, const PolynomialSpec& p2, std::int64_t N);

    std::int64_t horizon() const { return N_; }
    const std::vector<std::int64_t>& indices() const { return K_; }
    /// S_{p_j(n)} for n in K_y.
    Lattice s1(std::int64_t n) const;
    Lattice s2(std::int64_t n) const;

    Classification classify(Lattice v) const;
    /// Same classification against {0} u S(1, y).
    Classification classify_image(Lattice w) const;

    Lattice pi_forward(Lattice v) const;
    Lattice pi_inverse(Lattice w) const;

    Pullback forward(Lattice v) const override;
    Pullback inverse(Lattice w) const override;

private:
    std::int64_t N_ = 0;
    std::vector<std::int64_t> K_;
    std::map<std::int64_t, std::pair<Lattice, Lattice>> images_;  // n -> (S_{p1(n)}, S_{p2(n)})
    std::map<Lattice, std::int64_t> by_s1_;
    std::map<Lattice, std::int64_t> by_s2_;
};

/// (Psi_{pi_y} omega)(v).
int twist_bit(const PermutationView& view, const LazyConfig& config, Lattice v);

/// omega part of S~^n(y, omega) at (0,0): (Psi_{pi_y} omega)(S_n(f)(y)).
int tilde_S_origin_bit(CocycleEvaluator& y, const PermutationView& view, const LazyConfig& config,
                       std::int64_t n);

/// True iff n lies in K_t for some coordinate field t.
bool a_n_membership(const std::vector<FieldSpec>& ybar, const PolynomialSpec& p1, const PolynomialSpec& p2,
                    std::int64_t n);

struct ComplementEstimate {
    std::int64_t n = 0;
    double q = 0.0;   // estimate of m(Y \ A_n(1))
    double se = 0.0;
    double power = 0.0;     // q^k
    double power_se = 0.0;  // delta-method error of q^k
};

/// MC estimate of m(Y \ A_n(1)) for n = 1..H over `samples` fields built from
/// `base` with seeds base.seed + s.
std::vector<ComplementEstimate> complement_profile(const FieldSpec& base, const PolynomialSpec& p1,
                                                   const PolynomialSpec& p2, std::int64_t H,
                                                   std::int64_t samples);

/// (m(Y \ A_n(1)))^k with propagated error, for one n.
ComplementEstimate estimate_A_complement(const FieldSpec& base, const PolynomialSpec& p1,
                                         const PolynomialSpec& p2, std::int64_t n, int k,
                                         std::int64_t samples);

/// Raises q and se of every entry to the k-th power.
std::vector<ComplementEstimate> with_power(std::vector<ComplementEstimate> profile, int k);

struct ChooseKReport {
    int k = 0;
    bool success = false;
    double margin = 0.05;
    double envelope_c = 0.0;  // fitted q(n) <= pi c / sqrt(n)
    std::int64_t fit_from = 64;
    /// Per candidate k: partial sum, tail, total.
    struct Row {
        int k = 0;
        double partial = 0.0;
        double tail = 0.0;
        double total = 0.0;
    };
    std::vector<Row> rows;
    std::vector<ComplementEstimate> terms;  // q(n) and q(n)^k for the chosen (or last tried) k
};

/// Smallest k >= 3 with sum_{n <= H} q(n)^k + tail < 1 - margin, where the tail
/// integrates the envelope (pi c / sqrt(n))^k beyond H. Throws ParametersError
/// with the partial sums when no k <= k_limit qualifies.
ChooseKReport choose_k(const std::vector<ComplementEstimate>& profile, double margin = 0.05, int k_limit = 64,
                       std::int64_t fit_from = 64);

/// Lower bound of Z(n) over all fields: minus the sum over scales with p_k <= 2N
/// of the l1 norm of the one-step coefficient profile.
std::int64_t z_lower_bound(std::int64_t N);

struct ScaleCertificate {
    int k = 0;
    bool lifted = false;
    double log_mass = 0.0;   // ln m(D_k)
    double log_bound = 0.0;  // ln of exp(-2/p_k)
    bool checked = false;    // bound asserted for this scale
    bool holds = true;
};

struct CertificationRun {
    std::int64_t N = 0;
    std::int64_t C = 0;
    std::int64_t M = 0;
    int kappa = 0;
    int K = 0;
    int k_max = 0;
    std::int64_t samples = 0;
    std::int64_t y_violations = 0;
    std::int64_t goal_violations = 0;
    std::int64_t distinct_violations = 0;
    /// ln m(cap_{k <= k_max} D_k).
    double log_event_mass = 0.0;
    std::vector<ScaleCertificate> scales;
    std::vector<Lattice> example_path;  // S_0..S_{2N} of the first sample
    bool bound_holds = true;

    bool passed() const {
        return y_violations == 0 && goal_violations == 0 && distinct_violations == 0 && bound_holds;
    }
};

/// Conditions a doubled 2-D spec on D = cap D_k for coordinate 1, samples it,
/// and checks Y(n) > C, the lexicographic chain 0 < S_1 < ... < S_2N and the
/// count of distinct centred values. Scale bounds are checked for
/// k in [K + C, K + C + extra_scales), beyond k_max in log space.
CertificationRun certify_distinct(const FieldSpec& spec, std::int64_t N, std::int64_t C, std::int64_t samples,
                                  int extra_scales = 32);

/// ln m(D_k) for a lifted (forced to 1) or zeroed scale, from closed forms.
double log_scale_event_mass(int k, std::int64_t N, bool lifted);

}  // namespace drlab
