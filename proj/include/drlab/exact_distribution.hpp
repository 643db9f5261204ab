#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "drlab/cocycle.hpp"

namespace drlab {

/// Arithmetic run of coefficients first, first + step, ..., each appearing
/// `mult` times among the independent atoms.
struct CoefficientRun {
    std::int64_t first = 0;
    std::int64_t step = 0;
    std::int64_t count = 0;
    std::int64_t mult = 1;
};

/// S_n(f_k) = sum_m c_m X_m over independent three-valued atoms.
struct CoefficientProfile {
    std::int64_t n = 0;
    int k = 1;
    std::int64_t p = 0;
    int lag_log2 = 0;
    bool overlapping = false;
    /// Overlapping mode: the signed coefficients c_m = w(m) - w(m - d_k).
    std::vector<std::int64_t> coefficients;
    /// Both modes: every atom coefficient as arithmetic runs.
    std::vector<CoefficientRun> runs;

    std::int64_t max_abs() const;
    std::int64_t atom_count() const;
    /// sum over atoms of c^2.
    double sum_squares() const;
};

/// w(m) = #{(j, l) : 0 <= j < n, 0 <= l < p, j + l = m}, m in [0, n + p - 2].
std::vector<std::int64_t> weight_profile(std::int64_t n, std::int64_t p);

CoefficientProfile coefficient_profile(int k, std::int64_t n);

struct ExactOptions {
    double prune_epsilon = 1e-16;
    double alias_target = 1e-12;
    std::int64_t max_grid = std::int64_t{1} << 24;
};

/// Law of an integer random variable on offset + stride * {0, 1, ...}.
struct IntegerPmf {
    std::int64_t offset = 0;
    std::int64_t stride = 1;
    std::vector<double> mass;
    /// Mass dropped by pruning (bounded by the atom count times epsilon).
    double pruned_mass = 0.0;
    /// Bound on the mass folded in from outside the Fourier grid.
    double alias_bound = 0.0;

    double at(std::int64_t j) const;
    std::int64_t min_support() const { return offset; }
    std::int64_t max_support() const {
        return offset + stride * (static_cast<std::int64_t>(mass.size()) - 1);
    }
    double total() const;
    double mean() const;
    double variance() const;
    /// P(lo <= S <= hi).
    double interval(std::int64_t lo, std::int64_t hi) const;
    /// Uniform error bound carried by every probability derived from this pmf.
    double error_bound() const { return pruned_mass + alias_bound; }
};

/// 2-D laws with independent coordinates, stored in product form.
struct Pmf2D {
    IntegerPmf first;
    IntegerPmf second;
    double at(std::int64_t j1, std::int64_t j2) const { return first.at(j1) * second.at(j2); }
    double error_bound() const { return first.error_bound() + second.error_bound(); }
};

IntegerPmf point_mass(std::int64_t at = 0);

/// Law of S_n(f_k^{(i)}) for amplitude alpha.
IntegerPmf scale_pmf(int k, std::int64_t n, double alpha, const ExactOptions& options = {});

/// Law of one coordinate of S_n(f) for an unconditioned spec (doubling applied).
IntegerPmf walk_pmf(const FieldSpec& spec, std::int64_t n, const ExactOptions& options = {});

/// Both coordinates of a 2-D spec.
Pmf2D walk_pmf_2d(const FieldSpec& spec, std::int64_t n, const ExactOptions& options = {});

/// Variance of one coordinate of S_n(f), from the coefficient profiles.
double walk_variance(const FieldSpec& spec, std::int64_t n);

/// Exact-rational laws; only scales with rational alpha_k^2 (k <= 2).
using Rational = boost::multiprecision::cpp_rational;

struct RationalPmf {
    std::int64_t offset = 0;
    std::int64_t stride = 1;
    std::vector<Rational> mass;

    Rational at(std::int64_t j) const;
    Rational total() const;
};

Rational rational_alpha2(int k);
RationalPmf rational_walk_pmf(const FieldSpec& spec, std::int64_t n);

struct LcltReport {
    std::int64_t n = 0;
    int dimension = 1;
    double sigma2 = 0.0;
    double scaling = 0.0;
    double deviation = 0.0;
    double peak = 0.0;
    std::int64_t argmax = 0;  // first coordinate of the worst point
    std::int64_t window = 0;  // 2-D: half-width examined per coordinate
};

/// The LCLT variance 2 (ln 2)^2.
double lclt_sigma2();

LcltReport lclt_deviation(const IntegerPmf& pmf, std::int64_t n, double sigma2);
/// 2-D: the supremum runs over a central window of at most 4096 points per axis.
LcltReport lclt_deviation(const Pmf2D& pmf, std::int64_t n, double sigma2);

/// P(|S|_inf <= M).
double box_probability(const IntegerPmf& pmf, std::int64_t M);
double box_probability(const Pmf2D& pmf, std::int64_t M);

}  // namespace drlab
