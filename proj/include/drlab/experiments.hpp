#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "drlab/cocycle.hpp"
#include "drlab/exact_distribution.hpp"
#include "drlab/gaussian_lab.hpp"
#include "drlab/range_permutation.hpp"

namespace drlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportVersion = "drlab-report/1";

/// One row of a decay table (CSV columns n, value, se, envelope).
struct DecayRow {
    std::int64_t n = 0;
    double value = 0.0;
    double se = 0.0;
    double envelope = 0.0;
};

std::string decay_csv(const std::vector<DecayRow>& rows);

// ---------------------------------------------------------------------------
// Triple returns in the 1-D flip system, three independent copies.

struct BCReport {
    std::int64_t H = 0;
    std::vector<double> p0;            // p_n(0), n = 1..H
    std::vector<double> a;             // (p_n(0) / 2)^3
    std::vector<double> partial_sums;  // prefix sums of a
    std::int64_t fit_from = 16;
    double envelope_c = 0.0;       // 1.5 x max of p_n(0) sqrt(n) over [fit_from, H/2]
    double max_scaled_a = 0.0;     // max of a_n n^(3/2) over (H/2, H]
    double scaled_bound = 0.0;     // (c/2)^3
    double decay_slope = 0.0;      // log-log slope of a_n over [fit_from, H]
    bool bounded = false;          // max_scaled_a <= scaled_bound and decay_slope < -1
    double tail = 0.0;             // (c/2)^3 * 2 / sqrt(H)
    double total = 0.0;
    double max_error_bound = 0.0;  // largest pmf error bound used
    // Surrogate extraction.
    std::int64_t points_sampled = 0;
    std::int64_t N = 0;
    std::int64_t M = 0;
    double measure_B = 0.125;
    double measure_D = 0.0;  // horizon surrogate, with SE
    double measure_D_se = 0.0;
    double measure_A = 0.0;
    double measure_A_se = 0.0;
    bool extracted = false;
    std::string verdict;
};

struct TripleProbeReport {
    std::int64_t horizon = 0;
    std::int64_t points = 0;
    /// Per n: points of A in A, T-returns to A, S-returns to A (here all
    /// counted over the sampled points of A).
    std::vector<std::int64_t> in_A;
    std::vector<std::int64_t> t_return;
    std::vector<std::int64_t> s_return;
    std::int64_t violations = 0;
    std::int64_t identity_failures = 0;  // S-bit != 1 - T-bit at the witness
    double acceptance = 0.0;             // estimate of m(C-bar surrogate)
    double acceptance_se = 0.0;
    std::int64_t tried = 0;
};

struct Section2Config {
    FieldSpec spec;  // 1-D
    std::int64_t H = 2000;
    std::int64_t points = 1000;  // points required in A
    std::int64_t pilot = 2000;   // points used to fix N and M
    std::int64_t max_points = 40000;
    std::int64_t fit_from = 16;
};

struct Section2Result {
    BCReport bc;
    TripleProbeReport probe;
};

/// a_n from exact pmfs and the envelope fit only (no sampling).
BCReport section2_series(const FieldSpec& spec, std::int64_t H, std::int64_t fit_from = 16);

Section2Result exp_section2(const Section2Config& config);

// ---------------------------------------------------------------------------
// Polynomial times in the 2-D twisted system.

struct Section3Config {
    FieldSpec spec;  // 2-D doubled template; coordinate t uses seed hash(seed, sample, t)
    PolynomialSpec p1 = PolynomialSpec::monomial(2);
    PolynomialSpec p2 = PolynomialSpec::monomial(3);
    int k = 3;
    std::int64_t H = 500;
    std::int64_t samples = 1000;
    std::int64_t max_tries = 20000;
};

TripleProbeReport exp_section3(const Section3Config& config);

// ---------------------------------------------------------------------------
// Gaussian systems.

struct GaussianConfig {
    SpectralModel model;
    int k = 2;
    std::int64_t c = 1;
    std::int64_t d = 1;
    std::int64_t H = 64;              // probe horizon for triple probabilities
    std::int64_t samples = 100000;    // per-n triple probability samples
    std::int64_t points = 2000;       // extraction points in B
    std::uint64_t seed = 1;
    double budget = 1e6;              // the summability total must stay below this
};

struct GaussianReport {
    std::vector<TripleEstimate> triples;
    std::vector<double> powers;  // estimate^k
    SummabilityReport summability;
    std::int64_t schedule_c = 1;
    std::int64_t schedule_d = 1;
    std::vector<std::int64_t> schedule;  // probe index per n
    // Extraction over k-tuples of (X, Y) paths.
    std::int64_t points = 0;
    std::int64_t N = 0;
    double measure_D = 0.0;
    double measure_D_se = 0.0;
    std::int64_t violations = 0;
    std::int64_t bound_failures = 0;
    bool extracted = false;
    bool passed = false;
};

GaussianReport exp_gaussian(const GaussianConfig& config);

// ---------------------------------------------------------------------------
// Mixing probe.

/// {bar f_k^{(i)} o T^time = value}.
struct FieldCylinder {
    int k = 1;
    int i = 1;
    std::int64_t time = 0;
    int value = 0;
};

/// {omega(u) = bit}.
struct BitCylinder {
    Lattice u{0, 0};
    int bit = 1;
};

struct MixingConfig {
    FieldSpec spec;  // 2-D
    std::int64_t M = 5;
    std::int64_t H = 4096;
    std::int64_t n_min = 64;
    std::int64_t samples = 100000;
    FieldCylinder A1, A2;
    BitCylinder B1, B2;
};

struct MixingReport {
    std::vector<std::int64_t> grid;
    std::vector<double> box;        // exact m(|S_n|_inf <= 2M)
    std::vector<double> box_error;  // pmf error bounds
    bool box_nonincreasing = false;
    bool box_decreased = false;  // value at the last n strictly below the first
    double marginal_1 = 0.0;     // exact m(A1 x B1)
    double marginal_2 = 0.0;
    double joint = 0.0;  // MC m(A1 x B1 cap T^-n (A2 x B2)) at n = H
    double joint_se = 0.0;
    double correlation = 0.0;  // |joint - marginal_1 marginal_2|
    double part_I = 0.0;       // joint on the complement of E_n minus product share
    double part_II = 0.0;      // joint restricted to E_n
    double part_II_se = 0.0;
    double bound = 0.0;        // 4 SE + m(E_n)
    bool correlation_ok = false;
    bool passed = false;
};

/// Exact probability that a field takes `value` under `spec`, overrides ignored.
double field_cylinder_probability(const FieldSpec& spec, int k, int value);

MixingReport mixing_probe(const MixingConfig& config);

// ---------------------------------------------------------------------------
// JSON views.

Json to_json(const FieldSpec& spec);
Json to_json(const BCReport& r);
Json to_json(const TripleProbeReport& r);
Json to_json(const GaussianReport& r);
Json to_json(const MixingReport& r);
Json to_json(const CertificationRun& r);
Json to_json(const ChooseKReport& r);
Json to_json(const LcltReport& r);
Json to_json(const IntegerPmf& pmf);
std::string pmf_csv(const IntegerPmf& pmf);

}  // namespace drlab
