#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "drlab/cocycle.hpp"
#include "drlab/errors.hpp"

using namespace drlab;

namespace {

FieldSpec zero_spec(int k_max = 3) {
    FieldSpec s;
    s.k_max = k_max;
    s.fill = 0;
    return s;
}

// Block sum from single-field queries only.
std::int64_t naive_f_k(CocycleEvaluator& ev, int k, int i, std::int64_t t) {
    const auto sp = scale_params(k);
    std::int64_t total = 0;
    for (std::int64_t j = 0; j < sp.p; ++j) total += ev.field(k, i, t + j) - ev.field(k, i, FieldTime{1, t + j});
    return total;
}

std::int64_t naive_sum(CocycleEvaluator& ev, int i, std::int64_t n) {
    std::int64_t total = 0;
    const auto& s = ev.spec();
    auto f = [&](std::int64_t t) {
        std::int64_t v = 0;
        for (int k = s.k_min; k <= s.k_max; ++k) v += naive_f_k(ev, k, i, t);
        return s.doubling ? 2 * v : v;
    };
    if (n >= 0)
        for (std::int64_t t = 0; t < n; ++t) total += f(t);
    else
        for (std::int64_t t = n; t < 0; ++t) total -= f(t);
    return total;
}

}  // namespace

TEST_CASE("scale parameters") {
    auto s1 = scale_params(1);
    CHECK(s1.p == 3);
    CHECK(s1.d() == 2);
    CHECK(s1.alpha == 0.5);
    auto s2 = scale_params(2);
    CHECK(s2.p == 4);
    CHECK(s2.d() == 16);
    CHECK(s2.alpha == doctest::Approx(1.0 / (4.0 * std::sqrt(2.0))).epsilon(1e-12));
    CHECK(s2.alpha == doctest::Approx(0.176777).epsilon(1e-5));
    auto s3 = scale_params(3);
    CHECK(s3.p == 9);
    CHECK(s3.d() == 512);
    CHECK(s3.alpha == doctest::Approx(1.0 / (9.0 * std::sqrt(3.0 * std::log2(3.0)))).epsilon(1e-12));
    CHECK(s3.alpha == doctest::Approx(0.05096).epsilon(1e-3));
    for (int k = 1; k <= 40; ++k) {
        auto s = scale_params(k);
        CHECK(s.alpha2 <= 0.5);
        CHECK(s.p == (k % 2 == 0 ? (std::int64_t{1} << k) : (std::int64_t{1} << k) + 1));
        CHECK(s.lag_log2 == k * k);
    }
    CHECK_THROWS_AS(scale_params(0), DomainError);
    CHECK_THROWS_AS(scale_params(-3), DomainError);
}

TEST_CASE("field values: overrides, determinism, range checks") {
    FieldSpec s;
    s.k_max = 4;
    s.seed = 11;
    s.force(1, 1, 0, 1);
    CHECK(field_value(s, 1, 1, 0) == 1);
    CocycleEvaluator a(s);
    CocycleEvaluator b(s);
    for (std::int64_t j = 500; j >= -500; --j) {
        const int v = a.field(3, 1, j);
        CHECK(v >= -1);
        CHECK(v <= 1);
    }
    for (std::int64_t j = -500; j <= 500; ++j) CHECK(a.field(3, 1, j) == b.field(3, 1, j));
    CHECK_THROWS_AS(a.field(5, 1, 0), DomainError);
    CHECK_THROWS_AS(a.field(1, 2, 0), DomainError);
    CHECK_THROWS_AS(s.force(1, 1, 0, -1), ConsistencyError);
}

TEST_CASE("marginal law at k = 2") {
    // 1000 seeds x 1000 times; alpha_2^2 = 1/32.
    std::int64_t nonzero = 0;
    std::int64_t plus = 0;
    const std::int64_t draws = 1000000;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        FieldSpec s;
        s.k_max = 2;
        s.seed = seed * 7919 + 3;
        CocycleEvaluator ev(s);
        for (std::int64_t j = 0; j < 1000; ++j) {
            const int v = ev.field(2, 1, j * 37 - 5000);
            nonzero += v != 0;
            plus += v == 1;
        }
    }
    const double q = 1.0 / 32.0;
    const double se = std::sqrt(q * (1 - q) / draws);
    CHECK(std::abs(static_cast<double>(nonzero) / draws - q) < 4 * se);
    const double se_plus = std::sqrt(q / 2 * (1 - q / 2) / draws);
    CHECK(std::abs(static_cast<double>(plus) / draws - q / 2) < 4 * se_plus);
}

TEST_CASE("block function hand expansions") {
    auto s = zero_spec(1);
    CHECK(f_k_at(s, 1, 1, 0) == 0);
    s.force(1, 1, 0, 1);
    CHECK(f_k_at(s, 1, 1, 0) == 1);
    auto s2 = zero_spec(1);
    s2.force(1, 1, 2, 1);
    CHECK(f_k_at(s2, 1, 1, 0) == 0);
    s.doubling = true;
    CHECK(f_at(s, 0)[0] == 2);

    FieldSpec two = zero_spec(2);
    two.dimension = 2;
    two.force(1, 2, 0, 1);
    two.force(2, 2, 1, 1);
    CHECK(f_at(two, 0)[0] == 0);
    CHECK(f_at(two, 0)[1] != 0);
}

TEST_CASE("fast evaluation agrees with single-field evaluation") {
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        FieldSpec s;
        s.k_max = 7;
        s.seed = seed;
        s.dimension = 2;
        s.doubling = seed % 2 == 0;
        CocycleEvaluator ev(s);
        for (int k = 1; k <= 7; ++k)
            for (std::int64_t t : {-300, -17, 0, 5, 128, 999}) {
                const auto v = ev.f_k(k, 1, t);
                CHECK(v == naive_f_k(ev, k, 1, t));
                CHECK(std::llabs(v) <= 2 * scale_params(k).p);
            }
        for (std::int64_t n : {-40, -1, 0, 1, 2, 17, 64})
            for (int i = 1; i <= 2; ++i) CHECK(ev.sum(n)[i - 1] == naive_sum(ev, i, n));
    }
}

TEST_CASE("path stepping agrees with direct sums") {
    FieldSpec s;
    s.k_max = 12;
    s.seed = 5;
    s.dimension = 2;
    s.doubling = true;
    s.force(3, 1, 4, 1);
    s.force(8, 2, FieldTime{1, -3}, -1);
    CocycleEvaluator ev(s);
    const auto path = ev.path(-700, 1300);
    CHECK(path.at(0) == Lattice{0, 0});
    for (std::int64_t t = -700; t <= 1300; t += 37) CHECK(path.at(t) == ev.sum(t));
    for (std::int64_t t = -700; t < 1300; ++t) {
        const auto diff = ev.f(t);
        CHECK(path.at(t + 1)[0] - path.at(t)[0] == diff[0]);
        CHECK(path.at(t + 1)[1] - path.at(t)[1] == diff[1]);
        CHECK(path.at(t)[0] % 2 == 0);
        CHECK(path.at(t)[1] % 2 == 0);
    }
    CHECK(partial_sums(s, 0, 0).values.size() == 1);
    CHECK_THROWS_AS(partial_sums(s, 3, 1), DomainError);
}

TEST_CASE("cocycle identity under base shifts") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        FieldSpec s;
        s.k_max = 14;
        s.seed = seed;
        s.force(2, 1, 3, 1);
        CocycleEvaluator ev(s);
        for (std::int64_t n : {-1000, -3, 0, 7, 4096})
            for (std::int64_t m : {-77, 0, 1, 12345}) {
                CocycleEvaluator shifted(shift_base(s, n));
                CHECK(ev.sum(n + m)[0] == ev.sum(n)[0] + shifted.sum(m)[0]);
            }
    }
}

TEST_CASE("shift_base re-indexes fields") {
    FieldSpec s;
    s.k_max = 3;
    s.seed = 4;
    s.force(2, 1, 5, -1);
    const auto moved = shift_base(s, 2);
    CHECK(field_value(moved, 2, 1, 3) == -1);
    for (std::int64_t j = -20; j < 20; ++j) {
        CHECK(field_value(shift_base(s, 0), 3, 1, j) == field_value(s, 3, 1, j));
        CHECK(field_value(moved, 3, 1, j) == field_value(s, 3, 1, j + 2));
        CHECK(field_value(shift_base(shift_base(s, 3), -8), 1, 1, j) == field_value(shift_base(s, -5), 1, 1, j));
    }
}

TEST_CASE("sign symmetry and zero controls") {
    FieldSpec s;
    s.k_max = 10;
    s.seed = 17;
    s.force(1, 1, 2, 1);
    FieldSpec neg = s;
    neg.negated = true;
    CocycleEvaluator a(s);
    CocycleEvaluator b(neg);
    for (std::int64_t n : {-50, 1, 2, 3, 500}) {
        CHECK(a.sum(n)[0] == -b.sum(n)[0]);
        CHECK(a.f(n)[0] == -b.f(n)[0]);
    }
    CHECK(b.field(1, 1, 2) == -1);
    const auto zero = partial_sums(zero_spec(8), -100, 100);
    for (const auto& v : zero.values) CHECK(v == Lattice{0, 0});
}

TEST_CASE("tail variance and default truncation") {
    CHECK(default_k_max(1024) == 12);
    CHECK(default_k_max(1000) == 12);
    CHECK(tail_variance_bound(1000, 12) > 0.0);
    CHECK(tail_variance_bound(1000, 20) < tail_variance_bound(1000, 12));
}

TEST_CASE("conditioning plan") {
    const auto plan = make_distinct_range_plan(2, 1, 8);
    CHECK(plan.kappa == 3);  // 2N = 4 < p_3 = 9
    CHECK(plan.K == 4);      // 2 p_4 = 32 < d_4 = 65536 (d_3 = 512 > 18 too, but K > kappa)
    FieldSpec s;
    s.k_max = 8;
    s.seed = 3;
    const auto empty = conditioned_spec(s, ConditioningPlan{});
    CHECK(empty.overrides.empty());
    const auto c = conditioned_spec(s, plan);
    CocycleEvaluator ev(c);
    const auto sp = scale_params(plan.K);
    for (std::int64_t j = 0; j < sp.p + 4; ++j) {
        CHECK(ev.field(plan.K, 1, j) == 1);
        CHECK(ev.field(plan.K, 1, FieldTime{1, j}) == 0);
    }
    for (std::int64_t j = 0; j < scale_params(6).p + 4; ++j) CHECK(ev.field(6, 1, j) == 0);
    CHECK_THROWS_AS(make_distinct_range_plan(2, 1, 3), ParametersError);

    FieldSpec clash = s;
    clash.force(plan.K, 1, 0, -1);
    CHECK_THROWS_AS(conditioned_spec(clash, plan), ConsistencyError);
}
