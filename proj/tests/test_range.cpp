#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "drlab/cocycle.hpp"
#include "drlab/errors.hpp"
#include "drlab/hash_rng.hpp"
#include "drlab/range_permutation.hpp"

using namespace drlab;

namespace {

FieldSpec doubled(std::uint64_t seed, int k_max = 24) {
    FieldSpec s;
    s.dimension = 2;
    s.doubling = true;
    s.k_max = k_max;
    s.seed = seed;
    return s;
}

const PolynomialSpec kSquare = PolynomialSpec::monomial(2);
const PolynomialSpec kCube = PolynomialSpec::monomial(3);

}  // namespace

TEST_CASE("polynomial parsing and evaluation") {
    const auto p = PolynomialSpec::parse("2n^3 - n");
    CHECK(p.degree() == 3);
    CHECK(p(3) == 51);
    CHECK(p(-2) == -14);
    CHECK(p.to_string() == "2n^3-n");
    CHECK(PolynomialSpec::parse("n^2")(7) == 49);
    CHECK(PolynomialSpec::parse("n")(5) == 5);
    CHECK_THROWS_AS(PolynomialSpec::parse("n^2+1"), DomainError);
    CHECK_THROWS_AS(PolynomialSpec::parse("n^2-3n").validate(5), DomainError);
    CHECK_NOTHROW(kCube.validate(1000));
    CHECK_THROWS_AS(PolynomialSpec::monomial(4)(std::int64_t{1} << 20), DomainError);
}

TEST_CASE("zero field has a trivial range") {
    FieldSpec z = doubled(1, 10);
    z.fill = 0;
    const RangeTable r = build_range(z, kCube, 50);
    CHECK(r.range == std::vector<Lattice>{Lattice{0, 0}});
    CHECK(r.fresh.empty());
    CHECK(curly_K(z, kSquare, kCube, 50).empty());
}

TEST_CASE("range table invariants") {
    const FieldSpec y = doubled(42);
    CocycleEvaluator ev(y);
    const RangeTable r = build_range(ev, kCube, 200);
    std::set<Lattice> prefix;
    std::vector<std::int64_t> fresh;
    for (std::int64_t m = 1; m <= 200; ++m) {
        const Lattice s = r.values[static_cast<std::size_t>(m - 1)];
        CHECK(s == ev.sum(m * m * m));
        CHECK(s[0] % 2 == 0);
        CHECK(s[1] % 2 == 0);
        if (!(s == Lattice{0, 0}) && !prefix.count(s)) fresh.push_back(m);
        prefix.insert(s);
    }
    CHECK(r.fresh == fresh);
    CHECK(r.range.size() == prefix.size());
    const auto gap = static_cast<std::int64_t>(r.range.size()) - static_cast<std::int64_t>(r.fresh.size());
    CHECK((gap == 0 || gap == 1));
    CHECK(gap == (prefix.count(Lattice{0, 0}) ? 1 : 0));

    const RangeTable shorter = build_range(ev, kCube, 120);
    std::vector<std::int64_t> head;
    for (auto n : r.fresh)
        if (n <= 120) head.push_back(n);
    CHECK(shorter.fresh == head);
}

TEST_CASE("curly K is the intersection of fresh sets") {
    const FieldSpec y = doubled(7);
    CocycleEvaluator ev(y);
    const auto r1 = build_range(ev, kSquare, 150);
    const auto r2 = build_range(ev, kCube, 150);
    const auto K = curly_K(r1, r2);
    const std::set<std::int64_t> f1(r1.fresh.begin(), r1.fresh.end());
    const std::set<std::int64_t> f2(r2.fresh.begin(), r2.fresh.end());
    for (auto n : K) CHECK((f1.count(n) && f2.count(n)));
    for (auto n : f1)
        if (f2.count(n)) CHECK(std::find(K.begin(), K.end(), n) != K.end());
    CHECK(density(K, 150) > 0.5);
}

TEST_CASE("range budget is enforced") {
    const FieldSpec y = doubled(1, 8);
    CHECK_THROWS_AS(build_range(y, PolynomialSpec::monomial(4), 2000), ResourceError);
}

TEST_CASE("permutation view") {
    const FieldSpec y = doubled(99);
    const PermutationView view(y, kSquare, kCube, 300);
    CHECK(view.pi_forward(Lattice{0, 0}) == Lattice{0, 0});
    CHECK(view.classify(Lattice{0, 0}).kind == PointClass::origin);
    CHECK(view.classify(Lattice{1, 0}).kind == PointClass::other);
    REQUIRE(!view.indices().empty());
    const std::int64_t k1 = view.indices().front();
    const auto c = view.classify(view.s2(k1));
    CHECK(c.kind == PointClass::s2_member);
    CHECK(c.index == k1);
    for (auto n : view.indices()) {
        CHECK(view.pi_forward(view.s2(n)) == view.s1(n));
        CHECK(view.pi_inverse(view.s1(n)) == view.s2(n));
    }
    // Far even points are never in a horizon-300 table.
    CHECK(view.classify(Lattice{std::int64_t{1} << 50, 0}).kind == PointClass::unresolved);
    CHECK_THROWS_AS(view.pi_forward(Lattice{std::int64_t{1} << 50, 0}), HorizonError);

    // Injectivity audit and inverse round trip over mixed queries.
    std::map<Lattice, Lattice> images;
    for (int q = 0; q < 1000; ++q) {
        Lattice v;
        const std::uint64_t h = hash_key({5, static_cast<std::uint64_t>(q)});
        if (q % 3 == 0) {
            v = view.s2(view.indices()[h % view.indices().size()]);
        } else {
            v = Lattice{static_cast<std::int64_t>(h % 2001) - 1000, 2 * static_cast<std::int64_t>((h >> 20) % 500) + 1};
        }
        const Lattice w = view.pi_forward(v);
        auto [it, inserted] = images.emplace(w, v);
        CHECK((inserted || it->second == v));
        CHECK(view.pi_inverse(w) == v);
    }
}

TEST_CASE("twist bits") {
    const FieldSpec y = doubled(5);
    const auto view = std::make_shared<PermutationView>(y, kSquare, kCube, 200);
    LazyConfig c;
    c.seed = 31;
    c.dimension = 2;
    CHECK(twist_bit(*view, c, Lattice{0, 0}) == omega_at(c, Lattice{0, 0}));
    for (auto n : view->indices()) CHECK(twist_bit(*view, c, view->s2(n)) == 1 - omega_at(c, view->s1(n)));
    CHECK(twist_bit(*view, c, Lattice{3, 4}) == omega_at(c, Lattice{3, 4}));

    int ones = 0;
    const int trials = 10000;
    for (int q = 0; q < trials; ++q) {
        const std::uint64_t h = hash_key({9, static_cast<std::uint64_t>(q)});
        Lattice v = q % 2 ? view->s2(view->indices()[h % view->indices().size()])
                          : Lattice{static_cast<std::int64_t>(h % 100001), 2 * static_cast<std::int64_t>(h >> 40) + 1};
        LazyConfig fresh = c;
        fresh.seed = h;
        ones += twist_bit(*view, fresh, v);
    }
    CHECK(std::abs(ones / static_cast<double>(trials) - 0.5) <= 4.0 * std::sqrt(0.25 / trials));

    // Twist and inverse twist through a TwistedView, against scattering the window forward.
    std::vector<Lattice> domain{Lattice{0, 0}};
    for (std::int64_t a = -15; a <= 15; ++a)
        for (std::int64_t b = -15; b <= 15; ++b)
            if ((a % 2 != 0) || (b % 2 != 0)) domain.push_back(Lattice{a, b});
    for (auto n : view->indices()) domain.push_back(view->s2(n));
    TwistedView inv{c, {Primitive::inverse_twist(view)}};
    std::map<Lattice, int> scattered;
    for (const auto& v : domain) {
        const bool comp = view->classify(v).kind == PointClass::s2_member;
        scattered[view->pi_forward(v)] = omega_at(c, v) ^ (comp ? 1 : 0);
    }
    for (const auto& [w, bit] : scattered) CHECK(inv.at(w) == bit);
    TwistedView round{c, {Primitive::twist(view), Primitive::inverse_twist(view)}};
    TwistedView round2{c, {Primitive::inverse_twist(view), Primitive::twist(view)}};
    for (const auto& v : domain) CHECK(round2.at(v) == omega_at(c, v));
    for (const auto& [w, bit] : scattered) CHECK(round.at(w) == omega_at(c, w));
}

TEST_CASE("tilde S at the origin") {
    const FieldSpec y = doubled(12);
    CocycleEvaluator ev(y);
    const PermutationView view(y, kSquare, kCube, 200);
    LazyConfig c;
    c.seed = 3;
    c.dimension = 2;
    CHECK(tilde_S_origin_bit(ev, view, c, 0) == omega_at(c, Lattice{0, 0}));
    for (auto n : view.indices()) {
        const int s_bit = tilde_S_origin_bit(ev, view, c, n * n * n);
        CHECK(s_bit == 1 - omega_at(c, view.s1(n)));
        CHECK(s_bit == 1 - tilde_T_bit(ev, c, n * n, Lattice{0, 0}));
    }
    FieldSpec z = doubled(12, 8);
    z.fill = 0;
    CocycleEvaluator zev(z);
    const PermutationView zview(z, kSquare, kCube, 20);
    for (std::int64_t n = 0; n < 20; ++n) CHECK(tilde_S_origin_bit(zev, zview, c, n) == omega_at(c, Lattice{0, 0}));
}

TEST_CASE("A_n membership and complement estimates") {
    FieldSpec z = doubled(1, 8);
    z.fill = 0;
    for (std::int64_t n = 1; n <= 10; ++n) CHECK_FALSE(a_n_membership({z}, kSquare, kCube, n));
    const FieldSpec y = doubled(3, 16);
    const auto K = curly_K(y, kSquare, kCube, 30);
    for (std::int64_t n = 1; n <= 30; ++n) {
        const bool in = std::find(K.begin(), K.end(), n) != K.end();
        CHECK(a_n_membership({z, y}, kSquare, kCube, n) == in);
    }
    const auto profile = complement_profile(y, kSquare, kCube, 40, 40);
    const auto e = estimate_A_complement(y, kSquare, kCube, 40, 3, 40);
    CHECK(e.q == doctest::Approx(profile.back().q));
    CHECK(e.power == doctest::Approx(std::pow(profile.back().q, 3)));
}

TEST_CASE("choose k") {
    std::vector<ComplementEstimate> zeros(100);
    for (std::size_t i = 0; i < zeros.size(); ++i) zeros[i].n = static_cast<std::int64_t>(i) + 1;
    const auto r0 = choose_k(zeros);
    CHECK(r0.k == 3);
    CHECK(r0.rows.front().total == 0.0);

    // q = 0.7 on n <= 5 and 0 afterwards: smallest k with 5 * 0.7^k < 0.95 is 5.
    auto steps = zeros;
    for (std::size_t i = 0; i < 5; ++i) steps[i].q = 0.7;
    const auto r1 = choose_k(steps);
    CHECK(r1.k == 5);
    CHECK(r1.rows.back().partial == doctest::Approx(5 * std::pow(0.7, 5)));

    auto ones = zeros;
    for (auto& e : ones) e.q = 1.0;
    CHECK_THROWS_AS(choose_k(ones, 0.05, 10), ParametersError);

    // Envelope tail (pi c)^k H^(1 - k/2) / (k/2 - 1).
    auto tail = zeros;
    for (auto& e : tail) e.q = 0.1 / std::sqrt(static_cast<double>(e.n));
    const auto r2 = choose_k(tail);
    const double pc = 0.1;
    CHECK(r2.envelope_c * std::numbers::pi == doctest::Approx(pc));
    CHECK(r2.rows.front().tail == doctest::Approx(std::pow(pc, 3) * std::pow(100.0, -0.5) / 0.5));
}

TEST_CASE("Z lower bound by hand") {
    // k = 1 telescopes to four free atoms (d_1 = 2 < p_1 = 3); other scales give 2 p_k.
    CHECK(z_lower_bound(1) == 0);
    CHECK(z_lower_bound(2) == -(4 + 8));
    CHECK(z_lower_bound(8) == -(4 + 8 + 18 + 32));
}

TEST_CASE("scale event masses") {
    // Lifted k = 6 with N = 1: 66 atoms equal to 1 and 66 lagged atoms equal to 0.
    const auto s = scale_params(6);
    const double expect = 66.0 * (std::log(s.alpha2 / 2.0) + std::log(1.0 - s.alpha2));
    CHECK(log_scale_event_mass(6, 1, true) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(log_scale_event_mass(6, 1, false) == doctest::Approx(132.0 * std::log(1.0 - s.alpha2)).epsilon(1e-12));
    // k = 1, N = 1: windows [0, 5) and [2, 7) overlap in three places.
    CHECK(log_scale_event_mass(1, 1, false) == doctest::Approx(7.0 * std::log(0.75)));
    for (int k = 10; k < 100; ++k) CHECK(log_scale_event_mass(k, 8, false) >= -2.0 / (std::ldexp(1.0, k)));
}

TEST_CASE("distinct range certification") {
    FieldSpec spec = doubled(500, 10);
    const auto run = certify_distinct(spec, 2, 1, 40);
    CHECK(run.kappa == 3);
    CHECK(run.K == 4);
    CHECK(run.M == -12);
    CHECK(run.passed());
    REQUIRE(run.example_path.size() == 5);
    for (std::size_t i = 0; i + 1 < run.example_path.size(); ++i)
        CHECK(run.example_path[i] < run.example_path[i + 1]);

    const auto run1 = certify_distinct(doubled(8, 8), 1, 1, 30);
    CHECK(run1.passed());

    // Without conditioning a degenerate field never climbs.
    FieldSpec z = doubled(1, 8);
    z.fill = 0;
    const auto path = partial_sums(z, 0, 4);
    CHECK_FALSE(path.at(0) < path.at(1));

    CHECK_THROWS_AS(certify_distinct(doubled(1, 3), 2, 1, 5), ParametersError);
}
