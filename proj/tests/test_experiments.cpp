#include <cmath>

#include "doctest.h"
#include "drlab/errors.hpp"
#include "drlab/experiments.hpp"

using namespace drlab;

namespace {

FieldSpec one_d(std::uint64_t seed, int k_max = 12) {
    FieldSpec s;
    s.seed = seed;
    s.k_max = k_max;
    return s;
}

FieldSpec two_d(std::uint64_t seed, int k_max) {
    FieldSpec s;
    s.dimension = 2;
    s.doubling = true;
    s.seed = seed;
    s.k_max = k_max;
    return s;
}

}  // namespace

TEST_CASE("series a_n from exact laws") {
    const auto zero = [] {
        FieldSpec s = one_d(1);
        s.fill = 0;
        return section2_series(s, 64);
    }();
    for (double a : zero.a) CHECK(a == 0.125);
    CHECK_FALSE(zero.bounded);

    // k_max = 2 makes every law rational; a_n = (p_n(0) / 2)^3 exactly.
    FieldSpec small = one_d(1, 2);
    const auto rep = section2_series(small, 32, 4);
    for (std::int64_t n = 1; n <= 4; ++n) {
        const double p0 = rational_walk_pmf(small, n).at(0).convert_to<double>();
        CHECK(rep.a[static_cast<std::size_t>(n - 1)] == doctest::Approx(std::pow(p0 / 2, 3)).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < rep.partial_sums.size(); ++i) CHECK(rep.partial_sums[i] >= rep.partial_sums[i - 1]);
    CHECK(rep.total == doctest::Approx(rep.partial_sums.back() + rep.tail));
    CHECK_THROWS_AS(section2_series(small, 8), DomainError);
    CHECK_THROWS_AS(section2_series(two_d(1, 4), 32), DomainError);
}

TEST_CASE("triple-return extraction") {
    Section2Config c;
    c.spec = one_d(3, default_k_max(768));
    c.H = 256;
    c.points = 60;
    c.pilot = 60;
    c.max_points = 2000;
    const auto r = exp_section2(c);
    CHECK(r.bc.N <= r.bc.H);
    CHECK(r.bc.M >= 0);
    CHECK(r.bc.M <= r.bc.N);
    CHECK(r.probe.points == 60);
    CHECK(r.probe.violations == 0);
    CHECK(r.bc.measure_A <= r.bc.measure_D + 1e-15);
    CHECK(r.bc.measure_D <= r.bc.measure_B);
    CHECK(r.bc.extracted);

    Section2Config z = c;
    z.spec.fill = 0;
    z.points = 10;
    z.pilot = 10;
    const auto rz = exp_section2(z);
    CHECK(rz.bc.N == z.H);
    CHECK(rz.probe.violations == 10 * z.H);
    CHECK_FALSE(rz.bc.extracted);

    Section2Config starved = c;
    starved.points = 50;
    starved.max_points = 5;
    const auto rs = exp_section2(starved);
    CHECK_FALSE(rs.bc.extracted);
    CHECK(rs.bc.verdict.find("under-sampled") == 0);
}

TEST_CASE("twisted-system probe") {
    Section3Config c;
    c.spec = two_d(2, default_k_max(27000));
    c.H = 30;
    c.samples = 6;
    const auto r = exp_section3(c);
    CHECK(r.points == 6);
    CHECK(r.violations == 0);
    CHECK(r.identity_failures == 0);
    CHECK(r.acceptance > 0.0);
    for (std::size_t n = 0; n < r.t_return.size(); ++n) CHECK(r.t_return[n] + r.s_return[n] == r.in_A[n]);

    Section3Config bad = c;
    bad.k = 2;
    CHECK_THROWS_AS(exp_section3(bad), ParametersError);
    bad = c;
    bad.spec.doubling = false;
    CHECK_THROWS_AS(exp_section3(bad), DomainError);
    bad = c;
    bad.spec.fill = 0;  // S_n = 0 never visits fresh sites, so K is empty
    bad.max_tries = 3;
    CHECK_THROWS_AS(exp_section3(bad), SamplingError);
}

TEST_CASE("Gaussian experiment") {
    GaussianConfig w;
    w.model = white_noise_model(16);
    w.H = 16;
    w.samples = 2000;
    w.points = 200;
    const auto rw = exp_gaussian(w);
    for (const auto& t : rw.triples) CHECK(t.estimate == 0.0);
    CHECK(rw.N == 0);
    CHECK(rw.extracted);
    CHECK(rw.passed);

    GaussianConfig g;
    g.model = power_density_model(0.3, 16);
    g.H = 16;
    g.samples = 5000;
    g.points = 100;
    const auto a = exp_gaussian(g);
    CHECK(std::isfinite(a.summability.total));
    GaussianConfig g2 = g;
    g2.c = 2;
    g2.d = -3;
    const auto b = exp_gaussian(g2);
    REQUIRE(a.triples.size() == b.triples.size());
    for (std::size_t i = 0; i < a.triples.size(); ++i) CHECK(a.triples[i].estimate == b.triples[i].estimate);
    CHECK(a.summability.total == b.summability.total);
    CHECK(b.schedule_c == 2);
    CHECK(b.schedule_d == -3);

    g.k = 1;
    CHECK_THROWS_AS(exp_gaussian(g), HypothesisError);
}

TEST_CASE("mixing probe") {
    CHECK(field_cylinder_probability(one_d(1), 1, 0) + 2 * field_cylinder_probability(one_d(1), 1, 1) ==
          doctest::Approx(1.0));
    CHECK(field_cylinder_probability(one_d(1), 2, 1) == doctest::Approx(1.0 / 64));

    MixingConfig c;
    c.spec = two_d(4, default_k_max(256));
    c.H = 256;
    c.samples = 4000;
    c.M = 100000;
    const auto wide = mixing_probe(c);
    for (double b : wide.box) CHECK(b == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(wide.box_decreased);

    c.M = 2;
    const auto r = mixing_probe(c);
    CHECK(r.grid.front() == 64);
    CHECK(r.grid.back() == 256);
    CHECK(r.box_nonincreasing);
    CHECK(r.box_decreased);
    CHECK(r.part_II <= r.box.back() + 4 * r.part_II_se);
    CHECK(r.marginal_1 == doctest::Approx(0.75 * 0.5));

    c.spec.fill = 0;
    const auto z = mixing_probe(c);
    CHECK_FALSE(z.passed);
    c.B1.u = Lattice{3, 0};
    CHECK_THROWS_AS(mixing_probe(c), DomainError);
}

TEST_CASE("report views") {
    CHECK(decay_csv({{3, 0.5, 0.0, 1.0}}) == "n,value,se,envelope\n3,0.5,0,1\n");
    const auto pmf = point_mass(2);
    CHECK(pmf_csv(pmf) == "j,mass\n2,1\n");
    const Json j = to_json(one_d(9));
    CHECK(j["seed"] == 9);
    CHECK(j["fill"].is_null());
}
