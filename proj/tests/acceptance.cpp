// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "drlab/cli.hpp"
#include "drlab/errors.hpp"
#include "drlab/experiments.hpp"
#include "drlab/hash_rng.hpp"
#include "oracles.hpp"

using namespace drlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> run;
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

FieldSpec one_d(std::int64_t n_max) {
    FieldSpec s;
    s.k_max = default_k_max(n_max);
    return s;
}

FieldSpec doubled(std::uint64_t seed, int k_max) {
    FieldSpec s;
    s.dimension = 2;
    s.doubling = true;
    s.seed = seed;
    s.k_max = k_max;
    return s;
}

Outcome oracle_equivalence() {
    int mismatches = 0;
    double worst = 0.0;
    for (int k_max = 1; k_max <= 2; ++k_max)
        for (std::int64_t n = 1; n <= 4; ++n)
            for (bool doubling : {false, true}) {
                FieldSpec spec;
                spec.k_max = k_max;
                spec.doubling = doubling;
                const auto law = oracle::brute_walk_law(1, k_max, n, doubling);
                const auto exact = rational_walk_pmf(spec, n);
                const auto fl = walk_pmf(spec, n);
                if (exact.total() != Rational(1)) ++mismatches;
                for (const auto& [x, p] : law) {
                    if (exact.at(x) != p) ++mismatches;
                    worst = std::max(worst, std::abs(fl.at(x) - static_cast<double>(p)));
                }
                for (std::int64_t x = fl.min_support(); x <= fl.max_support(); ++x)
                    if (!law.count(x)) worst = std::max(worst, fl.at(x));
            }
    FieldSpec one;
    one.k_max = 1;
    const bool anchor = oracle::brute_scale_law(1, 1).at(0) == Rational(867, 2048) &&
                        rational_walk_pmf(one, 1).at(0) == Rational(867, 2048);
    return {mismatches == 0 && worst <= 1e-12 && anchor,
            "rational mismatches " + std::to_string(mismatches) + ", float max error " + num(worst) +
                ", P(S_1(f_1)=0) = 867/2048 " + (anchor ? "yes" : "no")};
}

Outcome mc_oracle() {
    const std::int64_t n = 64;
    const int seeds = 100000;
    FieldSpec spec = one_d(n);
    const double exact = walk_pmf(spec, n).at(0);
    int zeros = 0;
    for (int s = 0; s < seeds; ++s) {
        spec.seed = static_cast<std::uint64_t>(s);
        CocycleEvaluator ev(spec);
        zeros += ev.sum(n)[0] == 0;
    }
    const double freq = zeros / static_cast<double>(seeds);
    const double se = std::sqrt(exact * (1 - exact) / seeds);
    return {std::abs(freq - exact) <= 4 * se,
            "freq " + num(freq) + " vs exact " + num(exact) + " (" + num(std::abs(freq - exact) / se) + " SE)"};
}

Outcome lclt_sanity() {
    const std::vector<std::int64_t> grid{256, 1024, 4096, 16384};
    const FieldSpec spec = one_d(16384);
    bool symmetric = true;
    double lo = INFINITY, hi = 0, worst_mass = 0, worst_sup = 0;
    for (auto n : grid) {
        const auto pmf = walk_pmf(spec, n);
        worst_mass = std::max(worst_mass, std::abs(pmf.total() - 1.0));
        bool sym = pmf.min_support() == -pmf.max_support();
        for (std::size_t i = 0; sym && i < pmf.mass.size(); ++i) sym = pmf.mass[i] == pmf.mass[pmf.mass.size() - 1 - i];
        symmetric = symmetric && sym;
        double peak = 0;
        for (double m : pmf.mass) peak = std::max(peak, m);
        worst_sup = std::max(worst_sup, std::sqrt(static_cast<double>(n)) * peak);
        const double s0 = std::sqrt(static_cast<double>(n)) * pmf.at(0);
        lo = std::min(lo, s0);
        hi = std::max(hi, s0);
    }
    const double variation = (hi - lo) / hi;
    const bool ok = symmetric && worst_mass <= 1e-9 && worst_sup <= 1.0 && variation < 0.5;
    return {ok, "max |mass-1| " + num(worst_mass) + ", symmetric " + (symmetric ? "yes" : "no") + ", sup sqrt(n) p " +
                    num(worst_sup) + ", sqrt(n) p(0) variation " + num(variation)};
}

Outcome section2_decay() {
    FieldSpec spec = one_d(3 * 2048);
    const auto rep = section2_series(spec, 2048);
    return {rep.bounded && std::isfinite(rep.total),
            "max a_n n^1.5 on (1024,2048] " + num(rep.max_scaled_a) + " <= (c/2)^3 = " + num(rep.scaled_bound) +
                ", slope " + num(rep.decay_slope) + ", partial " + num(rep.partial_sums.back()) + " + tail " +
                num(rep.tail) + " = " + num(rep.total)};
}

Outcome section2_emptiness() {
    Section2Config c;
    c.spec = one_d(3 * 2000);
    c.spec.seed = 1;
    c.H = 2000;
    c.points = 1000;
    c.pilot = 1000;
    c.max_points = 40000;
    const auto r = exp_section2(c);
    return {r.probe.points >= 1000 && r.probe.violations == 0 && r.bc.extracted,
            "|A| sample " + std::to_string(r.probe.points) + ", N " + std::to_string(r.bc.N) + ", M " +
                std::to_string(r.bc.M) + ", joint returns " + std::to_string(r.probe.violations) + ", " + r.bc.verdict};
}

Outcome range_density() {
    const auto cube = PolynomialSpec::monomial(3);
    int dense = 0;
    double worst = 1.0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const auto t = build_range(doubled(s, default_k_max(1000000000)), cube, 1000);
        dense += t.range_density() >= 0.85;
        worst = std::min(worst, t.range_density());
    }
    return {dense >= 15, std::to_string(dense) + "/20 seeds with density >= 0.85, lowest " + num(worst)};
}

Outcome permutation() {
    const auto sq = PolynomialSpec::monomial(2);
    const auto cube = PolynomialSpec::monomial(3);
    int bad_map = 0, collisions = 0, checked = 0;
    bool origin = true;
    int ones = 0, trials = 0;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const auto view = std::make_shared<PermutationView>(doubled(seed, default_k_max(125000000)), sq, cube, 500);
        origin = origin && view->pi_forward(Lattice{0, 0}) == Lattice{0, 0};
        for (auto n : view->indices()) {
            ++checked;
            if (view->pi_forward(view->s2(n)) != view->s1(n)) ++bad_map;
        }
        std::map<Lattice, Lattice> images;
        for (int q = 0; q < 1000; ++q) {
            const std::uint64_t h = hash_key({seed, 0xa0d1, static_cast<std::uint64_t>(q)});
            const Lattice v = q % 3 == 0 ? view->s2(view->indices()[h % view->indices().size()])
                                         : Lattice{static_cast<std::int64_t>(h % 2001) - 1000,
                                                   2 * static_cast<std::int64_t>((h >> 20) % 500) + 1};
            auto [it, inserted] = images.emplace(view->pi_forward(v), v);
            if (!inserted && it->second != v) ++collisions;
        }
        for (int q = 0; q < 10000; ++q, ++trials) {
            const std::uint64_t h = hash_key({seed, 0xb17, static_cast<std::uint64_t>(q)});
            const Lattice v = q % 2 ? view->s2(view->indices()[h % view->indices().size()])
                                    : Lattice{static_cast<std::int64_t>(h % 100001), 2 * static_cast<std::int64_t>(h >> 40) + 1};
            LazyConfig c;
            c.dimension = 2;
            c.seed = h;
            ones += twist_bit(*view, c, v);
        }
    }
    const double mean = ones / static_cast<double>(trials);
    const double se = std::sqrt(0.25 / trials);
    return {origin && bad_map == 0 && collisions == 0 && std::abs(mean - 0.5) <= 4 * se,
            "pi(0)=0 " + std::string(origin ? "yes" : "no") + ", " + std::to_string(checked) + " indices with " +
                std::to_string(bad_map) + " mismatches, " + std::to_string(collisions) +
                " collisions in 3000 queries, twist-bit mean " + num(mean) + " +- " + num(se)};
}

Outcome section3() {
    Section3Config c;
    c.spec = doubled(7, default_k_max(125000000));
    c.H = 500;
    c.samples = 1000;
    const auto profile = complement_profile(c.spec, c.p1, c.p2, c.H, 200);
    const auto ck = choose_k(profile, 0.05, 64, 64);
    c.k = ck.k;
    const auto r = exp_section3(c);
    return {ck.success && r.points == 1000 && r.violations == 0 && r.identity_failures == 0,
            "choose_k k=" + std::to_string(ck.k) + " (total " + num(ck.rows.back().total) + "), " +
                std::to_string(r.points) + " samples, violations " + std::to_string(r.violations) +
                ", identity failures " + std::to_string(r.identity_failures) + ", acceptance " + num(r.acceptance)};
}

Outcome certification() {
    const std::int64_t N = 8;
    const std::int64_t M = z_lower_bound(N);
    const auto run = certify_distinct(doubled(3, 12), N, -M + 1, 1000);
    int checked = 0;
    for (const auto& s : run.scales) checked += s.checked;
    return {run.passed() && run.samples == 1000 && checked > 0,
            "M " + std::to_string(M) + ", C " + std::to_string(run.C) + ", goal violations " +
                std::to_string(run.goal_violations) + ", distinct violations " + std::to_string(run.distinct_violations) +
                ", Y violations " + std::to_string(run.y_violations) + ", " + std::to_string(checked) +
                " scale bounds checked, all hold " + (run.bound_holds ? "yes" : "no")};
}

Outcome gaussian() {
    const std::int64_t N = 128;
    const auto model = power_density_model(0.3, N);
    PathSampler sampler(model, N);
    const std::vector<std::pair<int, int>> pairs{{0, 0}, {1, 2}, {5, 17}, {64, 128}, {100, 3}, {128, 128}};
    std::vector<double> sum(pairs.size()), sum2(pairs.size());
    const int paths = 100000;
    for (int s = 0; s < paths; ++s) {
        const auto p = sampler.sample(static_cast<std::uint64_t>(s));
        const auto y = twisted_path(model, p);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double v = y.y[static_cast<std::size_t>(pairs[i].first)] * y.y[static_cast<std::size_t>(pairs[i].second)];
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    double worst_z = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double mean = sum[i] / paths;
        const double se = std::sqrt((sum2[i] / paths - mean * mean) / paths);
        worst_z = std::max(worst_z, std::abs(mean - model.at(pairs[i].first - pairs[i].second)) / se);
    }
    const auto white = white_noise_model(64);
    bool white_zero = true;
    for (std::int64_t n = 1; n <= 64; ++n) white_zero = white_zero && triple_probability(white, n, 20000, 5).estimate == 0.0;

    GaussianConfig g;
    g.model = power_density_model(0.3, 64);
    g.k = 2;
    g.H = 64;
    g.samples = 100000;
    g.points = 2000;
    const auto rep = exp_gaussian(g);
    const bool ok = worst_z <= 4 && white_zero && rep.bound_failures == 0 && std::isfinite(rep.summability.total);
    return {ok, "Cov(Y_n,Y_m) worst " + num(worst_z) + " SE, white noise zero " + (white_zero ? "yes" : "no") +
                    ", bound failures " + std::to_string(rep.bound_failures) + ", k=2 total " +
                    num(rep.summability.total) + " (partial " + num(rep.summability.partial) + " + tail " +
                    num(rep.summability.tail) + ")"};
}

Outcome mixing() {
    MixingConfig c;
    c.spec = doubled(5, default_k_max(4096));
    c.M = 5;
    c.H = 4096;
    c.samples = 100000;
    c.A1 = {1, 1, 0, 0};
    c.A2 = {1, 1, 0, 0};
    const auto r = mixing_probe(c);
    const fs::path dir = fs::temp_directory_path() / "drlab_acceptance_mixing";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "zero.cfg") << "command = mixing\nfill = 0\nsamples = 2000\n";
    std::ostringstream sink;
    const int code = run_cli({"--config", (dir / "zero.cfg").string(), "--out", (dir / "out").string()}, sink, sink);
    return {r.box_decreased && r.correlation_ok && code == kExitViolation,
            "box(64) " + num(r.box.front()) + ", box(4096) " + num(r.box.back()) + ", correlation " +
                num(r.correlation) + " < " + num(r.bound) + ", all-zero control exit " + std::to_string(code)};
}

Outcome reproducibility() {
    const fs::path dir = fs::temp_directory_path() / "drlab_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> configs{
        {"gauss", "command = gauss\nH = 32\nsamples = 20000\npoints = 200\n"},
        {"lclt", "command = lclt\nn_grid = 64,256\n"},
        {"recur3", "command = recur3\nH = 40\nsamples = 20\npilot = 20\n"},
        {"mixing", "command = mixing\nH = 256\nsamples = 5000\nM = 2\n"}};
    int compared = 0, differing = 0;
    for (const auto& [name, body] : configs) {
        const fs::path cfg = dir / (name + ".cfg");
        std::ofstream(cfg) << body;
        std::ostringstream sink;
        for (const char* run : {"a", "b"})
            run_cli({"--config", cfg.string(), "--out", (dir / name / run).string(), "--emit-plot-data"}, sink, sink);
        for (const auto& entry : fs::directory_iterator(dir / name / "a")) {
            std::ifstream fa(entry.path(), std::ios::binary), fb(dir / name / "b" / entry.path().filename(), std::ios::binary);
            std::stringstream sa, sb;
            sa << fa.rdbuf();
            sb << fb.rdbuf();
            ++compared;
            differing += sa.str() != sb.str();
        }
    }
    return {compared >= 8 && differing == 0,
            std::to_string(compared) + " files compared across 4 commands, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", 10, oracle_equivalence},
        {2, "MC-oracle agreement", 60, mc_oracle},
        {3, "LCLT sanity", 600, lclt_sanity},
        {4, "triple-return decay", 600, section2_decay},
        {5, "triple-return emptiness surrogate", 300, section2_emptiness},
        {6, "range density", 300, range_density},
        {7, "permutation correctness", 300, permutation},
        {8, "polynomial-time structural emptiness", 600, section3},
        {9, "distinct-range certification", 300, certification},
        {10, "Gaussian identities", 600, gaussian},
        {11, "mixing probe", 600, mixing},
        {12, "reproducibility", 60, reproducibility},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.limit_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << num(secs) << " s of "
                  << c.limit_seconds << " s): " << o.detail << (in_time ? "" : " [over time limit]") << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed ? 1 : 0;
}
