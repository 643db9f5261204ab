#include "drlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "drlab/errors.hpp"
#include "drlab/hash_rng.hpp"
#include "drlab/shift_space.hpp"

namespace drlab {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double binomial_se(double p, double n) { return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0; }

// ---------------------------------------------------------------------------
// Orbits of the 1-D flip system. A coordinate of a point is (y, omega); an
// image under T~^a or S~^a keeps the base omega and records the pipeline that
// maps it, together with the base time a of Q^a y.

struct Coordinate {
    PathSample path;  // S_0 .. S_horizon of y
    LazyConfig omega;
};

struct Image {
    std::int64_t a = 0;
    std::vector<Primitive> ops;
};

std::int64_t increment(const Coordinate& c, std::int64_t a, std::int64_t m) {
    return c.path.at(a + m)[0] - c.path.at(a)[0];
}

Image apply_T(const Coordinate& c, const Image& z, std::int64_t m) {
    Image out = z;
    out.ops.push_back(Primitive::shift(increment(c, z.a, m)));
    out.a += m;
    return out;
}

Image apply_S(const Coordinate& c, const Image& z, std::int64_t m) {
    Image out = z;
    out.ops.push_back(Primitive::flip());
    out.ops.push_back(Primitive::shift(increment(c, z.a, m)));
    out.ops.push_back(Primitive::flip());
    out.a += m;
    return out;
}

int origin_bit(const Coordinate& c, const std::vector<Primitive>& ops) {
    Pullback acc{Lattice{0, 0}, false};
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const Pullback step = it->pull(acc.source);
        acc.source = step.source;
        acc.complement = acc.complement != step.complement;
    }
    const int bit = omega_at(c.omega, acc.source);
    return acc.complement ? 1 - bit : bit;
}

// The bit of T~^m z at 0 is the base bit at the shifted source; the bit of
// S~^m z appends the flip conjugate. Both avoid copying the pipeline.
int bit_after(const Coordinate& c, const Image& z, std::int64_t m, bool via_S) {
    const std::int64_t s = increment(c, z.a, m);
    Pullback acc{Lattice{0, 0}, false};
    auto pull = [&](const Primitive& g) {
        const Pullback step = g.pull(acc.source);
        acc.source = step.source;
        acc.complement = acc.complement != step.complement;
    };
    if (via_S) pull(Primitive::flip());
    pull(Primitive::shift(s));
    if (via_S) pull(Primitive::flip());
    for (auto it = z.ops.rbegin(); it != z.ops.rend(); ++it) pull(*it);
    const int bit = omega_at(c.omega, acc.source);
    return acc.complement ? 1 - bit : bit;
}

using Point = std::vector<Coordinate>;
using PointImage = std::vector<Image>;

bool in_B(const Point& x, const PointImage& z) {
    for (std::size_t t = 0; t < x.size(); ++t)
        if (origin_bit(x[t], z[t].ops) != 1) return false;
    return true;
}

bool joint_return(const Point& x, const PointImage& z, std::int64_t m) {
    for (std::size_t t = 0; t < x.size(); ++t)
        if (bit_after(x[t], z[t], m, false) != 1 || bit_after(x[t], z[t], m, true) != 1) return false;
    return true;
}

std::int64_t last_return(const Point& x, const PointImage& z, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t m = hi; m > lo; --m)
        if (joint_return(x, z, m)) return m;
    return 0;
}

PointImage map_T(const Point& x, const PointImage& z, std::int64_t m) {
    PointImage out;
    for (std::size_t t = 0; t < x.size(); ++t) out.push_back(apply_T(x[t], z[t], m));
    return out;
}

PointImage map_S(const Point& x, const PointImage& z, std::int64_t m) {
    PointImage out;
    for (std::size_t t = 0; t < x.size(); ++t) out.push_back(apply_S(x[t], z[t], m));
    return out;
}

struct Extraction {
    std::int64_t N = 0;
    std::int64_t M = 0;
    std::int64_t H = 0;
};

bool in_D(const Point& x, const PointImage& z, const Extraction& e) {
    return in_B(x, z) && last_return(x, z, e.N, e.H) == 0;
}

bool in_A(const Point& x, const PointImage& z, const Extraction& e) {
    return in_D(x, z, e) && in_D(x, map_T(x, z, e.M), e) && in_D(x, map_S(x, z, e.M), e);
}

Point section2_point(const FieldSpec& spec, std::int64_t index, std::int64_t horizon) {
    Point x;
    for (std::uint64_t t = 0; t < 3; ++t) {
        FieldSpec y = spec;
        y.seed = hash_key({spec.seed, 0x5ec2, static_cast<std::uint64_t>(index), t});
        Coordinate c{partial_sums(y, 0, horizon), LazyConfig{}};
        c.omega.seed = hash_key({spec.seed, 0x0e6a, static_cast<std::uint64_t>(index), t});
        c.omega.set(0, 1);
        x.push_back(std::move(c));
    }
    return x;
}

double slope_loglog(const std::vector<double>& v, std::int64_t lo, std::int64_t hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::int64_t n = lo; n <= hi; ++n) {
        const double y = v[static_cast<std::size_t>(n - 1)];
        if (y <= 0.0) continue;
        const double lx = std::log(static_cast<double>(n));
        const double ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        cnt += 1;
    }
    if (cnt < 2) return 0.0;
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

}  // namespace

std::string decay_csv(const std::vector<DecayRow>& rows) {
    std::string out = "n,value,se,envelope\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + "," + fmt(r.value) + "," + fmt(r.se) + "," + fmt(r.envelope) + "\n";
    return out;
}

BCReport section2_series(const FieldSpec& spec, std::int64_t H, std::int64_t fit_from) {
    if (spec.dimension != 1) throw DomainError("the flip system runs on a 1-D field");
    if (H < 16) throw DomainError("H must be >= 16");
    BCReport r;
    r.H = H;
    r.fit_from = std::min(fit_from, H / 2);
    double running = 0.0;
    for (std::int64_t n = 1; n <= H; ++n) {
        const IntegerPmf pmf = walk_pmf(spec, n);
        const double p0 = pmf.at(0);
        r.max_error_bound = std::max(r.max_error_bound, pmf.error_bound());
        const double a = std::pow(0.5 * p0, 3);
        running += a;
        r.p0.push_back(p0);
        r.a.push_back(a);
        r.partial_sums.push_back(running);
    }
    double fit = 0.0;
    for (std::int64_t n = r.fit_from; n <= H / 2; ++n)
        fit = std::max(fit, r.p0[static_cast<std::size_t>(n - 1)] * std::sqrt(static_cast<double>(n)));
    r.envelope_c = 1.5 * fit;
    r.scaled_bound = std::pow(0.5 * r.envelope_c, 3);
    for (std::int64_t n = H / 2 + 1; n <= H; ++n)
        r.max_scaled_a = std::max(r.max_scaled_a, r.a[static_cast<std::size_t>(n - 1)] *
                                                      std::pow(static_cast<double>(n), 1.5));
    // A flat sequence passes the envelope test on a factor-two window, so the
    // log-log slope must also show decay faster than 1/n.
    r.decay_slope = slope_loglog(r.a, r.fit_from, H);
    r.bounded = r.max_scaled_a <= r.scaled_bound && r.decay_slope < -1.0;
    r.tail = r.scaled_bound * 2.0 / std::sqrt(static_cast<double>(H));
    r.total = running + r.tail;
    return r;
}

Section2Result exp_section2(const Section2Config& cfg) {
    Section2Result out;
    out.bc = section2_series(cfg.spec, cfg.H, cfg.fit_from);
    BCReport& bc = out.bc;
    const std::int64_t H = cfg.H;
    const std::int64_t horizon = 3 * H;
    Extraction e;
    e.H = H;

    // Pilot: N is the smallest last joint return seen, M the largest shift that
    // keeps D cap T^-M D cap S^-M D populated.
    std::vector<Point> pilot;
    std::vector<std::int64_t> lasts;
    const PointImage id(3);
    for (std::int64_t s = 0; s < cfg.pilot; ++s) {
        pilot.push_back(section2_point(cfg.spec, s, horizon));
        lasts.push_back(last_return(pilot.back(), id, 0, H));
    }
    e.N = *std::min_element(lasts.begin(), lasts.end());
    e.M = 0;
    for (std::int64_t m = e.N; m > 0 && e.M == 0; --m) {
        Extraction trial = e;
        trial.M = m;
        for (std::size_t s = 0; s < pilot.size(); ++s)
            if (lasts[s] <= e.N && in_A(pilot[s], id, trial)) {
                e.M = m;
                break;
            }
    }
    bc.N = e.N;
    bc.M = e.M;

    // Populate A, reusing the pilot points first.
    std::vector<Point> A;
    std::int64_t in_d = 0;
    std::int64_t sampled = 0;
    for (std::int64_t s = 0; s < cfg.max_points && static_cast<std::int64_t>(A.size()) < cfg.points; ++s) {
        Point x = s < cfg.pilot ? std::move(pilot[static_cast<std::size_t>(s)]) : section2_point(cfg.spec, s, horizon);
        ++sampled;
        if (!in_D(x, id, e)) continue;
        ++in_d;
        if (in_A(x, id, e)) A.push_back(std::move(x));
    }
    bc.points_sampled = sampled;
    const double S = static_cast<double>(sampled);
    bc.measure_D = bc.measure_B * static_cast<double>(in_d) / S;
    bc.measure_D_se = bc.measure_B * binomial_se(static_cast<double>(in_d) / S, S);
    bc.measure_A = bc.measure_B * static_cast<double>(A.size()) / S;
    bc.measure_A_se = bc.measure_B * binomial_se(static_cast<double>(A.size()) / S, S);

    TripleProbeReport& probe = out.probe;
    probe.horizon = H;
    probe.points = static_cast<std::int64_t>(A.size());
    probe.in_A.assign(static_cast<std::size_t>(H), probe.points);
    probe.t_return.assign(static_cast<std::size_t>(H), 0);
    probe.s_return.assign(static_cast<std::size_t>(H), 0);
    for (const Point& x : A) {
        for (std::int64_t n = 1; n <= H; ++n) {
            const PointImage tz = map_T(x, id, n);
            const PointImage sz = map_S(x, id, n);
            const bool tb = in_B(x, tz);
            const bool sb = in_B(x, sz);
            if (!(tb && sb)) continue;
            const bool ta = in_A(x, tz, e);
            const bool sa = in_A(x, sz, e);
            probe.t_return[static_cast<std::size_t>(n - 1)] += ta;
            probe.s_return[static_cast<std::size_t>(n - 1)] += sa;
            if (ta && sa) ++probe.violations;
        }
    }
    probe.tried = sampled;

    if (static_cast<std::int64_t>(A.size()) < cfg.points) {
        bc.extracted = false;
        bc.verdict = "under-sampled: " + std::to_string(A.size()) + " of " + std::to_string(cfg.points) +
                     " points in A after " + std::to_string(sampled) + " draws";
    } else if (!bc.bounded) {
        bc.extracted = false;
        bc.verdict = "series not summable on the computed range";
    } else if (probe.violations > 0) {
        bc.extracted = false;
        bc.verdict = "joint returns from A";
    } else {
        bc.extracted = true;
        bc.verdict = "no joint returns from A up to H";
    }
    return out;
}

// ---------------------------------------------------------------------------

TripleProbeReport exp_section3(const Section3Config& cfg) {
    if (cfg.k < 3) throw ParametersError("k must be >= 3");
    if (cfg.spec.dimension != 2 || !cfg.spec.doubling)
        throw DomainError("the twisted system needs a doubled 2-D field");
    const std::int64_t H = cfg.H;
    cfg.p1.validate(H);
    cfg.p2.validate(H);
    TripleProbeReport rep;
    rep.horizon = H;
    rep.in_A.assign(static_cast<std::size_t>(H), 0);
    rep.t_return.assign(static_cast<std::size_t>(H), 0);
    rep.s_return.assign(static_cast<std::size_t>(H), 0);
    std::vector<std::int64_t> uncovered_profile(static_cast<std::size_t>(H), 0);

    struct Coord {
        std::unique_ptr<CocycleEvaluator> ev;
        std::unique_ptr<PermutationView> view;
        RangeTable r1;
        LazyConfig omega;
    };

    std::int64_t accepted = 0;
    std::int64_t tried = 0;
    while (accepted < cfg.samples && tried < cfg.max_tries) {
        const std::uint64_t sample = static_cast<std::uint64_t>(tried++);
        std::vector<Coord> coords;
        std::vector<std::int64_t> witness(static_cast<std::size_t>(H) + 1, 0);
        std::vector<std::int64_t> open;
        for (std::int64_t n = 1; n <= H; ++n) open.push_back(n);
        for (int t = 1; t <= cfg.k && !open.empty(); ++t) {
            FieldSpec y = cfg.spec;
            y.seed = hash_key({cfg.spec.seed, 0x5ec3, sample, static_cast<std::uint64_t>(t)});
            Coord c;
            c.ev = std::make_unique<CocycleEvaluator>(y);
            // Membership of n in K_t depends only on times up to n.
            const std::int64_t reach = open.back();
            c.r1 = build_range(*c.ev, cfg.p1, reach);
            const RangeTable r2 = build_range(*c.ev, cfg.p2, reach);
            c.view = std::make_unique<PermutationView>(c.r1, r2);
            c.omega.seed = hash_key({cfg.spec.seed, 0x0e6b, sample, static_cast<std::uint64_t>(t)});
            c.omega.dimension = 2;
            c.omega.set(Lattice{0, 0}, 0);
            const std::set<std::int64_t> K(c.view->indices().begin(), c.view->indices().end());
            std::vector<std::int64_t> still;
            for (std::int64_t n : open) {
                if (K.count(n)) witness[static_cast<std::size_t>(n)] = t;
                else still.push_back(n);
            }
            open = std::move(still);
            coords.push_back(std::move(c));
        }
        if (!open.empty()) {
            for (std::int64_t n : open) ++uncovered_profile[static_cast<std::size_t>(n - 1)];
            continue;
        }
        ++accepted;
        for (std::int64_t n = 1; n <= H; ++n) {
            Coord& c = coords[static_cast<std::size_t>(witness[static_cast<std::size_t>(n)] - 1)];
            const std::int64_t t1 = cfg.p1(n);
            const std::int64_t t2 = cfg.p2(n);
            const int t_bit = tilde_T_bit(*c.ev, c.omega, t1, Lattice{0, 0});
            const int s_bit = tilde_S_origin_bit(*c.ev, *c.view, c.omega, t2);
            ++rep.in_A[static_cast<std::size_t>(n - 1)];
            // Returning to A needs the origin bit 0 in every coordinate.
            rep.t_return[static_cast<std::size_t>(n - 1)] += t_bit == 0;
            rep.s_return[static_cast<std::size_t>(n - 1)] += s_bit == 0;
            if (s_bit != 1 - t_bit) ++rep.identity_failures;
            if (t_bit == 0 && s_bit == 0) ++rep.violations;
        }
    }
    rep.points = accepted;
    rep.tried = tried;
    rep.acceptance = tried ? static_cast<double>(accepted) / static_cast<double>(tried) : 0.0;
    rep.acceptance_se = binomial_se(rep.acceptance, static_cast<double>(tried));
    if (accepted < cfg.samples) {
        std::ostringstream os;
        os << "only " << accepted << " of " << tried << " draws covered every n <= " << H
           << "; most often uncovered:";
        std::vector<std::int64_t> order(static_cast<std::size_t>(H));
        for (std::int64_t n = 0; n < H; ++n) order[static_cast<std::size_t>(n)] = n + 1;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
            return uncovered_profile[static_cast<std::size_t>(a - 1)] > uncovered_profile[static_cast<std::size_t>(b - 1)];
        });
        for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i)
            os << " n=" << order[i] << " (" << uncovered_profile[static_cast<std::size_t>(order[i] - 1)] << ")";
        throw SamplingError(os.str());
    }
    return rep;
}

// ---------------------------------------------------------------------------

GaussianReport exp_gaussian(const GaussianConfig& cfg) {
    const SpectralModel& model = cfg.model;
    if (cfg.H < 1 || cfg.H > model.max_lag()) throw DomainError("probe horizon beyond the tabulated covariance");
    if (2.0 * cfg.k * model.delta <= 1.0)
        throw HypothesisError("2 k delta = " + fmt(2.0 * cfg.k * model.delta) + " must exceed 1");
    GaussianReport rep;
    rep.schedule_c = cfg.c;
    rep.schedule_d = cfg.d;
    std::vector<double> estimates;
    for (std::int64_t n = 1; n <= cfg.H; ++n) {
        rep.schedule.push_back(linear_times_schedule(cfg.c, cfg.d, n));
        const TripleEstimate e = triple_probability(model, rep.schedule.back(), cfg.samples, cfg.seed);
        if (!e.within_bound()) ++rep.bound_failures;
        rep.powers.push_back(std::pow(e.estimate, cfg.k));
        estimates.push_back(e.estimate);
        rep.triples.push_back(e);
    }
    rep.summability = power_summability(estimates, cfg.k, model.delta, model.C, cfg.H);

    // Extraction over k-tuples of paths conditioned on X_0 > 1 in every copy.
    PathSampler sampler(model, cfg.H);
    std::vector<std::int64_t> lasts;
    std::int64_t draws = 0;
    const std::int64_t max_draws = cfg.points * 400;
    while (static_cast<std::int64_t>(lasts.size()) < cfg.points && draws < max_draws) {
        std::vector<GaussianPath> xs;
        bool in_b = true;
        for (int t = 0; t < cfg.k && in_b; ++t) {
            xs.push_back(sampler.sample(hash_key({cfg.seed, 0x6a55, static_cast<std::uint64_t>(draws),
                                                  static_cast<std::uint64_t>(t)})));
            in_b = xs.back().x[0] > 1.0;
        }
        ++draws;
        if (!in_b) continue;
        std::vector<TwistedPath> ys;
        for (const auto& x : xs) ys.push_back(twisted_path(model, x));
        std::int64_t last = 0;
        for (std::int64_t n = cfg.H; n >= 1 && last == 0; --n) {
            bool all = true;
            for (int t = 0; t < cfg.k && all; ++t)
                all = xs[static_cast<std::size_t>(t)].x[static_cast<std::size_t>(n)] > 1.0 &&
                      ys[static_cast<std::size_t>(t)].y[static_cast<std::size_t>(n)] > 1.0;
            if (all) last = n;
        }
        lasts.push_back(last);
    }
    rep.points = static_cast<std::int64_t>(lasts.size());
    if (rep.points < cfg.points) throw SamplingError("too few Gaussian points in B");
    rep.N = *std::min_element(lasts.begin(), lasts.end());
    const auto in_d = std::count_if(lasts.begin(), lasts.end(), [&](auto l) { return l <= rep.N; });
    const double pB = std::pow(normal_tail(1.0), cfg.k);
    const double frac = static_cast<double>(in_d) / static_cast<double>(rep.points);
    rep.measure_D = pB * frac;
    rep.measure_D_se = pB * binomial_se(frac, static_cast<double>(rep.points));
    // Joint returns beyond N from points of D; zero by construction of D on the horizon.
    rep.violations = 0;
    rep.extracted = rep.N < cfg.H && in_d > 0;
    rep.passed = rep.bound_failures == 0 && std::isfinite(rep.summability.total) &&
                 rep.summability.total < cfg.budget && rep.extracted;
    return rep;
}

// ---------------------------------------------------------------------------

double field_cylinder_probability(const FieldSpec& spec, int k, int value) {
    if (value < -1 || value > 1) return 0.0;
    if (spec.fill) return *spec.fill == (spec.negated ? -value : value) ? 1.0 : 0.0;
    const double a2 = scale_params(k).alpha2;
    return value == 0 ? 1.0 - a2 : 0.5 * a2;
}

MixingReport mixing_probe(const MixingConfig& cfg) {
    const FieldSpec& spec = cfg.spec;
    if (spec.dimension != 2) throw DomainError("the mixing probe runs on a 2-D field");
    if (cfg.M < 0) throw DomainError("M must be >= 0");
    for (const auto* b : {&cfg.B1, &cfg.B2})
        if (std::max(std::abs(b->u[0]), std::abs(b->u[1])) > cfg.M)
            throw DomainError("bit cylinders must lie within radius M");
    MixingReport rep;
    const std::int64_t radius = 2 * cfg.M;
    for (std::int64_t n = cfg.n_min; n <= cfg.H; n *= 2) {
        const Pmf2D pmf = walk_pmf_2d(spec, n);
        rep.grid.push_back(n);
        rep.box.push_back(box_probability(pmf, radius));
        rep.box_error.push_back(2.0 * pmf.error_bound());
    }
    if (rep.grid.empty() || rep.grid.back() != cfg.H) {
        const Pmf2D pmf = walk_pmf_2d(spec, cfg.H);
        rep.grid.push_back(cfg.H);
        rep.box.push_back(box_probability(pmf, radius));
        rep.box_error.push_back(2.0 * pmf.error_bound());
    }
    rep.box_nonincreasing = true;
    for (std::size_t i = 1; i < rep.box.size(); ++i)
        if (rep.box[i] > rep.box[i - 1] + rep.box_error[i] + rep.box_error[i - 1]) rep.box_nonincreasing = false;
    rep.box_decreased = rep.box.back() + rep.box_error.back() < rep.box.front() - rep.box_error.front();

    rep.marginal_1 = field_cylinder_probability(spec, cfg.A1.k, cfg.A1.value) * 0.5;
    rep.marginal_2 = field_cylinder_probability(spec, cfg.A2.k, cfg.A2.value) * 0.5;
    const double product = rep.marginal_1 * rep.marginal_2;
    const double mE = rep.box.back();
    std::int64_t joint = 0;
    std::int64_t joint_E = 0;
    const std::int64_t n = cfg.H;
    for (std::int64_t s = 0; s < cfg.samples; ++s) {
        FieldSpec y = spec;
        y.seed = hash_key({spec.seed, 0x3171, static_cast<std::uint64_t>(s)});
        LazyConfig omega;
        omega.dimension = 2;
        omega.seed = hash_key({spec.seed, 0x0e6c, static_cast<std::uint64_t>(s)});
        if (omega_at(omega, cfg.B1.u) != cfg.B1.bit) continue;
        CocycleEvaluator ev(y);
        if (ev.field(cfg.A1.k, cfg.A1.i, cfg.A1.time) != cfg.A1.value) continue;
        if (ev.field(cfg.A2.k, cfg.A2.i, cfg.A2.time + n) != cfg.A2.value) continue;
        const Lattice sn = ev.sum(n);
        if (omega_at(omega, Lattice{cfg.B2.u[0] + sn[0], cfg.B2.u[1] + sn[1]}) != cfg.B2.bit) continue;
        ++joint;
        if (std::max(std::abs(sn[0]), std::abs(sn[1])) <= radius) ++joint_E;
    }
    const double S = static_cast<double>(cfg.samples);
    rep.joint = static_cast<double>(joint) / S;
    rep.joint_se = binomial_se(rep.joint, S);
    rep.correlation = std::abs(rep.joint - product);
    rep.part_II = static_cast<double>(joint_E) / S;
    rep.part_II_se = binomial_se(rep.part_II, S);
    rep.part_I = (rep.joint - rep.part_II) - product * (1.0 - mE);
    rep.bound = 4.0 * rep.joint_se + mE;
    rep.correlation_ok = rep.correlation < rep.bound;
    rep.passed = rep.box_decreased && rep.correlation_ok;
    return rep;
}

// ---------------------------------------------------------------------------

Json to_json(const FieldSpec& spec) {
    Json j;
    j["dimension"] = spec.dimension;
    j["k_min"] = spec.k_min;
    j["k_max"] = spec.k_max;
    j["doubling"] = spec.doubling;
    j["seed"] = spec.seed;
    j["fill"] = spec.fill ? Json(*spec.fill) : Json(nullptr);
    j["overrides"] = spec.overrides.size();
    return j;
}

Json to_json(const BCReport& r) {
    Json j;
    j["H"] = r.H;
    j["fit_from"] = r.fit_from;
    j["envelope_c"] = r.envelope_c;
    j["max_scaled_a"] = r.max_scaled_a;
    j["scaled_bound"] = r.scaled_bound;
    j["decay_slope"] = r.decay_slope;
    j["bounded"] = r.bounded;
    j["partial_sum"] = r.partial_sums.empty() ? 0.0 : r.partial_sums.back();
    j["tail"] = r.tail;
    j["total"] = r.total;
    j["max_error_bound"] = r.max_error_bound;
    j["points_sampled"] = r.points_sampled;
    j["N"] = r.N;
    j["M"] = r.M;
    j["measure_B"] = r.measure_B;
    j["measure_D"] = {{"value", r.measure_D}, {"se", r.measure_D_se}};
    j["measure_A"] = {{"value", r.measure_A}, {"se", r.measure_A_se}};
    j["extracted"] = r.extracted;
    j["verdict"] = r.verdict;
    return j;
}

Json to_json(const TripleProbeReport& r) {
    Json j;
    j["horizon"] = r.horizon;
    j["points"] = r.points;
    j["tried"] = r.tried;
    j["violations"] = r.violations;
    j["identity_failures"] = r.identity_failures;
    j["acceptance"] = {{"value", r.acceptance}, {"se", r.acceptance_se}};
    std::int64_t t = 0, s = 0;
    for (auto v : r.t_return) t += v;
    for (auto v : r.s_return) s += v;
    j["t_returns"] = t;
    j["s_returns"] = s;
    return j;
}

Json to_json(const GaussianReport& r) {
    Json j;
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.triples.size(); ++i) {
        const auto& e = r.triples[i];
        rows.push_back({{"n", e.n},
                        {"r", e.r},
                        {"estimate", e.estimate},
                        {"se", e.se},
                        {"tail_bound", e.tail_bound},
                        {"markov_bound", e.markov_bound},
                        {"power", r.powers[i]}});
    }
    j["triples"] = rows;
    j["summability"] = {{"k", r.summability.k},
                        {"delta", r.summability.delta},
                        {"C", r.summability.C},
                        {"H", r.summability.H},
                        {"partial", r.summability.partial},
                        {"tail", r.summability.tail},
                        {"total", r.summability.total}};
    j["schedule"] = {{"c", r.schedule_c},
                     {"d", r.schedule_d},
                     {"note", "times (c n, d n) for the root systems probe (T, S) at n"}};
    j["extraction"] = {{"points", r.points},
                       {"N", r.N},
                       {"measure_D", {{"value", r.measure_D}, {"se", r.measure_D_se}}},
                       {"violations", r.violations},
                       {"extracted", r.extracted}};
    j["bound_failures"] = r.bound_failures;
    j["passed"] = r.passed;
    j["scope"] = "decay mechanism only; the spectral density is absolutely continuous, singularity and entropy are not modelled";
    return j;
}

Json to_json(const MixingReport& r) {
    Json j;
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.grid.size(); ++i)
        rows.push_back({{"n", r.grid[i]}, {"box", r.box[i]}, {"error_bound", r.box_error[i]}});
    j["box"] = rows;
    j["box_nonincreasing"] = r.box_nonincreasing;
    j["box_decreased"] = r.box_decreased;
    j["marginal_1"] = r.marginal_1;
    j["marginal_2"] = r.marginal_2;
    j["joint"] = {{"value", r.joint}, {"se", r.joint_se}};
    j["correlation"] = r.correlation;
    j["I"] = r.part_I;
    j["II"] = {{"value", r.part_II}, {"se", r.part_II_se}};
    j["bound"] = r.bound;
    j["correlation_ok"] = r.correlation_ok;
    j["passed"] = r.passed;
    return j;
}

Json to_json(const CertificationRun& r) {
    Json j;
    j["N"] = r.N;
    j["C"] = r.C;
    j["M"] = r.M;
    j["kappa"] = r.kappa;
    j["K"] = r.K;
    j["k_max"] = r.k_max;
    j["samples"] = r.samples;
    j["y_violations"] = r.y_violations;
    j["goal_violations"] = r.goal_violations;
    j["distinct_violations"] = r.distinct_violations;
    j["log_event_mass"] = r.log_event_mass;
    Json scales = Json::array();
    for (const auto& s : r.scales)
        scales.push_back({{"k", s.k},
                          {"lifted", s.lifted},
                          {"log_mass", s.log_mass},
                          {"log_bound", s.log_bound},
                          {"checked", s.checked},
                          {"holds", s.holds}});
    j["scales"] = scales;
    Json path = Json::array();
    for (const auto& p : r.example_path) path.push_back({p[0], p[1]});
    j["example_path"] = path;
    j["passed"] = r.passed();
    return j;
}

Json to_json(const ChooseKReport& r) {
    Json j;
    j["k"] = r.k;
    j["success"] = r.success;
    j["margin"] = r.margin;
    j["envelope_c"] = r.envelope_c;
    j["fit_from"] = r.fit_from;
    Json rows = Json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"k", row.k}, {"partial", row.partial}, {"tail", row.tail}, {"total", row.total}});
    j["rows"] = rows;
    return j;
}

Json to_json(const LcltReport& r) {
    Json j;
    j["n"] = r.n;
    j["dimension"] = r.dimension;
    j["sigma2"] = r.sigma2;
    j["scaling"] = r.scaling;
    j["deviation"] = r.deviation;
    j["peak"] = r.peak;
    j["argmax"] = r.argmax;
    j["window"] = r.window;
    return j;
}

Json to_json(const IntegerPmf& pmf) {
    Json j;
    j["offset"] = pmf.offset;
    j["stride"] = pmf.stride;
    j["pruned_mass"] = pmf.pruned_mass;
    j["alias_bound"] = pmf.alias_bound;
    j["mass"] = pmf.mass;
    return j;
}

std::string pmf_csv(const IntegerPmf& pmf) {
    std::string out = "j,mass\n";
    for (std::size_t i = 0; i < pmf.mass.size(); ++i)
        out += std::to_string(pmf.offset + pmf.stride * static_cast<std::int64_t>(i)) + "," + fmt(pmf.mass[i]) + "\n";
    return out;
}

}  // namespace drlab
