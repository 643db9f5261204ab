#include "drlab/exact_distribution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "drlab/errors.hpp"

namespace drlab {

namespace {

std::int64_t run_last(const CoefficientRun& run) { return run.first + run.step * (run.count - 1); }

std::int64_t positive_mod(std::int64_t x, std::int64_t m) {
    const std::int64_t r = x % m;
    return r < 0 ? r + m : r;
}

std::vector<CoefficientRun> runs_of(const std::vector<std::int64_t>& values) {
    std::vector<CoefficientRun> runs;
    std::size_t i = 0;
    while (i < values.size()) {
        if (i + 1 == values.size()) {
            runs.push_back({values[i], 0, 1, 1});
            break;
        }
        const std::int64_t step = values[i + 1] - values[i];
        std::size_t j = i + 1;
        while (j + 1 < values.size() && values[j + 1] - values[j] == step) ++j;
        runs.push_back({values[i], step, static_cast<std::int64_t>(j - i + 1), 1});
        i = j + 1;
    }
    return runs;
}

// log(1 - a + a cosh x), stable for large |x|.
double log_atom_mgf(double a, double x) {
    const double ax = std::abs(x);
    if (ax < 20.0) return std::log1p(a * (std::cosh(ax) - 1.0));
    return ax + std::log(a / 2.0 + (1.0 - a) * std::exp(-ax) + a / 2.0 * std::exp(-2.0 * ax));
}

struct ScaleTerm {
    double a = 0.0;
    CoefficientProfile profile;
    // log(1 - a + a cos x) = log_c + 2 sum_j coef[j-1] cos(j x)
    double log_c = 0.0;
    std::vector<double> coef;
};

ScaleTerm make_term(double a, CoefficientProfile profile) {
    ScaleTerm term;
    term.a = a;
    term.profile = std::move(profile);
    if (a <= 0.0) return term;
    const double b = a / (2.0 * (1.0 - a));
    const double rho = 2.0 * b / (1.0 + std::sqrt(1.0 - 4.0 * b * b));
    term.log_c = std::log((1.0 - a) / (1.0 + rho * rho));
    const double atoms = static_cast<double>(std::max<std::int64_t>(term.profile.atom_count(), 1));
    double power = 1.0;
    for (int j = 1; j <= 200; ++j) {
        power *= rho;
        term.coef.push_back((j % 2 == 1 ? 1.0 : -1.0) * power / j);
        if (2.0 * power * atoms < 1e-18) break;
    }
    return term;
}

double total_max_abs(const std::vector<ScaleTerm>& terms) {
    double total = 0.0;
    for (const auto& t : terms) {
        if (t.a <= 0.0) continue;
        double sum = 0.0;
        for (const auto& run : t.profile.runs) {
            // sum of |first + step u| over the run, times multiplicity
            if (run.step == 0) {
                sum += static_cast<double>(run.mult) * static_cast<double>(run.count) *
                       std::abs(static_cast<double>(run.first));
            } else {
                for (std::int64_t u = 0; u < run.count; ++u)
                    sum += static_cast<double>(run.mult) * std::abs(static_cast<double>(run.first + run.step * u));
            }
        }
        total += sum;
    }
    return total;
}

// sum_u cosh(x (first + step u)) over a run, in closed form.
double run_cosh_sum(const CoefficientRun& run, double x) {
    auto geometric = [&](double y) {
        const double ratio = std::expm1(y * static_cast<double>(run.step) * static_cast<double>(run.count)) /
                             std::expm1(y * static_cast<double>(run.step));
        return std::exp(y * static_cast<double>(run.first)) * ratio;
    };
    return 0.5 * (geometric(x) + geometric(-x));
}

// An upper bound on log E exp(lambda S): exact per atom on short runs, and
// log(1 + y) <= y summed in closed form on long ones.
double log_mgf(const std::vector<ScaleTerm>& terms, double lambda) {
    constexpr std::int64_t kExactRun = 64;
    double total = 0.0;
    for (const auto& t : terms) {
        if (t.a <= 0.0) continue;
        for (const auto& run : t.profile.runs) {
            if (run.step == 0) {
                total += static_cast<double>(run.mult) * static_cast<double>(run.count) *
                         log_atom_mgf(t.a, lambda * static_cast<double>(run.first));
            } else if (run.count <= kExactRun) {
                double s = 0.0;
                for (std::int64_t u = 0; u < run.count; ++u)
                    s += log_atom_mgf(t.a, lambda * static_cast<double>(run.first + run.step * u));
                total += static_cast<double>(run.mult) * s;
            } else {
                total += static_cast<double>(run.mult) * t.a *
                         (run_cosh_sum(run, lambda) - static_cast<double>(run.count));
            }
        }
    }
    return total;
}

// Chernoff bound on P(|S| >= threshold) for the symmetric sum.
double tail_bound(const std::vector<ScaleTerm>& terms, double threshold) {
    if (total_max_abs(terms) < threshold) return 0.0;
    auto f = [&](double lambda) { return log_mgf(terms, lambda) - lambda * threshold; };
    double hi = 1e-3;
    while (hi < 1e3 && f(2.0 * hi) < f(hi)) hi *= 2.0;
    hi *= 2.0;
    double lo = 0.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 30; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return std::min(1.0, 2.0 * std::exp(std::min(f1, f2)));
}

double terms_variance(const std::vector<ScaleTerm>& terms) {
    double v = 0.0;
    for (const auto& t : terms) v += t.a * t.profile.sum_squares();
    return v;
}

// Characteristic-function inversion on an L-point grid.
IntegerPmf pmf_from_terms(const std::vector<ScaleTerm>& terms, const ExactOptions& options) {
    const double max_abs = total_max_abs(terms);
    if (max_abs == 0.0) return point_mass(0);
    const double sigma = std::sqrt(terms_variance(terms));
    std::int64_t grid = 64;
    while (static_cast<double>(grid) < 8.0 * sigma) grid *= 2;
    double alias = 0.0;
    while (true) {
        if (static_cast<double>(grid) > 2.0 * max_abs + 1.0) {
            alias = 0.0;
            break;
        }
        alias = tail_bound(terms, static_cast<double>(grid / 2));
        if (alias <= options.alias_target) break;
        grid *= 2;
        if (grid > options.max_grid) {
            throw ResourceError("exact pmf needs a Fourier grid above " + std::to_string(options.max_grid) +
                                " points; raise the budget or accept a larger error (alias target " +
                                std::to_string(options.alias_target) + ", pruning epsilon " +
                                std::to_string(options.prune_epsilon) + ")");
        }
    }
    const std::int64_t L = grid;
    const std::int64_t M2 = 2 * L;
    std::vector<double> sin_table(static_cast<std::size_t>(M2));
    for (std::int64_t x = 0; x < M2; ++x)
        sin_table[static_cast<std::size_t>(x)] = std::sin(std::numbers::pi * static_cast<double>(x) / static_cast<double>(L));
    auto sin_at = [&](std::int64_t x) { return sin_table[static_cast<std::size_t>(x)]; };
    auto cos_at = [&](std::int64_t x) { return sin_table[static_cast<std::size_t>((x + L / 2) & (M2 - 1))]; };

    const std::int64_t half = L / 2;
    fftw_complex* spectrum = fftw_alloc_complex(static_cast<std::size_t>(half + 1));
    double* values = fftw_alloc_real(static_cast<std::size_t>(L));
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(L), spectrum, values, FFTW_ESTIMATE);

    struct RunResidues {
        const std::vector<double>* coef;
        double mult, count, constant;
        std::int64_t step, first, span, centre;
    };
    std::vector<RunResidues> residues;
    for (const auto& t : terms) {
        if (t.a <= 0.0) continue;
        for (const auto& run : t.profile.runs) {
            RunResidues q;
            q.coef = &t.coef;
            q.mult = static_cast<double>(run.mult);
            q.count = static_cast<double>(run.count);
            q.constant = q.count * t.log_c;
            q.step = positive_mod(run.step, M2);
            q.first = positive_mod(2 * run.first, M2);
            q.span = positive_mod(q.step * (run.count % M2), M2);
            q.centre = positive_mod(2 * run.first + positive_mod(run.step * (run.count - 1), M2), M2);
            residues.push_back(q);
        }
    }
    // M2 is a power of two, so residues advance by masked additions.
    const std::int64_t mask = M2 - 1;
    for (std::int64_t r = 0; r <= half; ++r) {
        double log_phi = 0.0;
        for (const auto& q : residues) {
            const std::int64_t d_den = (r * q.step) & mask;
            const std::int64_t d_first = (r * q.first) & mask;
            const std::int64_t d_centre = (r * q.centre) & mask;
            const std::int64_t d_span = (r * q.span) & mask;
            std::int64_t den = 0, fx = 0, cx = 0, sx = 0;
            double series = 0.0;
            for (const double c : *q.coef) {
                den = (den + d_den) & mask;
                fx = (fx + d_first) & mask;
                cx = (cx + d_centre) & mask;
                sx = (sx + d_span) & mask;
                const double ap = (den & (L - 1)) == 0 ? q.count * cos_at(fx) : cos_at(cx) * sin_at(sx) / sin_at(den);
                series += c * ap;
            }
            log_phi += q.mult * (q.constant + 2.0 * series);
        }
        spectrum[r][0] = std::exp(log_phi);
        spectrum[r][1] = 0.0;
    }
    fftw_execute(plan);

    IntegerPmf out;
    out.alias_bound = alias;
    std::vector<double> centred(static_cast<std::size_t>(L - 1));
    const double scale = 1.0 / static_cast<double>(L);
    for (std::int64_t j = 0; j < half; ++j) {
        const double pos = values[j] * scale;
        const double neg = values[(L - j) % L] * scale;
        const double sym = 0.5 * (pos + neg);
        centred[static_cast<std::size_t>(half - 1 + j)] = sym;
        centred[static_cast<std::size_t>(half - 1 - j)] = sym;
    }
    out.pruned_mass += std::abs(values[half] * scale);
    fftw_destroy_plan(plan);
    fftw_free(spectrum);
    fftw_free(values);

    for (auto& v : centred) {
        if (v < options.prune_epsilon) {
            out.pruned_mass += std::abs(v);
            v = 0.0;
        }
    }
    std::size_t lo = 0;
    while (lo < centred.size() && centred[lo] == 0.0) ++lo;
    std::size_t hi = centred.size();
    while (hi > lo && centred[hi - 1] == 0.0) --hi;
    if (lo == hi) throw ResourceError("exact pmf pruned to nothing; lower the pruning epsilon");
    out.offset = static_cast<std::int64_t>(lo) - (half - 1);
    out.mass.assign(centred.begin() + static_cast<std::ptrdiff_t>(lo), centred.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

std::vector<ScaleTerm> walk_terms(const FieldSpec& spec, std::int64_t n) {
    std::vector<ScaleTerm> terms;
    for (int k = spec.k_min; k <= spec.k_max; ++k)
        terms.push_back(make_term(scale_params(k).alpha2, coefficient_profile(k, n)));
    return terms;
}

void require_unconditioned(const FieldSpec& spec) {
    spec.validate();
    if (!spec.overrides.empty())
        throw DomainError("exact laws need an unconditioned spec (no forced field values)");
}

IntegerPmf apply_doubling(IntegerPmf pmf, bool doubling) {
    if (doubling) {
        pmf.offset *= 2;
        pmf.stride *= 2;
    }
    return pmf;
}

}  // namespace

std::int64_t CoefficientProfile::max_abs() const {
    std::int64_t m = 0;
    for (const auto& run : runs) m = std::max({m, std::abs(run.first), std::abs(run_last(run))});
    return m;
}

std::int64_t CoefficientProfile::atom_count() const {
    std::int64_t total = 0;
    for (const auto& run : runs) total += run.count * run.mult;
    return total;
}

double CoefficientProfile::sum_squares() const {
    double total = 0.0;
    for (const auto& run : runs) {
        const double u = static_cast<double>(run.count);
        const double a = static_cast<double>(run.first);
        const double s = static_cast<double>(run.step);
        const double sum = u * a * a + a * s * u * (u - 1.0) + s * s * (u - 1.0) * u * (2.0 * u - 1.0) / 6.0;
        total += static_cast<double>(run.mult) * sum;
    }
    return total;
}

std::vector<std::int64_t> weight_profile(std::int64_t n, std::int64_t p) {
    if (n < 1 || p < 1) throw DomainError("weight profile needs n >= 1 and p >= 1");
    std::vector<std::int64_t> w(static_cast<std::size_t>(n + p - 1));
    for (std::int64_t m = 0; m < n + p - 1; ++m)
        w[static_cast<std::size_t>(m)] = std::min(m, n - 1) - std::max<std::int64_t>(0, m - p + 1) + 1;
    return w;
}

CoefficientProfile coefficient_profile(int k, std::int64_t n) {
    const auto sp = scale_params(k);
    CoefficientProfile prof;
    prof.n = n;
    prof.k = k;
    prof.p = sp.p;
    prof.lag_log2 = sp.lag_log2;
    if (n < 0) throw DomainError("coefficient profile needs n >= 0");
    if (n == 0) return prof;
    prof.overlapping = sp.lag_fits() && sp.d() < n + sp.p;
    if (prof.overlapping) {
        const auto w = weight_profile(n, sp.p);
        const std::int64_t width = static_cast<std::int64_t>(w.size());
        const std::int64_t d = sp.d();
        prof.coefficients.assign(static_cast<std::size_t>(width + d), 0);
        for (std::int64_t m = 0; m < width; ++m) {
            prof.coefficients[static_cast<std::size_t>(m)] += w[static_cast<std::size_t>(m)];
            prof.coefficients[static_cast<std::size_t>(m + d)] -= w[static_cast<std::size_t>(m)];
        }
        prof.runs = runs_of(prof.coefficients);
    } else {
        // Two disjoint trapezoids of opposite sign: values 1..r-1 twice each, r repeated |n-p|+1 times.
        const std::int64_t r = std::min(n, sp.p);
        if (r > 1) prof.runs.push_back({1, 1, r - 1, 4});
        prof.runs.push_back({r, 0, std::abs(n - sp.p) + 1, 2});
    }
    return prof;
}

double IntegerPmf::at(std::int64_t j) const {
    const std::int64_t rel = j - offset;
    if (rel < 0 || rel % stride != 0) return 0.0;
    const std::int64_t idx = rel / stride;
    if (idx >= static_cast<std::int64_t>(mass.size())) return 0.0;
    return mass[static_cast<std::size_t>(idx)];
}

double IntegerPmf::total() const {
    double t = 0.0;
    for (double m : mass) t += m;
    return t;
}

double IntegerPmf::mean() const {
    double t = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
        t += mass[i] * static_cast<double>(offset + stride * static_cast<std::int64_t>(i));
    return t;
}

double IntegerPmf::variance() const {
    const double mu = mean();
    double t = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double x = static_cast<double>(offset + stride * static_cast<std::int64_t>(i)) - mu;
        t += mass[i] * x * x;
    }
    return t;
}

double IntegerPmf::interval(std::int64_t lo, std::int64_t hi) const {
    double t = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const std::int64_t x = offset + stride * static_cast<std::int64_t>(i);
        if (x >= lo && x <= hi) t += mass[i];
    }
    return t;
}

IntegerPmf point_mass(std::int64_t at) {
    IntegerPmf pmf;
    pmf.offset = at;
    pmf.mass = {1.0};
    return pmf;
}

IntegerPmf scale_pmf(int k, std::int64_t n, double alpha, const ExactOptions& options) {
    if (alpha < 0.0 || alpha > 1.0 / std::sqrt(2.0)) throw DomainError("amplitude must lie in [0, 1/sqrt(2)]");
    if (n == 0 || alpha == 0.0) return point_mass(0);
    std::vector<ScaleTerm> terms;
    terms.push_back(make_term(alpha * alpha, coefficient_profile(k, std::abs(n))));
    return pmf_from_terms(terms, options);
}

IntegerPmf walk_pmf(const FieldSpec& spec, std::int64_t n, const ExactOptions& options) {
    require_unconditioned(spec);
    if (n == 0) return point_mass(0);
    if (spec.fill) {
        if (*spec.fill == 0) return point_mass(0);
        CocycleEvaluator ev(spec);
        return point_mass(ev.sum(n)[0]);
    }
    // S_{-n} has the law of -S_n, which is that of S_n by symmetry.
    return apply_doubling(pmf_from_terms(walk_terms(spec, std::abs(n)), options), spec.doubling);
}

Pmf2D walk_pmf_2d(const FieldSpec& spec, std::int64_t n, const ExactOptions& options) {
    if (spec.dimension != 2) throw DomainError("walk_pmf_2d needs a 2-D spec");
    require_unconditioned(spec);
    if (spec.fill && *spec.fill != 0) {
        CocycleEvaluator ev(spec);
        const auto s = ev.sum(n);
        return Pmf2D{point_mass(s[0]), point_mass(s[1])};
    }
    // Coordinate families are independent with identical laws.
    const auto one = walk_pmf(spec, n, options);
    return Pmf2D{one, one};
}

double walk_variance(const FieldSpec& spec, std::int64_t n) {
    if (n == 0) return 0.0;
    const double v = terms_variance(walk_terms(spec, std::abs(n)));
    return spec.doubling ? 4.0 * v : v;
}

// ---------------------------------------------------------------------------

Rational RationalPmf::at(std::int64_t j) const {
    const std::int64_t rel = j - offset;
    if (rel < 0 || rel % stride != 0) return Rational(0);
    const std::int64_t idx = rel / stride;
    if (idx >= static_cast<std::int64_t>(mass.size())) return Rational(0);
    return mass[static_cast<std::size_t>(idx)];
}

Rational RationalPmf::total() const {
    Rational t = 0;
    for (const auto& m : mass) t += m;
    return t;
}

Rational rational_alpha2(int k) {
    if (k == 1) return Rational(1, 4);
    if (k == 2) return Rational(1, 32);
    throw DomainError("alpha_k^2 is irrational for k = " + std::to_string(k) + "; rational mode covers k <= 2");
}

RationalPmf rational_walk_pmf(const FieldSpec& spec, std::int64_t n) {
    require_unconditioned(spec);
    if (spec.k_max > 2) throw DomainError("rational mode covers k_max <= 2");
    if (spec.fill && *spec.fill != 0) throw DomainError("rational mode needs random or all-zero fields");
    std::map<std::int64_t, Rational> dist{{0, Rational(1)}};
    if (n != 0 && !spec.fill) {
        for (int k = spec.k_min; k <= spec.k_max; ++k) {
            const Rational a = rational_alpha2(k);
            const Rational half = a / 2;
            const Rational stay = 1 - a;
            const auto prof = coefficient_profile(k, std::abs(n));
            for (const auto& run : prof.runs)
                for (std::int64_t u = 0; u < run.count; ++u) {
                    const std::int64_t c = run.first + run.step * u;
                    if (c == 0) continue;
                    for (std::int64_t rep = 0; rep < run.mult; ++rep) {
                        std::map<std::int64_t, Rational> next;
                        for (const auto& [x, m] : dist) {
                            next[x] += stay * m;
                            next[x + c] += half * m;
                            next[x - c] += half * m;
                        }
                        dist = std::move(next);
                    }
                }
        }
    }
    RationalPmf out;
    const std::int64_t factor = spec.doubling ? 2 : 1;
    out.stride = factor;
    out.offset = dist.begin()->first * factor;
    const std::int64_t lo = dist.begin()->first;
    const std::int64_t hi = dist.rbegin()->first;
    out.mass.assign(static_cast<std::size_t>(hi - lo + 1), Rational(0));
    for (const auto& [x, m] : dist) out.mass[static_cast<std::size_t>(x - lo)] = m;
    return out;
}

// ---------------------------------------------------------------------------

double lclt_sigma2() { return 2.0 * std::log(2.0) * std::log(2.0); }

LcltReport lclt_deviation(const IntegerPmf& pmf, std::int64_t n, double sigma2) {
    if (n < 1) throw DomainError("LCLT deviation needs n >= 1");
    LcltReport rep;
    rep.n = n;
    rep.dimension = 1;
    rep.sigma2 = sigma2;
    rep.scaling = std::sqrt(static_cast<double>(n));
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma2);
    const double spread = 2.0 * static_cast<double>(n) * sigma2;
    for (std::int64_t j = pmf.min_support() - 1; j <= pmf.max_support() + 1; ++j) {
        const double g = norm * std::exp(-static_cast<double>(j) * static_cast<double>(j) / spread);
        const double dev = std::abs(rep.scaling * pmf.at(j) - g);
        if (dev > rep.deviation) {
            rep.deviation = dev;
            rep.argmax = j;
        }
    }
    rep.peak = rep.scaling * pmf.at(0);
    return rep;
}

LcltReport lclt_deviation(const Pmf2D& pmf, std::int64_t n, double sigma2) {
    if (n < 1) throw DomainError("LCLT deviation needs n >= 1");
    LcltReport rep;
    rep.n = n;
    rep.dimension = 2;
    rep.sigma2 = sigma2;
    rep.scaling = static_cast<double>(n);
    const std::int64_t extent = std::max({std::abs(pmf.first.min_support()), std::abs(pmf.first.max_support()),
                                          std::abs(pmf.second.min_support()), std::abs(pmf.second.max_support())}) +
                                1;
    const std::int64_t h = std::min<std::int64_t>(2048, extent);
    rep.window = h;
    const double spread = 2.0 * static_cast<double>(n) * sigma2;
    const double norm = 1.0 / (2.0 * std::numbers::pi * sigma2);
    std::vector<double> g(static_cast<std::size_t>(2 * h + 1));
    std::vector<double> p1(g.size());
    std::vector<double> p2(g.size());
    for (std::int64_t j = -h; j <= h; ++j) {
        const auto idx = static_cast<std::size_t>(j + h);
        g[idx] = std::exp(-static_cast<double>(j) * static_cast<double>(j) / spread);
        p1[idx] = pmf.first.at(j);
        p2[idx] = pmf.second.at(j);
    }
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b) {
            const double dev = std::abs(rep.scaling * p1[a] * p2[b] - norm * g[a] * g[b]);
            if (dev > rep.deviation) {
                rep.deviation = dev;
                rep.argmax = static_cast<std::int64_t>(a) - h;
            }
        }
    rep.peak = rep.scaling * pmf.at(0, 0);
    return rep;
}

double box_probability(const IntegerPmf& pmf, std::int64_t M) {
    if (M < 0) throw DomainError("box radius must be >= 0");
    return pmf.interval(-M, M);
}

double box_probability(const Pmf2D& pmf, std::int64_t M) {
    if (M < 0) throw DomainError("box radius must be >= 0");
    return pmf.first.interval(-M, M) * pmf.second.interval(-M, M);
}

}  // namespace drlab
