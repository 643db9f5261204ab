#include "drlab/range_permutation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "drlab/errors.hpp"
#include "drlab/exact_distribution.hpp"

namespace drlab {
namespace {

bool mul_overflows(std::int64_t a, std::int64_t b, std::int64_t& out) { return __builtin_mul_overflow(a, b, &out); }
bool add_overflows(std::int64_t a, std::int64_t b, std::int64_t& out) { return __builtin_add_overflow(a, b, &out); }

bool is_even_point(Lattice v) { return v[0] % 2 == 0 && v[1] % 2 == 0; }
bool is_origin(Lattice v) { return v[0] == 0 && v[1] == 0; }

// p_k and alpha_k^2 as doubles, valid beyond the integer range of scale_params.
double scale_p(int k) { return std::ldexp(1.0, k) + (k % 2 == 1 ? 1.0 : 0.0); }

double scale_alpha2(int k) {
    if (k <= 61) return scale_params(k).alpha2;
    const double p = scale_p(k);
    const double kk = static_cast<double>(k);
    return 1.0 / (p * p * kk * std::log2(kk));
}

}  // namespace

PolynomialSpec PolynomialSpec::monomial(int degree) {
    if (degree < 1) throw DomainError("polynomial degree must be >= 1");
    PolynomialSpec p;
    p.coefficients.assign(static_cast<std::size_t>(degree) + 1, 0);
    p.coefficients.back() = 1;
    return p;
}

PolynomialSpec PolynomialSpec::parse(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw DomainError("empty polynomial");
    PolynomialSpec out;
    out.coefficients.assign(1, 0);
    std::size_t pos = 0;
    while (pos < s.size()) {
        int sign = 1;
        if (s[pos] == '+' || s[pos] == '-') {
            sign = s[pos] == '-' ? -1 : 1;
            ++pos;
        }
        std::int64_t coef = 1;
        bool has_coef = false;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos > start) {
            coef = std::stoll(s.substr(start, pos - start));
            has_coef = true;
        }
        if (pos < s.size() && s[pos] == '*') ++pos;
        int power = 0;
        if (pos < s.size() && s[pos] == 'n') {
            ++pos;
            power = 1;
            if (pos < s.size() && s[pos] == '^') {
                ++pos;
                start = pos;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                if (pos == start) throw DomainError("bad exponent in polynomial '" + text + "'");
                power = std::stoi(s.substr(start, pos - start));
            }
        } else if (!has_coef) {
            throw DomainError("cannot parse polynomial '" + text + "'");
        }
        if (pos < s.size() && s[pos] != '+' && s[pos] != '-')
            throw DomainError("cannot parse polynomial '" + text + "'");
        if (power > 8) throw DomainError("polynomial degree above 8");
        if (out.coefficients.size() <= static_cast<std::size_t>(power))
            out.coefficients.resize(static_cast<std::size_t>(power) + 1, 0);
        out.coefficients[static_cast<std::size_t>(power)] += sign * coef;
    }
    while (out.coefficients.size() > 1 && out.coefficients.back() == 0) out.coefficients.pop_back();
    if (out.coefficients[0] != 0) throw DomainError("polynomial must vanish at 0: '" + text + "'");
    if (out.coefficients.size() < 2) throw DomainError("polynomial must be nonconstant: '" + text + "'");
    return out;
}

int PolynomialSpec::degree() const { return static_cast<int>(coefficients.size()) - 1; }

int PolynomialSpec::leading_sign() const { return coefficients.back() > 0 ? 1 : -1; }

std::int64_t PolynomialSpec::operator()(std::int64_t n) const {
    std::int64_t acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        if (mul_overflows(acc, n, acc) || add_overflows(acc, *it, acc))
            throw DomainError("polynomial " + to_string() + " overflows at n = " + std::to_string(n));
    }
    return acc;
}

std::string PolynomialSpec::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (int d = degree(); d >= 0; --d) {
        const std::int64_t c = coefficients[static_cast<std::size_t>(d)];
        if (c == 0) continue;
        if (!first) os << (c > 0 ? "+" : "-");
        else if (c < 0) os << "-";
        const std::int64_t a = c < 0 ? -c : c;
        if (a != 1 || d == 0) os << a;
        if (d >= 1) os << "n";
        if (d >= 2) os << "^" << d;
        first = false;
    }
    return first ? "0" : os.str();
}

void PolynomialSpec::validate(std::int64_t N) const {
    if (coefficients.empty() || coefficients[0] != 0) throw DomainError("polynomial must vanish at 0");
    if (degree() < 1 || coefficients.back() == 0) throw DomainError("polynomial must be nonconstant");
    std::vector<std::int64_t> values;
    values.reserve(static_cast<std::size_t>(std::max<std::int64_t>(N, 0)));
    for (std::int64_t n = 1; n <= N; ++n) values.push_back((*this)(n));
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end())
        throw DomainError("polynomial " + to_string() + " is not injective on [1, " + std::to_string(N) + "]");
}

RangeTable build_range(CocycleEvaluator& y, const PolynomialSpec& p, std::int64_t N) {
    if (N < 1) throw DomainError("range horizon must be >= 1");
    p.validate(N);
    for (std::int64_t m = 1; m <= N; ++m) {
        const std::int64_t t = p(m);
        if (t > kRangeTimeBudget || t < -kRangeTimeBudget)
            throw ResourceError("p(" + std::to_string(m) + ") = " + std::to_string(t) + " exceeds the sum budget");
    }
    RangeTable table;
    table.p = p;
    table.N = N;
    table.values.reserve(static_cast<std::size_t>(N));
    std::set<Lattice> seen;
    for (std::int64_t m = 1; m <= N; ++m) {
        const Lattice s = y.sum(p(m));
        table.values.push_back(s);
        const bool is_new = seen.insert(s).second;
        if (is_new) table.range.push_back(s);
        if (is_new && !is_origin(s)) table.fresh.push_back(m);
    }
    return table;
}

RangeTable build_range(const FieldSpec& y, const PolynomialSpec& p, std::int64_t N) {
    CocycleEvaluator ev(y);
    return build_range(ev, p, N);
}

std::vector<std::int64_t> curly_K(const RangeTable& r1, const RangeTable& r2) {
    std::vector<std::int64_t> out;
    std::set_intersection(r1.fresh.begin(), r1.fresh.end(), r2.fresh.begin(), r2.fresh.end(),
                          std::back_inserter(out));
    return out;
}

std::vector<std::int64_t> curly_K(const FieldSpec& y, const PolynomialSpec& p1, const PolynomialSpec& p2,
                                  std::int64_t N) {
    CocycleEvaluator ev(y);
    const RangeTable r1 = build_range(ev, p1, N);
    const RangeTable r2 = build_range(ev, p2, N);
    return curly_K(r1, r2);
}

double density(const std::vector<std::int64_t>& indices, std::int64_t N) {
    if (N <= 0) return 0.0;
    const auto count = std::count_if(indices.begin(), indices.end(),
                                     [N](std::int64_t n) { return n >= 1 && n <= N; });
    return static_cast<double>(count) / static_cast<double>(N);
}

PermutationView::PermutationView(const RangeTable& r1, const RangeTable& r2) : N_(std::min(r1.N, r2.N)) {
    for (std::int64_t n : curly_K(r1, r2)) {
        if (n > N_) break;
        const Lattice a = r1.values[static_cast<std::size_t>(n - 1)];
        const Lattice b = r2.values[static_cast<std::size_t>(n - 1)];
        if (!is_even_point(a) || !is_even_point(b))
            throw DomainError("permutation tables need a doubled field (values in 2Z^2)");
        K_.push_back(n);
        images_.emplace(n, std::make_pair(a, b));
        by_s1_.emplace(a, n);
        by_s2_.emplace(b, n);
    }
}

PermutationView::PermutationView(const FieldSpec& y, const PolynomialSpec& p1, const PolynomialSpec& p2,
                                 std::int64_t N) {
    CocycleEvaluator ev(y);
    *this = PermutationView(build_range(ev, p1, N), build_range(ev, p2, N));
}

Lattice PermutationView::s1(std::int64_t n) const {
    auto it = images_.find(n);
    if (it == images_.end()) throw HorizonError("index " + std::to_string(n) + " is not in K_y within the horizon");
    return it->second.first;
}

Lattice PermutationView::s2(std::int64_t n) const {
    auto it = images_.find(n);
    if (it == images_.end()) throw HorizonError("index " + std::to_string(n) + " is not in K_y within the horizon");
    return it->second.second;
}

Classification PermutationView::classify(Lattice v) const {
    if (is_origin(v)) return {PointClass::origin, 0};
    if (!is_even_point(v)) return {PointClass::other, 0};
    auto it = by_s2_.find(v);
    if (it != by_s2_.end()) return {PointClass::s2_member, it->second};
    return {PointClass::unresolved, 0};
}

Classification PermutationView::classify_image(Lattice w) const {
    if (is_origin(w)) return {PointClass::origin, 0};
    if (!is_even_point(w)) return {PointClass::other, 0};
    auto it = by_s1_.find(w);
    if (it != by_s1_.end()) return {PointClass::s2_member, it->second};
    return {PointClass::unresolved, 0};
}

namespace {

[[noreturn]] void unresolved(Lattice v) {
    throw HorizonError("point (" + std::to_string(v[0]) + ", " + std::to_string(v[1]) +
                       ") is not decided within the horizon");
}

}  // namespace

Lattice PermutationView::pi_forward(Lattice v) const {
    const Classification c = classify(v);
    switch (c.kind) {
        case PointClass::origin:
        case PointClass::other:
            return v;
        case PointClass::s2_member:
            return images_.at(c.index).first;
        case PointClass::unresolved:
            break;
    }
    unresolved(v);
}

Lattice PermutationView::pi_inverse(Lattice w) const {
    const Classification c = classify_image(w);
    switch (c.kind) {
        case PointClass::origin:
        case PointClass::other:
            return w;
        case PointClass::s2_member:
            return images_.at(c.index).second;
        case PointClass::unresolved:
            break;
    }
    unresolved(w);
}

Pullback PermutationView::forward(Lattice v) const {
    const Classification c = classify(v);
    return {pi_forward(v), c.kind == PointClass::s2_member};
}

Pullback PermutationView::inverse(Lattice w) const {
    const Classification c = classify_image(w);
    return {pi_inverse(w), c.kind == PointClass::s2_member};
}

int twist_bit(const PermutationView& view, const LazyConfig& config, Lattice v) {
    const Pullback p = view.forward(v);
    const int bit = omega_at(config, p.source);
    return p.complement ? 1 - bit : bit;
}

int tilde_S_origin_bit(CocycleEvaluator& y, const PermutationView& view, const LazyConfig& config,
                       std::int64_t n) {
    if (n == 0) return omega_at(config, Lattice{0, 0});
    return twist_bit(view, config, y.sum(n));
}

bool a_n_membership(const std::vector<FieldSpec>& ybar, const PolynomialSpec& p1, const PolynomialSpec& p2,
                    std::int64_t n) {
    for (const FieldSpec& y : ybar) {
        const auto K = curly_K(y, p1, p2, n);
        if (!K.empty() && K.back() == n) return true;
    }
    return false;
}

std::vector<ComplementEstimate> complement_profile(const FieldSpec& base, const PolynomialSpec& p1,
                                                   const PolynomialSpec& p2, std::int64_t H,
                                                   std::int64_t samples) {
    if (H < 1) throw DomainError("horizon must be >= 1");
    if (samples < 1) throw DomainError("samples must be >= 1");
    std::vector<std::int64_t> misses(static_cast<std::size_t>(H) + 1, 0);
    for (std::int64_t s = 0; s < samples; ++s) {
        FieldSpec y = base;
        y.seed = base.seed + static_cast<std::uint64_t>(s);
        CocycleEvaluator ev(y);
        const auto K = curly_K(build_range(ev, p1, H), build_range(ev, p2, H));
        std::vector<char> in(static_cast<std::size_t>(H) + 1, 0);
        for (std::int64_t n : K) in[static_cast<std::size_t>(n)] = 1;
        for (std::int64_t n = 1; n <= H; ++n)
            if (!in[static_cast<std::size_t>(n)]) ++misses[static_cast<std::size_t>(n)];
    }
    std::vector<ComplementEstimate> out;
    out.reserve(static_cast<std::size_t>(H));
    const double S = static_cast<double>(samples);
    for (std::int64_t n = 1; n <= H; ++n) {
        ComplementEstimate e;
        e.n = n;
        e.q = static_cast<double>(misses[static_cast<std::size_t>(n)]) / S;
        e.se = std::sqrt(e.q * (1.0 - e.q) / S);
        e.power = e.q;
        e.power_se = e.se;
        out.push_back(e);
    }
    return out;
}

std::vector<ComplementEstimate> with_power(std::vector<ComplementEstimate> profile, int k) {
    if (k < 1) throw DomainError("power k must be >= 1");
    for (auto& e : profile) {
        e.power = std::pow(e.q, k);
        e.power_se = k * std::pow(e.q, k - 1) * e.se;
    }
    return profile;
}

ComplementEstimate estimate_A_complement(const FieldSpec& base, const PolynomialSpec& p1,
                                         const PolynomialSpec& p2, std::int64_t n, int k,
                                         std::int64_t samples) {
    auto profile = with_power(complement_profile(base, p1, p2, n, samples), k);
    return profile.back();
}

ChooseKReport choose_k(const std::vector<ComplementEstimate>& profile, double margin, int k_limit,
                       std::int64_t fit_from) {
    if (profile.empty()) throw DomainError("choose_k needs a nonempty profile");
    if (margin < 0.0 || margin >= 1.0) throw DomainError("margin must lie in [0, 1)");
    ChooseKReport report;
    report.margin = margin;
    const std::int64_t H = profile.back().n;
    report.fit_from = std::min(fit_from, std::max<std::int64_t>(1, H / 2));
    for (const auto& e : profile) {
        if (e.n < report.fit_from) continue;
        report.envelope_c = std::max(report.envelope_c, e.q * std::sqrt(static_cast<double>(e.n)) / std::numbers::pi);
    }
    const double pc = std::numbers::pi * report.envelope_c;
    for (int k = 3; k <= k_limit; ++k) {
        ChooseKReport::Row row;
        row.k = k;
        for (const auto& e : profile) row.partial += std::pow(e.q, k);
        const double half = 0.5 * k;
        row.tail = pc > 0.0 ? std::pow(pc, k) * std::pow(static_cast<double>(H), 1.0 - half) / (half - 1.0) : 0.0;
        row.total = row.partial + row.tail;
        report.rows.push_back(row);
        if (row.total < 1.0 - margin) {
            report.k = k;
            report.success = true;
            report.terms = with_power(profile, k);
            return report;
        }
    }
    report.terms = with_power(profile, k_limit);
    std::ostringstream os;
    os << "no k <= " << k_limit << " brings the partial sum below " << 1.0 - margin << "; totals:";
    for (const auto& r : report.rows) os << " k=" << r.k << ":" << r.total;
    throw ParametersError(os.str());
}

std::int64_t z_lower_bound(std::int64_t N) {
    std::int64_t total = 0;
    for (int k = 1; scale_params(k).p <= 2 * N; ++k) {
        const CoefficientProfile prof = coefficient_profile(k, 1);
        for (const auto& run : prof.runs) {
            for (std::int64_t r = 0; r < run.count; ++r) {
                const std::int64_t c = run.first + r * run.step;
                total += (c < 0 ? -c : c) * run.mult;
            }
        }
    }
    return -total;
}

double log_scale_event_mass(int k, std::int64_t N, bool lifted) {
    const double p = scale_p(k);
    const double a2 = scale_alpha2(k);
    const double span = p + 2.0 * static_cast<double>(N);
    if (lifted) return span * (std::log(0.5 * a2) + std::log1p(-a2));
    // Both windows [0, span) and [d, d + span) are zeroed; they overlap when d < span.
    double distinct = 2.0 * span;
    if (k <= 61) {
        const auto sp = scale_params(k);
        if (sp.lag_fits() && static_cast<double>(sp.d()) < span) distinct = static_cast<double>(sp.d()) + span;
    }
    return distinct * std::log1p(-a2);
}

CertificationRun certify_distinct(const FieldSpec& spec, std::int64_t N, std::int64_t C, std::int64_t samples,
                                  int extra_scales) {
    if (spec.dimension != 2) throw DomainError("certification runs on 2-D fields");
    if (C < 1) throw DomainError("C must be >= 1");
    if (N < 1) throw DomainError("N must be >= 1");
    const ConditioningPlan plan = make_distinct_range_plan(N, C, spec.k_max, 1);
    FieldSpec conditioned = conditioned_spec(spec, plan);

    CertificationRun run;
    run.N = N;
    run.C = C;
    run.M = z_lower_bound(N);
    run.kappa = plan.kappa;
    run.K = plan.K;
    run.k_max = spec.k_max;
    run.samples = samples;

    const auto lifted = [&](int k) { return k >= plan.K && static_cast<std::int64_t>(k) < plan.K + C; };
    for (int k = std::max(plan.kappa, spec.k_min); k <= spec.k_max; ++k) {
        ScaleCertificate sc;
        sc.k = k;
        sc.lifted = lifted(k);
        sc.log_mass = log_scale_event_mass(k, N, sc.lifted);
        sc.log_bound = -2.0 / scale_p(k);
        run.log_event_mass += sc.log_mass;
        run.scales.push_back(sc);
    }
    const std::int64_t first_checked = plan.K + C;
    for (std::int64_t k = first_checked; k < first_checked + extra_scales; ++k) {
        ScaleCertificate sc;
        sc.k = static_cast<int>(k);
        sc.lifted = false;
        sc.log_mass = log_scale_event_mass(sc.k, N, false);
        sc.log_bound = -2.0 / scale_p(sc.k);
        sc.checked = true;
        sc.holds = sc.log_mass >= sc.log_bound;
        run.bound_holds = run.bound_holds && sc.holds;
        auto it = std::find_if(run.scales.begin(), run.scales.end(), [&](const auto& s) { return s.k == sc.k; });
        if (it != run.scales.end()) *it = sc;
        else run.scales.push_back(sc);
    }

    for (std::int64_t s = 0; s < samples; ++s) {
        FieldSpec y = conditioned;
        y.seed = spec.seed + static_cast<std::uint64_t>(s);
        CocycleEvaluator ev(y);
        bool y_ok = true;
        for (std::int64_t n = 0; n < 2 * N; ++n) {
            std::int64_t Y = 0;
            for (int k = std::max(plan.kappa, y.k_min); k <= y.k_max; ++k) Y += ev.f_k(k, 1, n);
            if (Y <= C) y_ok = false;
        }
        if (!y_ok) ++run.y_violations;
        const PathSample path = ev.path(0, 2 * N);
        bool chain = true;
        for (std::int64_t n = 0; n < 2 * N; ++n)
            if (!(path.at(n) < path.at(n + 1))) chain = false;
        if (!chain) ++run.goal_violations;
        std::set<Lattice> centred;
        const Lattice mid = path.at(N);
        for (std::int64_t j = 0; j <= 2 * N; ++j)
            centred.insert(Lattice{path.at(j)[0] - mid[0], path.at(j)[1] - mid[1]});
        if (static_cast<std::int64_t>(centred.size()) != 2 * N + 1) ++run.distinct_violations;
        if (s == 0) run.example_path = path.values;
    }
    return run;
}

}  // namespace drlab
