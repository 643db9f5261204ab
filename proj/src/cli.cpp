#include "drlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace drlab {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(out)) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a real number, got '" + text + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
    return out;
}

std::string real_text(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string list_text(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

PolynomialSpec polynomial(const std::string& key, const std::string& text) {
    try {
        return PolynomialSpec::parse(text);
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

FieldSpec field_spec(const RunConfig& cfg) {
    FieldSpec s;
    s.dimension = *cfg.dimension;
    s.k_min = cfg.k_min;
    s.k_max = *cfg.k_max;
    s.doubling = *cfg.doubling;
    s.seed = cfg.seed;
    s.fill = cfg.fill;
    return s;
}

struct Outputs {
    Json result = Json::object();
    std::vector<DecayRow> decay;
    std::vector<std::pair<std::string, std::string>> plots;  // file name, CSV body
    bool passed = false;
    std::string scope;
};

std::string config_comment(const RunConfig& cfg) {
    std::string line = "# " + std::string(kReportVersion);
    for (const auto& [k, v] : cfg.entries()) line += " " + k + "=" + v;
    return line + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ResourceError("cannot write " + path.string());
    f << body;
}

// ---------------------------------------------------------------------------

Outputs run_lclt(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    const FieldSpec spec = field_spec(cfg);
    const double sigma2 = lclt_sigma2();
    const double limit = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma2);
    Json rows = Json::array();
    bool mass_ok = true, symmetric = true, sup_ok = true;
    double lo = INFINITY, hi = 0.0;
    IntegerPmf last;
    for (const std::int64_t n : cfg.n_grid) {
        const IntegerPmf pmf = walk_pmf(spec, n);
        const double scale = spec.dimension == 1 ? std::sqrt(static_cast<double>(n)) : static_cast<double>(n);
        const double mass = spec.dimension == 1 ? pmf.total() : pmf.total() * pmf.total();
        bool sym = pmf.min_support() == -pmf.max_support();
        for (std::size_t i = 0; sym && i < pmf.mass.size(); ++i) sym = pmf.mass[i] == pmf.mass[pmf.mass.size() - 1 - i];
        double peak = 0.0;
        for (double m : pmf.mass) peak = std::max(peak, m);
        if (spec.dimension == 2) peak *= peak;
        const double p0 = spec.dimension == 1 ? pmf.at(0) : pmf.at(0) * pmf.at(0);
        const double scaled_sup = scale * peak;
        const double scaled0 = scale * p0;
        const LcltReport dev = lclt_deviation(pmf, n, sigma2);
        mass_ok = mass_ok && std::abs(mass - 1.0) <= 1e-9;
        symmetric = symmetric && sym;
        sup_ok = sup_ok && scaled_sup <= 1.0;
        lo = std::min(lo, scaled0);
        hi = std::max(hi, scaled0);
        rows.push_back({{"n", n},
                        {"mass", mass},
                        {"symmetric", sym},
                        {"scaled_sup", scaled_sup},
                        {"scaled_p0", scaled0},
                        {"error_bound", pmf.error_bound()},
                        {"deviation", to_json(dev)}});
        o.decay.push_back({n, scaled0, 0.0, spec.dimension == 1 ? limit : limit * limit});
        log << "lclt n=" << n << " mass=" << real_text(mass) << " scaled_p0=" << real_text(scaled0) << "\n";
        last = pmf;
    }
    const double variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
    o.result = {{"rows", rows},
                {"sigma2", sigma2},
                {"mass_ok", mass_ok},
                {"symmetric", symmetric},
                {"sup_ok", sup_ok},
                {"scaled_p0_variation", variation}};
    o.passed = mass_ok && symmetric && sup_ok && variation < 0.5;
    o.scope = "exact laws of one coordinate; asymptotic LCLT constants are reported, not asserted";
    if (cfg.emit_plot_data) o.plots.push_back({"plot_pmf.csv", pmf_csv(last)});
    return o;
}

Outputs run_recur2(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    Section2Config c;
    c.spec = field_spec(cfg);
    c.H = *cfg.H;
    c.points = *cfg.samples;
    c.pilot = *cfg.pilot;
    c.max_points = 40 * c.points;
    const Section2Result r = exp_section2(c);
    o.result = {{"series", to_json(r.bc)}, {"probe", to_json(r.probe)}};
    for (std::int64_t n = 1; n <= r.bc.H; ++n)
        o.decay.push_back({n, r.bc.a[static_cast<std::size_t>(n - 1)], 0.0,
                           r.bc.scaled_bound * std::pow(static_cast<double>(n), -1.5)});
    o.passed = r.bc.extracted;
    o.scope = "zero joint returns verified up to H on a horizon surrogate of D; emptiness for all n is not decidable numerically";
    log << "recur2 N=" << r.bc.N << " M=" << r.bc.M << " |A|=" << r.probe.points
        << " violations=" << r.probe.violations << " verdict: " << r.bc.verdict << "\n";
    if (cfg.emit_plot_data) {
        std::string body = "n,partial_sum\n";
        for (std::size_t i = 0; i < r.bc.partial_sums.size(); ++i)
            body += std::to_string(i + 1) + "," + real_text(r.bc.partial_sums[i]) + "\n";
        o.plots.push_back({"plot_partial_sums.csv", body});
    }
    return o;
}

Outputs run_recur3(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    const FieldSpec spec = field_spec(cfg);
    const PolynomialSpec p1 = polynomial("p1", cfg.p1);
    const PolynomialSpec p2 = polynomial("p2", cfg.p2);
    const std::int64_t H = *cfg.H;
    const auto profile = complement_profile(spec, p1, p2, H, *cfg.pilot);
    Json choice;
    int k = cfg.k.value_or(0);
    std::vector<ComplementEstimate> terms;
    try {
        const ChooseKReport ck = choose_k(profile, 0.05, 64, std::min<std::int64_t>(64, std::max<std::int64_t>(1, H / 2)));
        choice = to_json(ck);
        if (!cfg.k) {
            k = ck.k;
            terms = ck.terms;
        }
    } catch (const ParametersError& e) {
        choice = {{"success", false}, {"message", e.what()}};
        if (!cfg.k) {
            o.result = {{"choose_k", choice}};
            o.scope = "no k <= 64 brings the complement series below 1";
            log << "recur3: " << e.what() << "\n";
            return o;
        }
    }
    if (terms.empty()) terms = with_power(profile, k);
    double envelope_c = 0.0;
    if (choice.contains("envelope_c")) envelope_c = choice["envelope_c"].get<double>();
    for (const auto& t : terms)
        o.decay.push_back({t.n, t.power, t.power_se,
                           std::pow(std::numbers::pi * envelope_c / std::sqrt(static_cast<double>(t.n)), k)});

    Section3Config c;
    c.spec = spec;
    c.p1 = p1;
    c.p2 = p2;
    c.k = k;
    c.H = H;
    c.samples = *cfg.samples;
    c.max_tries = 20 * c.samples;
    try {
        const TripleProbeReport r = exp_section3(c);
        o.result = {{"choose_k", choice}, {"k", k}, {"probe", to_json(r)}};
        o.passed = r.violations == 0 && r.identity_failures == 0;
        log << "recur3 k=" << k << " samples=" << r.points << " violations=" << r.violations
            << " identity_failures=" << r.identity_failures << "\n";
    } catch (const SamplingError& e) {
        o.result = {{"choose_k", choice}, {"k", k}, {"error", e.what()}};
        log << "recur3: " << e.what() << "\n";
    }
    o.scope = "zero triple memberships up to H on the coverage surrogate; the complement identity makes the emptiness structural";
    if (cfg.emit_plot_data) {
        std::string body = "n,q\n";
        for (const auto& t : profile) body += std::to_string(t.n) + "," + real_text(t.q) + "\n";
        o.plots.push_back({"plot_complement.csv", body});
    }
    return o;
}

Outputs run_gauss(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    GaussianConfig c;
    const std::int64_t H = *cfg.H;
    c.model = cfg.model == "white" ? white_noise_model(H) : power_density_model(*cfg.delta, H);
    if (cfg.C) {
        if (*cfg.C < c.model.C) throw ConfigError("C", "below the fitted decay constant " + real_text(c.model.C));
        c.model.C = *cfg.C;
    }
    const PsdReport psd = validate_psd(c.model, std::min<std::int64_t>(H, 4096));
    c.k = *cfg.k;
    c.c = cfg.c;
    c.d = cfg.d;
    c.H = H;
    c.samples = *cfg.samples;
    c.points = *cfg.points;
    c.seed = cfg.seed;
    c.budget = cfg.budget;
    const GaussianReport r = exp_gaussian(c);
    o.result = to_json(r);
    o.result["model"] = {{"family", c.model.family},
                         {"delta", c.model.delta},
                         {"C", c.model.C},
                         {"quadrature_error", c.model.quadrature_error},
                         {"psd_min_eigenvalue", psd.min_eigenvalue}};
    for (const auto& e : r.triples) o.decay.push_back({e.n, e.estimate, e.se, e.envelope()});
    o.passed = r.passed;
    o.scope = "decay and summability of Gaussian triple probabilities; singular spectral measures are out of scope";
    log << "gauss total=" << real_text(r.summability.total) << " bound_failures=" << r.bound_failures << "\n";
    if (cfg.emit_plot_data) {
        std::string body = "n,estimate,power\n";
        for (std::size_t i = 0; i < r.triples.size(); ++i)
            body += std::to_string(r.triples[i].n) + "," + real_text(r.triples[i].estimate) + "," +
                    real_text(r.powers[i]) + "\n";
        o.plots.push_back({"plot_triples.csv", body});
    }
    return o;
}

Outputs run_mixing(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    MixingConfig c;
    c.spec = field_spec(cfg);
    c.M = cfg.M;
    c.H = *cfg.H;
    c.n_min = std::min<std::int64_t>(64, c.H);
    c.samples = *cfg.samples;
    c.A1 = {1, 1, 0, 0};
    c.A2 = {1, 1, 0, 0};
    c.B1 = {Lattice{0, 0}, 1};
    c.B2 = {Lattice{0, 0}, 1};
    const MixingReport r = mixing_probe(c);
    o.result = to_json(r);
    o.result["cylinders"] = "A1 = A2 = {f_1 = 0 at time 0}, B1 = B2 = {omega(0,0) = 1}";
    for (std::size_t i = 0; i < r.grid.size(); ++i) o.decay.push_back({r.grid[i], r.box[i], 0.0, r.box_error[i]});
    o.passed = r.passed;
    o.scope = "correlation decay of one cylinder pair; weak mixing versus mixing is not separated";
    log << "mixing box(" << r.grid.front() << ")=" << real_text(r.box.front()) << " box(" << r.grid.back()
        << ")=" << real_text(r.box.back()) << " correlation=" << real_text(r.correlation) << "\n";
    if (cfg.emit_plot_data) {
        std::string body = "n,box\n";
        for (std::size_t i = 0; i < r.grid.size(); ++i) body += std::to_string(r.grid[i]) + "," + real_text(r.box[i]) + "\n";
        o.plots.push_back({"plot_box.csv", body});
    }
    return o;
}

Outputs run_certify(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    FieldSpec spec = field_spec(cfg);
    spec.k_max = *cfg.certify_k_max;
    const CertificationRun run = certify_distinct(spec, cfg.certify_N, *cfg.certify_C, *cfg.samples);
    for (const auto& s : run.scales) o.decay.push_back({s.k, s.log_mass, 0.0, s.log_bound});

    const PolynomialSpec p = polynomial("p2", cfg.p2);
    const std::int64_t H = *cfg.H;
    Json density = Json::array();
    std::size_t dense = 0;
    for (const std::uint64_t seed : cfg.seeds) {
        FieldSpec y = field_spec(cfg);
        y.seed = seed;
        const RangeTable t = build_range(y, p, H);
        dense += t.range_density() >= 0.85;
        density.push_back({{"seed", seed}, {"density", t.range_density()}});
    }
    const std::size_t need = (3 * cfg.seeds.size() + 3) / 4;
    const bool density_ok = dense >= need;
    o.result = {{"certification", to_json(run)},
                {"range",
                 {{"p", p.to_string()},
                  {"N", H},
                  {"threshold", 0.85},
                  {"required", need},
                  {"dense", dense},
                  {"seeds", density},
                  {"passed", density_ok}}}};
    o.passed = run.passed() && density_ok;
    o.scope = "certified on conditioned samples and closed-form scale masses up to K + C + 32; density one is monitored at finite N";
    log << "certify-range M=" << run.M << " C=" << run.C << " passed=" << run.passed() << " dense seeds " << dense
        << "/" << cfg.seeds.size() << "\n";
    if (cfg.emit_plot_data) {
        std::string body = "x,y\n";
        for (const auto& v : run.example_path) body += std::to_string(v[0]) + "," + std::to_string(v[1]) + "\n";
        o.plots.push_back({"plot_path.csv", body});
    }
    return o;
}

}  // namespace

// ---------------------------------------------------------------------------

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "command") cfg.command = v;
    else if (key == "dimension") cfg.dimension = parse_number<int>(key, v);
    else if (key == "k_min") cfg.k_min = parse_number<int>(key, v);
    else if (key == "k_max") cfg.k_max = parse_number<int>(key, v);
    else if (key == "doubling") cfg.doubling = parse_bool(key, v);
    else if (key == "fill") cfg.fill = parse_number<int>(key, v);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "seeds") cfg.seeds = parse_list<std::uint64_t>(key, v);
    else if (key == "p1") cfg.p1 = v;
    else if (key == "p2") cfg.p2 = v;
    else if (key == "model") cfg.model = v;
    else if (key == "delta") cfg.delta = parse_real(key, v);
    else if (key == "C") cfg.C = parse_real(key, v);
    else if (key == "budget") cfg.budget = parse_real(key, v);
    else if (key == "k") cfg.k = parse_number<int>(key, v);
    else if (key == "c") cfg.c = parse_number<std::int64_t>(key, v);
    else if (key == "d") cfg.d = parse_number<std::int64_t>(key, v);
    else if (key == "M") cfg.M = parse_number<std::int64_t>(key, v);
    else if (key == "H") cfg.H = parse_number<std::int64_t>(key, v);
    else if (key == "samples") cfg.samples = parse_number<std::int64_t>(key, v);
    else if (key == "pilot") cfg.pilot = parse_number<std::int64_t>(key, v);
    else if (key == "points") cfg.points = parse_number<std::int64_t>(key, v);
    else if (key == "n_grid") cfg.n_grid = parse_list<std::int64_t>(key, v);
    else if (key == "certify_N") cfg.certify_N = parse_number<std::int64_t>(key, v);
    else if (key == "certify_C") cfg.certify_C = parse_number<std::int64_t>(key, v);
    else if (key == "certify_k_max") cfg.certify_k_max = parse_number<int>(key, v);
    else if (key == "out") cfg.out = v;
    else if (key == "emit_plot_data") cfg.emit_plot_data = parse_bool(key, v);
    else throw ConfigError(key, "unknown key");
}

RunConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read '" + path + "'");
    RunConfig cfg;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config", path + ":" + std::to_string(number) + ": expected key = value");
        apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

void RunConfig::resolve() {
    const auto& names = command_names();
    require(std::find(names.begin(), names.end(), command) != names.end(), "command",
            command.empty() ? "missing" : "unknown command '" + command + "'");
    const bool two_d = command == "recur3" || command == "mixing" || command == "certify-range";
    if (!dimension) dimension = two_d ? 2 : 1;
    require(*dimension == 1 || *dimension == 2, "dimension", "must be 1 or 2");
    if (command == "recur2") require(*dimension == 1, "dimension", "recur2 runs on a 1-D field");
    if (two_d) require(*dimension == 2, "dimension", command + " runs on a 2-D field");
    if (!doubling) doubling = *dimension == 2;
    if (command == "recur3" || command == "certify-range") require(*doubling, "doubling", "the twisted system needs a doubled field");
    if (fill) require(*fill >= -1 && *fill <= 1, "fill", "must be -1, 0 or 1");
    require(k_min >= 1 && k_min <= kMaxScale, "k_min", "must lie in [1, " + std::to_string(kMaxScale) + "]");
    require(M >= 0, "M", "must be >= 0");
    require(c != 0, "c", "must be nonzero");
    require(d != 0, "d", "must be nonzero");
    if (samples) require(*samples >= 1, "samples", "must be >= 1");
    if (pilot) require(*pilot >= 1, "pilot", "must be >= 1");
    if (points) require(*points >= 1, "points", "must be >= 1");

    std::int64_t reach = 1;  // largest time the field is queried at
    if (command == "lclt") {
        if (n_grid.empty()) n_grid = {256, 1024, 4096, 16384};
        for (auto n : n_grid) require(n >= 1 && n <= (std::int64_t{1} << 24), "n_grid", "entries must lie in [1, 2^24]");
        reach = *std::max_element(n_grid.begin(), n_grid.end());
    } else if (command == "recur2") {
        if (!H) H = 2000;
        require(*H >= 16 && *H <= 100000, "H", "must lie in [16, 100000]");
        if (!samples) samples = 1000;
        if (!pilot) pilot = *samples;
        reach = 3 * *H;
    } else if (command == "recur3") {
        if (!H) H = 500;
        require(*H >= 1, "H", "must be >= 1");
        if (k) require(*k >= 3, "k", "must be >= 3");
        if (!samples) samples = 1000;
        if (!pilot) pilot = 200;
        const PolynomialSpec q1 = polynomial("p1", p1);
        const PolynomialSpec q2 = polynomial("p2", p2);
        try {
            q1.validate(*H);
            q2.validate(*H);
            reach = std::max(std::abs(q1(*H)), std::abs(q2(*H)));
        } catch (const Error& e) {
            throw ConfigError("p1/p2", e.what());
        }
        require(reach <= kRangeTimeBudget, "H", "polynomial times exceed the range budget");
    } else if (command == "gauss") {
        require(model == "power" || model == "white", "model", "must be power or white");
        if (model == "power") {
            if (!delta) delta = 0.3;
            require(*delta > 0.0 && *delta < 1.0, "delta", "must lie in (0, 1)");
        } else {
            require(!delta, "delta", "applies to the power model only");
        }
        if (!k) k = 2;
        require(*k >= 1, "k", "must be >= 1");
        const double d_eff = model == "power" ? *delta : 1.0;
        require(2.0 * *k * d_eff > 1.0, "k", "2 k delta must exceed 1");
        if (!H) H = 64;
        require(*H >= 1 && *H <= 4096, "H", "must lie in [1, 4096]");
        if (!samples) samples = 100000;
        if (!points) points = 2000;
        if (C) require(*C > 0.0, "C", "must be positive");
        require(budget > 0.0, "budget", "must be positive");
    } else if (command == "mixing") {
        if (!H) H = 4096;
        require(*H >= 1, "H", "must be >= 1");
        if (!samples) samples = 100000;
        reach = *H;
    } else if (command == "certify-range") {
        if (!H) H = 1000;
        require(*H >= 1, "H", "must be >= 1");
        require(certify_N >= 1 && certify_N <= 64, "certify_N", "must lie in [1, 64]");
        if (!certify_C) certify_C = -z_lower_bound(certify_N) + 1;
        if (!certify_k_max) certify_k_max = 12;
        require(*certify_k_max >= k_min && *certify_k_max <= kMaxScale, "certify_k_max", "out of range");
        if (!samples) samples = 1000;
        if (seeds.empty())
            for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
        const PolynomialSpec q = polynomial("p2", p2);
        try {
            q.validate(*H);
            reach = std::abs(q(*H));
        } catch (const Error& e) {
            throw ConfigError("p2", e.what());
        }
        require(reach <= kRangeTimeBudget, "H", "polynomial times exceed the range budget");
    }
    if (!k_max) k_max = std::min(default_k_max(std::max<std::int64_t>(reach, 2)), kMaxScale);
    require(*k_max >= k_min && *k_max <= kMaxScale, "k_max", "must lie in [k_min, " + std::to_string(kMaxScale) + "]");
    require(!out.empty(), "out", "must not be empty");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    auto opt_int = [](const auto& v) { return v ? std::to_string(*v) : std::string("unset"); };
    auto opt_real = [](const std::optional<double>& v) { return v ? real_text(*v) : std::string("unset"); };
    e.push_back({"command", command});
    e.push_back({"dimension", opt_int(dimension)});
    e.push_back({"k_min", std::to_string(k_min)});
    e.push_back({"k_max", opt_int(k_max)});
    e.push_back({"doubling", doubling ? (*doubling ? "true" : "false") : "unset"});
    e.push_back({"fill", opt_int(fill)});
    e.push_back({"seed", std::to_string(seed)});
    e.push_back({"seeds", seeds.empty() ? "unset" : list_text(seeds)});
    e.push_back({"p1", p1});
    e.push_back({"p2", p2});
    e.push_back({"model", model});
    e.push_back({"delta", opt_real(delta)});
    e.push_back({"C", opt_real(C)});
    e.push_back({"budget", real_text(budget)});
    e.push_back({"k", opt_int(k)});
    e.push_back({"c", std::to_string(c)});
    e.push_back({"d", std::to_string(d)});
    e.push_back({"M", std::to_string(M)});
    e.push_back({"H", opt_int(H)});
    e.push_back({"samples", opt_int(samples)});
    e.push_back({"pilot", opt_int(pilot)});
    e.push_back({"points", opt_int(points)});
    e.push_back({"n_grid", n_grid.empty() ? "unset" : list_text(n_grid)});
    e.push_back({"certify_N", std::to_string(certify_N)});
    e.push_back({"certify_C", opt_int(certify_C)});
    e.push_back({"certify_k_max", opt_int(certify_k_max)});
    e.push_back({"emit_plot_data", emit_plot_data ? "true" : "false"});
    return e;
}

RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"drlab"};
    std::string command, config_path, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> samples, horizon;
    bool plot = false;
    app.add_option("command", command, "lclt | recur2 | recur3 | gauss | mixing | certify-range");
    app.add_option("--config", config_path, "flat key = value file");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out, "output directory");
    app.add_option("--samples", samples, "Monte Carlo sample count");
    app.add_option("--horizon", horizon, "horizon H");
    app.add_flag("--emit-plot-data", plot, "write plot_*.csv");
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw ConfigError("arguments", e.what());
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : read_config_file(config_path);
    if (!command.empty()) cfg.command = command;
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (samples) cfg.samples = *samples;
    if (horizon) cfg.H = *horizon;
    if (plot) cfg.emit_plot_data = true;
    cfg.resolve();
    return cfg;
}

int dispatch(const RunConfig& cfg, std::ostream& log) {
    Outputs o;
    if (cfg.command == "lclt") o = run_lclt(cfg, log);
    else if (cfg.command == "recur2") o = run_recur2(cfg, log);
    else if (cfg.command == "recur3") o = run_recur3(cfg, log);
    else if (cfg.command == "gauss") o = run_gauss(cfg, log);
    else if (cfg.command == "mixing") o = run_mixing(cfg, log);
    else if (cfg.command == "certify-range") o = run_certify(cfg, log);
    else throw ConfigError("command", "unknown command '" + cfg.command + "'");

    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    Json config = Json::object();
    for (const auto& [k, v] : cfg.entries()) config[k] = v;
    Json report;
    report["version"] = kReportVersion;
    report["command"] = cfg.command;
    report["config"] = config;
    report["passed"] = o.passed;
    report["scope"] = o.scope;
    report["result"] = o.result;
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "decay.csv", config_comment(cfg) + decay_csv(o.decay));
    for (const auto& [name, body] : o.plots) write_file(dir / name, config_comment(cfg) + body);
    log << cfg.command << ": " << (o.passed ? "pass" : "FAIL") << " (" << (dir / "report.json").string() << ")\n";
    return o.passed ? kExitPass : kExitViolation;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_config(args);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        return dispatch(cfg, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const HypothesisError& e) {
        err << "precondition: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "precondition: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "failed: " << e.what() << "\n";
        return kExitViolation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "output: " << e.what() << "\n";
        return kExitViolation;
    }
}

}  // namespace drlab
