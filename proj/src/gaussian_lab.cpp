#include "drlab/gaussian_lab.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include "drlab/errors.hpp"
#include "drlab/hash_rng.hpp"

namespace drlab {
namespace {

constexpr double kPsdTolerance = -1e-8;
constexpr long double kQuadTolerance = 1e-14L;
constexpr unsigned kQuadDepth = 8;
constexpr double kQuadBudget = 1e-10;
constexpr std::uint64_t kPathTag = 0x9a7b5eedULL;
constexpr std::uint64_t kTripleTag = 0x7219e1ULL;

// F(j pi) = int_0^(j pi) u^(delta-1) cos(u) du for j = 0..J. Since
// int_0^pi t^(delta-1) cos(n t) dt = n^(-delta) F(n pi), one pass over the
// quarter-periods serves every lag. The first period carries the integrable
// singularity and is mapped through u = s^(1/delta).
std::vector<double> scaled_cosine_integrals(double delta, std::int64_t J, double* error) {
    using boost::math::quadrature::gauss_kronrod;
    using real = long double;
    const real pi = std::numbers::pi_v<real>;
    const real d = delta;
    std::vector<double> F(static_cast<std::size_t>(J) + 1, 0.0);
    real err = 0;
    real err_total = 0;
    auto integrate = [&](auto&& f, real a, real b) {
        const real v = gauss_kronrod<real, 31>::integrate(f, a, b, kQuadDepth, kQuadTolerance, &err);
        err_total += err;
        return v;
    };
    auto mapped = [&](real s) { return std::cos(std::pow(s, 1 / d)) / d; };
    const real half = std::pow(pi / 2, d);
    real acc = integrate(mapped, real{0}, half) + integrate(mapped, half, std::pow(pi, d));
    if (J >= 1) F[1] = static_cast<double>(acc);
    // Split at the zero of cos so each piece is sign-definite.
    auto direct = [&](real u) { return std::pow(u, d - 1) * std::cos(u); };
    for (std::int64_t j = 1; j < J; ++j) {
        const real a = static_cast<real>(j) * pi;
        acc += integrate(direct, a, a + pi / 2) + integrate(direct, a + pi / 2, a + pi);
        F[static_cast<std::size_t>(j) + 1] = static_cast<double>(acc);
    }
    *error = static_cast<double>(err_total);
    return F;
}

void check_table(const std::vector<double>& r) {
    if (r.empty()) throw DomainError("spectral table is empty");
    if (std::abs(r[0] - 1.0) > 1e-12) throw DomainError("spectral table must have r(0) = 1");
    for (double v : r)
        if (!(std::abs(v) <= 1.0 + 1e-12)) throw DomainError("spectral table entries must satisfy |r(n)| <= 1");
}

}  // namespace

double SpectralModel::at(std::int64_t n) const {
    const std::int64_t m = n < 0 ? -n : n;
    if (m > max_lag())
        throw DomainError("lag " + std::to_string(n) + " beyond the tabulated range " + std::to_string(max_lag()));
    return r[static_cast<std::size_t>(m)];
}

SpectralModel power_density_model(double delta, std::int64_t max_lag) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (max_lag < 1) throw DomainError("max_lag must be >= 1");
    SpectralModel m;
    m.family = "power_density";
    m.delta = delta;
    m.r.resize(static_cast<std::size_t>(max_lag) + 1);
    double err = 0.0;
    const std::vector<double> F = scaled_cosine_integrals(delta, max_lag, &err);
    const double norm = std::pow(std::numbers::pi, delta) / delta;
    // The accumulated estimate bounds every prefix, and n^(-delta) <= 1.
    m.quadrature_error = err / norm;
    if (m.quadrature_error > kQuadBudget)
        throw ModelError("quadrature error estimate " + std::to_string(m.quadrature_error) + " above 1e-10");
    m.r[0] = 1.0;
    for (std::int64_t n = 1; n <= max_lag; ++n)
        m.r[static_cast<std::size_t>(n)] =
            std::pow(static_cast<double>(n), -delta) * F[static_cast<std::size_t>(n)] / norm;
    m.C = fit_decay_constant(m, delta);
    return m;
}

SpectralModel white_noise_model(std::int64_t max_lag) {
    if (max_lag < 1) throw DomainError("max_lag must be >= 1");
    SpectralModel m;
    m.family = "white_noise";
    // r(n) = 0 for n >= 1 satisfies |r(n)| <= C n^-delta for every delta with C = 0.
    m.delta = 1.0;
    m.r.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
    m.r[0] = 1.0;
    return m;
}

SpectralModel tabulated_model(std::string family, std::vector<double> r) {
    check_table(r);
    SpectralModel m;
    m.family = std::move(family);
    m.r = std::move(r);
    return m;
}

double decay_slope(const SpectralModel& model, std::int64_t lo, std::int64_t hi) {
    if (lo < 1 || hi <= lo || hi > model.max_lag()) throw DomainError("bad decay fit range");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double count = 0;
    for (std::int64_t n = lo; n <= hi; ++n) {
        const double v = std::abs(model.at(n));
        if (v <= 0.0) continue;
        const double x = std::log(static_cast<double>(n));
        const double y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1;
    }
    if (count < 2) throw DomainError("decay fit needs two nonzero coefficients");
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

double fit_decay_constant(const SpectralModel& model, double delta) {
    double c = 0.0;
    for (std::int64_t n = 1; n <= model.max_lag(); ++n)
        c = std::max(c, std::abs(model.at(n)) * std::pow(static_cast<double>(n), delta));
    return c;
}

void write_model_csv(std::ostream& out, const SpectralModel& model) {
    out << "n,r\n";
    char buf[64];
    for (std::int64_t n = 0; n <= model.max_lag(); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g", model.at(n));
        out << n << ',' << buf << '\n';
    }
}

SpectralModel read_model_csv(std::istream& in, std::string family) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("n,r", 0) != 0) throw DomainError("model CSV needs header 'n,r'");
    std::vector<double> r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::int64_t n = 0;
        char comma = 0;
        double v = 0;
        if (!(row >> n >> comma >> v) || comma != ',') throw DomainError("bad model CSV row: " + line);
        if (n != static_cast<std::int64_t>(r.size())) throw DomainError("model CSV lags must be 0, 1, 2, ...");
        r.push_back(v);
    }
    return tabulated_model(std::move(family), std::move(r));
}

Eigen::MatrixXd toeplitz_section(const SpectralModel& model, std::int64_t N) {
    const Eigen::Index size = static_cast<Eigen::Index>(N) + 1;
    Eigen::MatrixXd T(size, size);
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = 0; j < size; ++j) T(i, j) = model.at(static_cast<std::int64_t>(i - j));
    return T;
}

PsdReport validate_psd(const SpectralModel& model, std::int64_t N) {
    if (N < 0 || N > 4096) throw DomainError("validate_psd needs 0 <= N <= 4096");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(toeplitz_section(model, N),
                                                                 Eigen::EigenvaluesOnly);
    PsdReport report;
    report.N = N;
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    report.passed = report.min_eigenvalue >= kPsdTolerance;
    if (!report.passed) {
        std::ostringstream os;
        os << "Toeplitz section of size " << N + 1 << " has eigenvalue " << report.min_eigenvalue;
        throw ModelError(os.str());
    }
    return report;
}

struct PathSampler::Fft {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
    explicit Fft(std::int64_t m) {
        buf = fftw_alloc_complex(static_cast<std::size_t>(m));
        plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        fftw_destroy_plan(plan);
        fftw_free(buf);
    }
};

PathSampler::PathSampler(const SpectralModel& model, std::int64_t N) : N_(N) {
    if (N < 1) throw DomainError("path length N must be >= 1");
    if (N > model.max_lag()) throw DomainError("path longer than the tabulated covariance");
    const std::int64_t m = 2 * N;
    fft_ = new Fft(m);
    for (std::int64_t j = 0; j < m; ++j) {
        fft_->buf[j][0] = model.at(j <= N ? j : m - j);
        fft_->buf[j][1] = 0.0;
    }
    fftw_execute(fft_->plan);
    double max_abs = 0.0;
    double min_eig = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
        max_abs = std::max(max_abs, std::abs(fft_->buf[j][0]));
        min_eig = std::min(min_eig, fft_->buf[j][0]);
    }
    if (min_eig >= -1e-10 * std::max(1.0, max_abs)) {
        method_ = "circulant";
        sqrt_eig_.resize(static_cast<std::size_t>(m));
        for (std::int64_t j = 0; j < m; ++j)
            sqrt_eig_[static_cast<std::size_t>(j)] =
                std::sqrt(std::max(0.0, fft_->buf[j][0]) / static_cast<double>(m));
        return;
    }
    delete fft_;
    fft_ = nullptr;
    const Eigen::MatrixXd T = toeplitz_section(model, N);
    for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
        Eigen::LLT<Eigen::MatrixXd> llt(T + jitter * Eigen::MatrixXd::Identity(T.rows(), T.cols()));
        if (llt.info() == Eigen::Success) {
            method_ = "cholesky";
            jitter_ = jitter;
            factor_ = llt.matrixL();
            return;
        }
    }
    throw ModelError("Cholesky factorization failed with jitter up to 1e-8");
}

PathSampler::~PathSampler() { delete fft_; }

GaussianPath PathSampler::sample(std::uint64_t seed) {
    GaussianPath path;
    path.seed = seed;
    path.method = method_;
    path.jitter = jitter_;
    path.x.resize(static_cast<std::size_t>(N_) + 1);
    KeyedStream rng(hash_key({seed, kPathTag, static_cast<std::uint64_t>(N_)}));
    if (fft_) {
        const std::int64_t m = 2 * N_;
        for (std::int64_t j = 0; j < m; ++j) {
            const double s = sqrt_eig_[static_cast<std::size_t>(j)];
            fft_->buf[j][0] = s * rng.normal();
            fft_->buf[j][1] = s * rng.normal();
        }
        fftw_execute(fft_->plan);
        for (std::int64_t j = 0; j <= N_; ++j) path.x[static_cast<std::size_t>(j)] = fft_->buf[j][0];
        return path;
    }
    Eigen::VectorXd z(factor_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd x = factor_ * z;
    for (Eigen::Index i = 0; i < x.size(); ++i) path.x[static_cast<std::size_t>(i)] = x(i);
    return path;
}

GaussianPath sample_path(const SpectralModel& model, std::int64_t N, std::uint64_t seed) {
    PathSampler sampler(model, N);
    return sampler.sample(seed);
}

TwistedPath twisted_path(const SpectralModel& model, const GaussianPath& path) {
    TwistedPath out;
    out.y.resize(path.x.size());
    const double x0 = path.x.empty() ? 0.0 : path.x[0];
    for (std::size_t n = 0; n < path.x.size(); ++n)
        out.y[n] = 2.0 * model.at(static_cast<std::int64_t>(n)) * x0 - path.x[n];
    return out;
}

double normal_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

TripleEstimate triple_probability(const SpectralModel& model, std::int64_t n, std::int64_t samples,
                                  std::uint64_t seed) {
    if (samples < 1) throw DomainError("samples must be >= 1");
    TripleEstimate e;
    e.n = n;
    e.r = model.at(n);
    e.samples = samples;
    e.tail_bound = e.r > 0.0 ? normal_tail(1.0 / e.r) : 0.0;
    e.markov_bound = e.r * e.r;
    const double s = std::sqrt(std::max(0.0, 1.0 - e.r * e.r));
    KeyedStream rng(hash_key({seed, kTripleTag, static_cast<std::uint64_t>(n)}));
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double x0 = rng.normal();
        const double xn = e.r * x0 + s * rng.normal();
        const double yn = 2.0 * e.r * x0 - xn;
        hits += (x0 > 1.0 && xn > 1.0 && yn > 1.0) ? 1 : 0;
    }
    const double S = static_cast<double>(samples);
    e.estimate = static_cast<double>(hits) / S;
    e.se = std::sqrt(e.estimate * (1.0 - e.estimate) / S);
    return e;
}

SummabilityReport power_summability(const std::vector<double>& estimates, int k, double delta, double C,
                                    std::int64_t H) {
    const double exponent = 2.0 * k * delta;
    if (!(exponent > 1.0)) {
        std::ostringstream os;
        os << "summability needs 2 k delta > 1, got " << exponent;
        throw HypothesisError(os.str());
    }
    if (H < 1) throw DomainError("H must be >= 1");
    SummabilityReport rep;
    rep.k = k;
    rep.delta = delta;
    rep.C = C;
    rep.H = H;
    const std::size_t used = std::min(estimates.size(), static_cast<std::size_t>(H));
    for (std::size_t i = 0; i < used; ++i) rep.partial += std::pow(estimates[i], k);
    rep.tail = std::pow(C, 2.0 * k) * std::pow(static_cast<double>(H), 1.0 - exponent) / (exponent - 1.0);
    rep.total = rep.partial + rep.tail;
    return rep;
}

std::int64_t linear_times_schedule(std::int64_t c, std::int64_t d, std::int64_t n) {
    if (c == 0 || d == 0) throw DomainError("linear times need c, d != 0");
    return n;
}

}  // namespace drlab
