#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace drlab {

/// Covariance sequence r(n) = hat sigma(n) of a probability measure on the
/// circle, tabulated for 0 <= n <= max_lag().
struct SpectralModel {
    std::string family;
    double delta = 0.0;  // decay exponent (0 when not applicable)
    double C = 0.0;      // |r(n)| <= C n^(-delta) on the tabulated range
    double quadrature_error = 0.0;
    std::vector<double> r;

    std::int64_t max_lag() const { return static_cast<std::int64_t>(r.size()) - 1; }
    /// r(|n|); throws DomainError beyond the table.
    double at(std::int64_t n) const;
};

/// Density proportional to |t|^(delta - 1) on [-pi, pi), coefficients by
/// adaptive Gauss-Kronrod; throws ModelError if the error estimate exceeds 1e-10.
SpectralModel power_density_model(double delta, std::int64_t max_lag = 1024);
/// r(n) = 0 for n != 0; delta is the nominal 1 with C = 0.
SpectralModel white_noise_model(std::int64_t max_lag = 1024);
/// Any table with r(0) = 1 and |r| <= 1; delta and C stay 0.
SpectralModel tabulated_model(std::string family, std::vector<double> r);

/// Least-squares slope of log |r(n)| against log n over [lo, hi].
double decay_slope(const SpectralModel& model, std::int64_t lo, std::int64_t hi);
/// Smallest C with |r(n)| <= C n^(-delta) for 1 <= n <= max_lag.
double fit_decay_constant(const SpectralModel& model, double delta);

void write_model_csv(std::ostream& out, const SpectralModel& model);
SpectralModel read_model_csv(std::istream& in, std::string family = "csv");

struct PsdReport {
    std::int64_t N = 0;
    double min_eigenvalue = 0.0;
    bool passed = false;
};

/// Smallest eigenvalue of the (N+1)x(N+1) Toeplitz section; throws ModelError
/// (naming the eigenvalue) below -1e-8.
PsdReport validate_psd(const SpectralModel& model, std::int64_t N);

Eigen::MatrixXd toeplitz_section(const SpectralModel& model, std::int64_t N);

struct GaussianPath {
    std::vector<double> x;  // X_0 .. X_N
    std::uint64_t seed = 0;
    std::string method;
    double jitter = 0.0;
};

/// Draws stationary centred Gaussian paths X_0..X_N with covariance r.
/// Circulant embedding when its spectrum is nonnegative, otherwise a dense
/// Cholesky factor with diagonal jitter up to 1e-8.
class PathSampler {
public:
    PathSampler(const SpectralModel& model, std::int64_t N);
    ~PathSampler();
    PathSampler(const PathSampler&) = delete;
    PathSampler& operator=(const PathSampler&) = delete;

    GaussianPath sample(std::uint64_t seed);
    const std::string& method() const { return method_; }
    double jitter() const { return jitter_; }
    std::int64_t length() const { return N_; }

private:
    std::int64_t N_ = 0;
    std::string method_;
    double jitter_ = 0.0;
    std::vector<double> sqrt_eig_;  // circulant: sqrt(lambda / m)
    Eigen::MatrixXd factor_;        // dense: lower Cholesky factor
    struct Fft;
    Fft* fft_ = nullptr;
};

GaussianPath sample_path(const SpectralModel& model, std::int64_t N, std::uint64_t seed);

/// Y_n = 2 r(n) X_0 - X_n, the process read through the reflection about f.
struct TwistedPath {
    std::vector<double> y;
};

TwistedPath twisted_path(const SpectralModel& model, const GaussianPath& path);

/// Standard normal upper tail.
double normal_tail(double x);

struct TripleEstimate {
    std::int64_t n = 0;
    double r = 0.0;
    std::int64_t samples = 0;
    double estimate = 0.0;
    double se = 0.0;
    double tail_bound = 0.0;    // P(X_0 > 1/r), 0 when r <= 0
    double markov_bound = 0.0;  // r^2
    double envelope() const { return tail_bound < markov_bound ? tail_bound : markov_bound; }
    bool within_bound() const { return estimate <= envelope() + 4.0 * se; }
};

/// MC estimate of P(X_0 > 1, X_n > 1, Y_n > 1) from the exact bivariate law of
/// (X_0, X_n).
TripleEstimate triple_probability(const SpectralModel& model, std::int64_t n, std::int64_t samples,
                                  std::uint64_t seed);

struct SummabilityReport {
    int k = 0;
    double delta = 0.0;
    double C = 0.0;
    std::int64_t H = 0;
    double partial = 0.0;
    double tail = 0.0;
    double total = 0.0;
};

/// sum_{n <= H} estimate(n)^k plus C^(2k) sum_{n > H} n^(-2 k delta), the tail
/// bounded by its integral. estimates[i] belongs to n = i + 1. Throws
/// HypothesisError unless 2 k delta > 1.
SummabilityReport power_summability(const std::vector<double>& estimates, int k, double delta, double C,
                                    std::int64_t H);

/// Probing the root systems at times (c n, d n) is probing (T, S) at n.
std::int64_t linear_times_schedule(std::int64_t c, std::int64_t d, std::int64_t n);

}  // namespace drlab
