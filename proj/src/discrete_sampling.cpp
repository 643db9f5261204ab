#include "drlab/discrete_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace drlab {
namespace {

constexpr std::size_t kLogFactorialTable = std::size_t{1} << 16;

double log_factorial(double n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(kLogFactorialTable);
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (n < static_cast<double>(kLogFactorialTable)) return table[static_cast<std::size_t>(n)];
    return std::lgamma(n + 1.0);
}

double log_choose(double n, double k) { return log_factorial(n) - log_factorial(k) - log_factorial(n - k); }

// Walks outward from the mode, always absorbing the more probable neighbour,
// until the accumulated mass exceeds u. `up(x)` is p(x+1)/p(x) and `down(x)`
// is p(x-1)/p(x).
template <class Up, class Down>
std::int64_t invert_from_mode(double u, std::int64_t lo, std::int64_t hi, std::int64_t mode,
                              double p_mode, Up up, Down down) {
    double acc = p_mode;
    if (u < acc) return mode;
    std::int64_t left = mode;
    std::int64_t right = mode;
    double p_left = left > lo ? p_mode * down(left) : 0.0;
    double p_right = right < hi ? p_mode * up(right) : 0.0;
    while (p_left > 0.0 || p_right > 0.0) {
        if (p_right >= p_left) {
            ++right;
            acc += p_right;
            if (u < acc) return right;
            p_right = right < hi ? p_right * up(right) : 0.0;
        } else {
            --left;
            acc += p_left;
            if (u < acc) return left;
            p_left = left > lo ? p_left * down(left) : 0.0;
        }
    }
    // Only reachable through rounding in the accumulated mass.
    return mode;
}

}  // namespace

std::int64_t sample_binomial(std::int64_t trials, double success, double u) {
    if (trials <= 0 || success <= 0.0) return 0;
    if (success >= 1.0) return trials;
    const double n = static_cast<double>(trials);
    const double odds = success / (1.0 - success);
    std::int64_t mode = static_cast<std::int64_t>(std::floor((n + 1.0) * success));
    mode = std::clamp<std::int64_t>(mode, 0, trials);
    const double m = static_cast<double>(mode);
    const double p_mode =
        std::exp(log_choose(n, m) + m * std::log(success) + (n - m) * std::log1p(-success));
    auto up = [&](std::int64_t x) {
        return static_cast<double>(trials - x) / static_cast<double>(x + 1) * odds;
    };
    auto down = [&](std::int64_t x) {
        return static_cast<double>(x) / static_cast<double>(trials - x + 1) / odds;
    };
    return invert_from_mode(u, 0, trials, mode, p_mode, up, down);
}

std::int64_t sample_hypergeometric(std::int64_t population, std::int64_t marked,
                                   std::int64_t draws, double u) {
    if (marked <= 0 || draws <= 0) return 0;
    if (marked >= population) return draws;
    if (draws >= population) return marked;
    const std::int64_t unmarked = population - marked;
    const std::int64_t lo = std::max<std::int64_t>(0, draws - unmarked);
    const std::int64_t hi = std::min(draws, marked);
    if (lo == hi) return lo;
    if (marked == 1) return u < static_cast<double>(draws) / static_cast<double>(population) ? 1 : 0;
    const double big_n = static_cast<double>(population);
    const double big_k = static_cast<double>(marked);
    const double n = static_cast<double>(draws);
    std::int64_t mode =
        static_cast<std::int64_t>(std::floor((n + 1.0) * (big_k + 1.0) / (big_n + 2.0)));
    mode = std::clamp(mode, lo, hi);
    const double m = static_cast<double>(mode);
    const double p_mode = std::exp(log_choose(big_k, m) + log_choose(big_n - big_k, n - m) -
                                   log_choose(big_n, n));
    auto up = [&](std::int64_t x) {
        const double xd = static_cast<double>(x);
        return (big_k - xd) * (n - xd) / ((xd + 1.0) * (big_n - big_k - n + xd + 1.0));
    };
    auto down = [&](std::int64_t x) {
        const double xd = static_cast<double>(x);
        return xd * (big_n - big_k - n + xd) / ((big_k - xd + 1.0) * (n - xd + 1.0));
    };
    return invert_from_mode(u, lo, hi, mode, p_mode, up, down);
}

}  // namespace drlab
