#pragma once

#include <cstdint>

namespace drlab {

/// Exact samplers driven by a single uniform; inversion runs outward from the
/// mode, so the cost is proportional to the standard deviation.
std::int64_t sample_binomial(std::int64_t trials, double success, double u);

/// Number of marked items among `draws` taken without replacement from a
/// population of `population` items of which `marked` are marked.
std::int64_t sample_hypergeometric(std::int64_t population, std::int64_t marked,
                                   std::int64_t draws, double u);

}  // namespace drlab
