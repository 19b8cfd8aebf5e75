#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace crmsbm {

/// One RNG stream per chain or generator run; seeded explicitly everywhere.
using Rng = std::mt19937_64;

double uniform01(Rng& rng);

/// Gamma draw with shape/rate convention.
double sample_gamma(double shape, double rate, Rng& rng);

/// log of a Gamma(shape, 1) draw; stays finite for very small shapes.
double sample_log_gamma(double shape, Rng& rng);

/// Poisson draw; mean 0 gives 0.
std::int64_t sample_poisson(double mean, Rng& rng);

/// Dirichlet draw computed in log space so tiny concentrations do not
/// collapse entries to zero.
std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng);

}  // namespace crmsbm
