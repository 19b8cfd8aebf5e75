#include "crmsbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crmsbm {

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double sample_gamma(double shape, double rate, Rng& rng) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double sample_log_gamma(double shape, Rng& rng) {
    if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
    // G(a) = G(a+1) * U^(1/a)
    const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
    double u = uniform01(rng);
    while (u == 0.0) u = uniform01(rng);
    return std::log(g) + std::log(u) / shape;
}

std::int64_t sample_poisson(double mean, Rng& rng) {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(rng);
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng) {
    std::vector<double> logs(concentration.size());
    for (std::size_t i = 0; i < concentration.size(); ++i)
        logs[i] = sample_log_gamma(concentration[i], rng);
    const double top = *std::max_element(logs.begin(), logs.end());
    double total = 0.0;
    for (double& v : logs) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : logs) v = std::max(v / total, std::numeric_limits<double>::min());
    return logs;
}

}  // namespace crmsbm
