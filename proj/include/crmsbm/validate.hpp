#pragma once

// Single-block checks of the forward sampler against exact small-network
// probabilities and against the total-mass density.

#include <iosfwd>
#include <optional>
#include <vector>

#include "crmsbm/generate.hpp"
#include "crmsbm/ggp.hpp"

namespace crmsbm {

/// Endpoint counts (n_1, ..., n_k) sorted decreasingly.
using Signature = std::vector<long>;

Signature signature_of(const GeneratedNetwork& net);
Signature signature_of(std::vector<long> endpoint_counts);

/// All partitions of 2L for L = 0..max_edges, grouped by L, each in
/// decreasing lexicographic order.
std::vector<Signature> enumerate_signatures(int max_edges);

/// n! / prod_i ((i!)^(m_i) m_i!) with m_i the number of parts equal to i:
/// the number of set partitions of n labelled endpoints with these block sizes.
double multiplicity_factor(const Signature& sig);
double log_multiplicity_factor(const Signature& sig);

/// Probability that a single-block network with unit interaction has exactly
/// this endpoint signature (nested quadrature over s and t).
double signature_probability(const GgpParams& p, const Signature& sig);

/// P(L edges) = E[exp(-T^2) T^(2L) / L!] by one-dimensional quadrature.
double edge_count_probability(const GgpParams& p, int L);

struct SignatureRow {
    Signature signature;
    double analytic = 0.0;
    double empirical = 0.0;
    long count = 0;
    double z = 0.0;
};

struct SignatureReport {
    std::vector<SignatureRow> rows;
    /// Networks with more than max_edges edges.
    SignatureRow discard;
    long n_networks = 0;
    int max_edges = 0;
    double total_variation = 0.0;
    double max_abs_z = 0.0;
    /// Largest |sum of signature probabilities with L edges - P(L)|.
    double max_edge_count_mismatch = 0.0;
};

struct SimulationOptions {
    /// <= 0 selects the generator default.
    double truncation = 0.0;
    int threads = 1;
};

/// Forward-simulates n_networks single-block networks (eta = 1) and compares
/// signature frequencies with the analytic table. Work is split into fixed
/// chunks with their own seeds, so results do not depend on `threads`.
SignatureReport validate_signatures(const GgpParams& p, long n_networks, int max_edges, Rng& rng,
                                    const SimulationOptions& opts = {});

void write_signature_csv(std::ostream& out, const SignatureReport& report);

/// Kolmogorov-Smirnov distance between n_samples simulated total masses (sum
/// of atom weights plus the sub-threshold remainder) and the tabulated CDF of
/// `oracle` (defaults to p).
double validate_total_mass(const GgpParams& p, long n_samples, Rng& rng, const SimulationOptions& opts = {},
                           std::optional<GgpParams> oracle = std::nullopt);

/// Two-sided KS distance of a sample against a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf);

}  // namespace crmsbm

#include <algorithm>
#include <cmath>

template <class Cdf>
double crmsbm::ks_distance(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = cdf(sample[i]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}
