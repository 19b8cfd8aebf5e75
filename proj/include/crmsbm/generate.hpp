#pragma once

// Forward simulation of block-structured multigraphs from a generalized gamma
// process: atoms (w_i, theta_i, u_i), Dirichlet block proportions, Gamma
// interaction rates, Poisson tile edge counts and weight-proportional
// endpoint selection.

#include <cstddef>
#include <optional>
#include <vector>

#include "crmsbm/ggp.hpp"
#include "crmsbm/random.hpp"

namespace crmsbm {

struct AtomSet {
    std::vector<double> weights;    // all >= truncation
    std::vector<double> locations;  // in [0, alpha)
    std::vector<double> traits;     // in [0, 1]
    double truncation = 0.0;
    /// Expected total weight of the atoms below the truncation threshold,
    /// alpha * int_0^eps w rho(dw). This is the neglected tail mass.
    double remainder_mass = 0.0;

    std::size_t size() const noexcept { return weights.size(); }
    double total_weight() const;
};

/// alpha * int_eps^inf rho(dw)
double expected_atom_count(const GgpParams& p, double truncation);
/// alpha * int_0^eps w rho(dw)
double expected_remainder_mass(const GgpParams& p, double truncation);
/// 1e-6 of E[T] (or of the stable scale when tau = 0).
double default_truncation(const GgpParams& p);

/// Atoms of the GGP with weight >= truncation. Weights are exact in
/// distribution above the threshold: Pareto (or shifted exponential) proposals
/// thinned to the Levy intensity.
AtomSet sample_atoms(const GgpParams& p, double truncation, Rng& rng, std::size_t max_atoms = 50'000'000);

/// Dirichlet(beta0/K, ..., beta0/K).
std::vector<double> sample_block_proportions(int K, double beta0, Rng& rng);

struct NetworkOptions {
    /// <= 0 selects default_truncation().
    double truncation = 0.0;
    /// Replaces every eta_lm draw (eta = 1 is the single-measure reduction).
    std::optional<double> eta_override;
    /// Keep atoms that received no endpoint (returned in `unselected`).
    bool keep_unselected = false;
    std::size_t max_edges = 20'000'000;
    std::size_t max_atoms = 50'000'000;
};

struct Edge {
    int source = 0;
    int target = 0;
    long count = 0;
    bool operator==(const Edge&) const = default;
};

struct GeneratedNetwork {
    int K = 1;
    /// Distinct (source, target) pairs with multiplicity, sorted.
    std::vector<Edge> edges;
    /// Block of each vertex, 0-based.
    std::vector<int> vertex_blocks;
    /// Atom weight of each vertex. Vertices created by an endpoint landing in
    /// the sub-threshold remainder carry weight 0.
    std::vector<double> vertex_weights;
    /// Endpoints landing on each vertex, n_i = sum_j (A_ij + A_ji).
    std::vector<long> vertex_endpoints;
    std::vector<double> block_proportions;
    /// K x K interaction rates, row-major.
    std::vector<double> interaction;
    /// Block total masses T_l (selected and unselected atoms plus remainder).
    std::vector<double> block_masses;
    /// K x K tile edge counts L_lm, row-major.
    std::vector<long> tile_edges;
    double truncation = 0.0;
    double remainder_mass = 0.0;
    /// Filled when NetworkOptions::keep_unselected is set.
    AtomSet unselected;
    std::vector<int> unselected_blocks;

    std::size_t num_vertices() const noexcept { return vertex_blocks.size(); }
    long num_edges() const;
};

GeneratedNetwork sample_network(int K, const GgpParams& p, double beta0, double lambda_a, double lambda_b, Rng& rng,
                                const NetworkOptions& opts = {});

}  // namespace crmsbm
