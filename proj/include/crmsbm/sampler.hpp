#pragma once

// MCMC for the collapsed model: random-walk Metropolis-Hastings over the
// measure parameters in unconstrained coordinates, a Gibbs sweep over block
// labels, and imputation of weights, interaction rates and unobserved or
// binarized edge counts.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "crmsbm/model.hpp"

namespace crmsbm {

/// log posterior density in the original parameterization: the joint plus the
/// Gamma(2, 1) hyperpriors on beta0, lambda_a and lambda_b. Flat priors on
/// sigma, tau and alpha contribute nothing.
double log_posterior(const SufficientStats& stats, const MeasureState& m, double beta0,
                     TotalMassTerm mode = TotalMassTerm::augmented);

struct MhSettings {
    int steps = 150;
    double step_size = 0.1;
    bool sample_beta0 = true;
    /// Optional mask over the coordinates of transform_params followed by
    /// log beta0; empty means all active.
    std::vector<bool> active;
};

struct MhResult {
    MeasureState measure;
    double beta0 = 1.0;
    double acceptance_rate = 0.0;
};

/// `steps` passes, each proposing every active coordinate in turn with a
/// N(0, step_size) increment and accepting with the Jacobian-corrected ratio.
MhResult mh_sweep(const SufficientStats& stats, const MeasureState& m, double beta0, const MhSettings& settings,
                  Rng& rng);

/// Normalized conditional distribution of the label of `vertex` given all
/// other labels and the measure parameters.
std::vector<double> gibbs_conditional(const CountGraph& graph, const std::vector<int>& labels, int K,
                                      const MeasureState& m, int vertex);

/// One Gibbs pass over vertices in ascending order.
void gibbs_z_sweep(const CountGraph& graph, BlockState& z, const MeasureState& m, Rng& rng);

/// Normalized weights w_i / s_l ~ Dirichlet(n_i - sigma) for the vertices of
/// block l with n_i >= 1, in vertex order.
std::vector<double> impute_weights(const SufficientStats& stats, const MeasureState& m, int l, Rng& rng);

/// Unnormalized weights for every vertex (0 for vertices without endpoints).
std::vector<double> impute_all_weights(const SufficientStats& stats, const MeasureState& m, Rng& rng);

/// eta_lm ~ Gamma(n_lm + lambda_a, T_l T_m + lambda_b), K x K row-major; all
/// ones under unit interaction.
std::vector<double> impute_eta(const SufficientStats& stats, const MeasureState& m, Rng& rng);

/// Poisson(rate) conditioned on being positive. A nonpositive rate gives 1.
long sample_zero_truncated_poisson(double rate, Rng& rng);

/// Update of one dyad given its Poisson rate: held-out entries are redrawn
/// (clipped to {0,1} when requested); observed entries of a binarized matrix
/// are redrawn from the zero-truncated Poisson; exact counts are left alone.
long update_edge_count(long current, bool held_out, bool binary_mode, double rate, Rng& rng,
                       bool clip_held_out = false);

void impute_edges(CountGraph& graph, const std::vector<int>& labels, int K, const std::vector<double>& weights,
                  const std::vector<double>& eta, Rng& rng, bool clip_held_out = false);

struct McmcConfig {
    int K = 1;
    long iterations = 2000;
    /// < 0 selects iterations / 2.
    long burn_in = -1;
    int mh_steps = 150;
    double step_size = 0.1;
    bool unit_interaction = false;
    bool sample_beta0 = true;
    bool sample_measure = true;
    bool sample_labels = true;
    bool clip_held_out = false;
    /// Record labels every `label_stride` iterations (0 disables).
    long label_stride = 0;
    std::optional<std::vector<int>> initial_labels;
    std::optional<MeasureState> initial_measure;
    double initial_beta0 = 1.0;
    std::function<void(long)> progress;
};

struct TraceRow {
    long iter = 0;
    double logp = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
    std::vector<double> alpha, s, t, u;
    double beta0 = 0.0;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double accept_rate = 0.0;
};

struct Prediction {
    int i = 0;
    int j = 0;
    double score = 0.0;
};

struct Chain {
    std::vector<TraceRow> trace;
    std::vector<std::pair<long, std::vector<int>>> label_snapshots;
    /// Posterior mean presence probability per held-out dyad (symmetric data:
    /// one entry per unordered pair with i <= j).
    std::vector<Prediction> predictions;
    BlockState initial_labels;
    MeasureState initial_measure;
    BlockState final_labels;
    MeasureState final_measure;
    /// Per-vertex post-burn-in label frequencies, vertex-major K columns.
    std::vector<long> label_counts;

    /// Most frequent post-burn-in label of each vertex (final labels if no
    /// post-burn-in iteration ran).
    std::vector<int> mode_labels() const;
};

/// Initial state: uniform random labels, sigma = 0.5, tau = 1,
/// alpha_l = k/K, s_l and t_l each one draw of the block's total mass,
/// u_l = pi/2, lambda_a = lambda_b = 1.
MeasureState initial_measure_state(int n_vertices, int K, bool unit_interaction, Rng& rng);

Chain run_mcmc(const EdgeCountMatrix& A, const McmcConfig& config, Rng& rng);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace, int K);
void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions_csv(std::istream& in);
void write_label_snapshots(std::ostream& out, const std::vector<std::pair<long, std::vector<int>>>& snapshots);

}  // namespace crmsbm
