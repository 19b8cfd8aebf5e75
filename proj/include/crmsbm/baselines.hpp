#pragma once

// Degree-corrected block model (DCSBM) and its no-degree-correction
// restriction (pIRM), with a Chinese restaurant process prior on labels.
// Per-block degree weights theta and interaction rates eta are integrated
// out (Dirichlet-multinomial and Gamma-Poisson conjugacy).
//
// Rate of A_ij: k_{z_i} k_{z_j} theta1_i theta2_j eta_{z_i z_j}, with k_l the
// block size and theta1, theta2 ~ Dirichlet(gamma) within each block. The
// pIRM fixes theta at 1/k_l, so the rate is eta_{z_i z_j}.

#include <functional>
#include <iosfwd>
#include <vector>

#include "crmsbm/model.hpp"
#include "crmsbm/sampler.hpp"

namespace crmsbm {

struct DcsbmState {
    /// 0-based labels using every block in [0, K).
    std::vector<int> labels;
    int K = 1;
    double gamma = 1.0;
    double crp_alpha = 1.0;
    double lambda_a = 1.0;
    double lambda_b = 1.0;
    bool degree_corrected = true;
};

/// log CRP(z | alpha) = K log alpha + log Gamma(alpha) - log Gamma(alpha + n) + sum_l log Gamma(k_l).
double crp_log_prior(const std::vector<int>& labels, int K, double crp_alpha);

/// Collapsed log joint p(A, z | gamma, alpha, lambda_a, lambda_b).
double dcsbm_log_joint(const CountGraph& graph, const DcsbmState& state);
double dcsbm_log_joint(const EdgeCountMatrix& A, const DcsbmState& state);

/// Conditional over the label of `vertex`: entries for each block that stays
/// nonempty without the vertex, in label order, followed by a new block.
std::vector<double> dcsbm_conditional(const CountGraph& graph, const DcsbmState& state, int vertex);

/// Relabels blocks by first appearance and returns the block count.
int canonicalize_labels(std::vector<int>& labels);

struct BaselineConfig {
    bool degree_corrected = true;
    int initial_K = 1;
    long iterations = 2000;
    long burn_in = -1;
    int mh_steps = 150;
    double step_size = 0.1;
    bool clip_held_out = false;
    long label_stride = 0;
    std::function<void(long)> progress;
};

struct BaselineTraceRow {
    long iter = 0;
    double logp = 0.0;
    int K = 1;
    double gamma = 0.0;
    double crp_alpha = 0.0;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double accept_rate = 0.0;
};

struct BaselineChain {
    std::vector<BaselineTraceRow> trace;
    std::vector<std::pair<long, std::vector<int>>> label_snapshots;
    std::vector<Prediction> predictions;
    DcsbmState final_state;
};

/// One collapsed Gibbs pass over vertices in ascending order.
void dcsbm_gibbs_sweep(const CountGraph& graph, DcsbmState& state, Rng& rng);

/// Per iteration: random-walk MH over log gamma (DCSBM only), log alpha,
/// log lambda_a, log lambda_b with Gamma(2,1) priors; a Gibbs sweep over
/// labels; then imputation of theta, eta and missing or binarized counts.
BaselineChain dcsbm_gibbs(const EdgeCountMatrix& A, const BaselineConfig& config, Rng& rng);

void write_baseline_trace_csv(std::ostream& out, const std::vector<BaselineTraceRow>& trace);

}  // namespace crmsbm
