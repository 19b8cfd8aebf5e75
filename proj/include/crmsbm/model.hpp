#pragma once

// Collapsed joint density of the block-structured CRM network model, with the
// per-vertex weights and interaction rates integrated out. Each block l
// carries (alpha_l, s_l, t_l, u_l): its share of the location window, the
// mass of the selected atoms, the mass of the unselected atoms, and the
// auxiliary angle of the Zolotarev representation of the total-mass density.

#include <map>
#include <vector>

#include "crmsbm/data.hpp"
#include "crmsbm/ggp.hpp"

namespace crmsbm {

struct BlockState {
    /// 0-based labels in [0, K).
    std::vector<int> labels;
    int K = 1;
    double beta0 = 1.0;

    /// Throws DomainError on K < 1, beta0 <= 0 or an out-of-range label.
    void validate() const;
};

struct BlockParams {
    double alpha = 1.0;
    double s = 1.0;
    double t = 1.0;
    double u = 1.5707963267948966;
};

struct MeasureState {
    double sigma = 0.5;
    double tau = 1.0;
    std::vector<BlockParams> blocks;
    double lambda_a = 1.0;
    double lambda_b = 1.0;
    /// Interaction rates fixed at 1 (the lambda_a = lambda_b -> infinity
    /// limit); lambda_a and lambda_b are then unused.
    bool unit_interaction = false;

    int K() const noexcept { return static_cast<int>(blocks.size()); }
    double total_alpha() const;
    /// T_l = t_l + s_l, or t_l alone when the block selects no vertex.
    double block_mass(int l, long block_vertices) const;
};

/// Observed dyads plus every held-out dyad (count possibly 0, imputed during
/// sampling), with per-vertex incidence lists.
class CountGraph {
public:
    struct Dyad {
        int i = 0;
        int j = 0;
        long count = 0;
        bool held_out = false;
    };

    CountGraph() = default;
    explicit CountGraph(const EdgeCountMatrix& A);

    int n_vertices() const noexcept { return n_; }
    bool binary_mode() const noexcept { return binary_; }
    std::vector<Dyad>& dyads() noexcept { return dyads_; }
    const std::vector<Dyad>& dyads() const noexcept { return dyads_; }
    /// Dyads with source v (self-edges included) and with target v (self-edges excluded).
    const std::vector<int>& outgoing(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& incoming(int v) const { return in_[static_cast<std::size_t>(v)]; }

private:
    int n_ = 0;
    bool binary_ = false;
    std::vector<Dyad> dyads_;
    std::vector<std::vector<int>> out_, in_;
};

struct SufficientStats {
    int K = 1;
    std::vector<int> labels;
    /// n_i = sum_j (A_ij + A_ji); a self-edge contributes 2.
    std::vector<long> vertex_endpoints;
    std::vector<long> block_endpoints;
    /// Vertices with n_i >= 1 per block.
    std::vector<long> block_vertices;
    /// n_lm, K x K row-major.
    std::vector<long> tile;
    long n_vertices = 0;
    /// sum over dyads of log A_ij!
    double log_factorial_sum = 0.0;
    /// Per block: n_i -> number of vertices with that endpoint count.
    std::vector<std::map<long, long>> endpoint_histogram;

    long tile_count(int l, int m) const { return tile[static_cast<std::size_t>(l * K + m)]; }
};

SufficientStats suff_stats(const CountGraph& graph, const std::vector<int>& labels, int K);
SufficientStats suff_stats(const EdgeCountMatrix& A, const BlockState& z);

enum class TotalMassTerm {
    /// g evaluated jointly with the auxiliary angle u (no quadrature).
    augmented,
    /// g evaluated by quadrature; u is ignored.
    marginal,
};

struct LogJointTerms {
    double alpha_prior = 0.0;
    double blocks = 0.0;
    double pochhammer = 0.0;
    double factorials = 0.0;
    double tiles = 0.0;
    double total() const { return alpha_prior + blocks + pochhammer + factorials + tiles; }
};

/// log Gamma(beta0) + sum_l (beta0/K - 1) log alpha_l - K log Gamma(beta0/K) - beta0 log alpha
double log_alpha_prior(const MeasureState& m, double beta0);

/// Block factor without its Pochhammer product:
///   k log alpha_l + (n - k sigma - 1) log s_l - log Gamma(n - k sigma) - tau s_l + log g(t_l).
/// An empty block contributes log g(t_l) - s_l: s_l then follows a unit
/// exponential pseudo-prior so the block can be repopulated.
double log_block_core(const MeasureState& m, int l, long n_l, long k_l,
                      TotalMassTerm mode = TotalMassTerm::augmented);

/// log E_l, including prod_i (1 - sigma)_(n_i - 1) over the block's vertices.
double log_E_block(const SufficientStats& stats, const MeasureState& m, int l,
                   TotalMassTerm mode = TotalMassTerm::augmented);

/// log G(lambda_a + n, lambda_b + T_l T_m) - log G(lambda_a, lambda_b), or
/// -T_l T_m under unit interaction.
double log_tile_term(const MeasureState& m, long n_lm, double T_l, double T_m);

/// Throws NumericError naming the first NaN term.
LogJointTerms log_joint_terms(const SufficientStats& stats, const MeasureState& m, double beta0,
                              TotalMassTerm mode = TotalMassTerm::augmented);

double log_joint(const EdgeCountMatrix& A, const BlockState& z, const MeasureState& m,
                 TotalMassTerm mode = TotalMassTerm::augmented);

/// Unconstrained coordinates: logit sigma, log tau, then per block
/// (log alpha, log s, log t, logit(u/pi)), then log lambda_a, log lambda_b
/// unless the interaction is fixed at 1.
std::vector<double> transform_params(const MeasureState& m);
/// Inverse of transform_params; `shape` supplies K and the interaction mode.
MeasureState untransform(const std::vector<double>& y, const MeasureState& shape);
/// log |d(constrained)/d(y)| at y.
double log_jacobian(const std::vector<double>& y, const MeasureState& shape);

}  // namespace crmsbm
