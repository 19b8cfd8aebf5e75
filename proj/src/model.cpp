#include "crmsbm/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "crmsbm/error.hpp"

namespace crmsbm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

void BlockState::validate() const {
    if (K < 1) throw DomainError("K must be at least 1");
    if (!(beta0 > 0.0)) throw DomainError("beta0 must be positive");
    for (int z : labels)
        if (z < 0 || z >= K) throw DomainError("block label out of range");
}

double MeasureState::total_alpha() const {
    double a = 0.0;
    for (const auto& b : blocks) a += b.alpha;
    return a;
}

double MeasureState::block_mass(int l, long block_vertices) const {
    const auto& b = blocks[static_cast<std::size_t>(l)];
    return block_vertices > 0 ? b.s + b.t : b.t;
}

CountGraph::CountGraph(const EdgeCountMatrix& A)
    : n_(A.n_vertices()), binary_(A.binary_mode()), out_(static_cast<std::size_t>(A.n_vertices())),
      in_(static_cast<std::size_t>(A.n_vertices())) {
    for (const auto& [d, c] : A.entries()) dyads_.push_back({d.first, d.second, c, false});
    for (const auto& d : A.holdout()) dyads_.push_back({d.first, d.second, 0, true});
    for (std::size_t e = 0; e < dyads_.size(); ++e) {
        const auto& d = dyads_[e];
        if (d.i < 0 || d.i >= n_ || d.j < 0 || d.j >= n_) throw DomainError("dyad index out of range");
        out_[static_cast<std::size_t>(d.i)].push_back(static_cast<int>(e));
        if (d.j != d.i) in_[static_cast<std::size_t>(d.j)].push_back(static_cast<int>(e));
    }
}

SufficientStats suff_stats(const CountGraph& graph, const std::vector<int>& labels, int K) {
    if (static_cast<int>(labels.size()) != graph.n_vertices()) throw DomainError("label vector has wrong length");
    for (int z : labels)
        if (z < 0 || z >= K) throw DomainError("block label out of range");
    SufficientStats st;
    st.K = K;
    st.labels = labels;
    const auto Ku = static_cast<std::size_t>(K);
    st.vertex_endpoints.assign(labels.size(), 0);
    st.block_endpoints.assign(Ku, 0);
    st.block_vertices.assign(Ku, 0);
    st.tile.assign(Ku * Ku, 0);
    st.endpoint_histogram.assign(Ku, {});
    for (const auto& d : graph.dyads()) {
        if (d.count == 0) continue;
        st.vertex_endpoints[static_cast<std::size_t>(d.i)] += d.count;
        st.vertex_endpoints[static_cast<std::size_t>(d.j)] += d.count;
        st.tile[static_cast<std::size_t>(labels[static_cast<std::size_t>(d.i)] * K + labels[static_cast<std::size_t>(d.j)])] +=
            d.count;
        st.log_factorial_sum += std::lgamma(static_cast<double>(d.count) + 1.0);
    }
    for (std::size_t v = 0; v < labels.size(); ++v) {
        const long n = st.vertex_endpoints[v];
        if (n == 0) continue;
        const auto b = static_cast<std::size_t>(labels[v]);
        st.block_endpoints[b] += n;
        ++st.block_vertices[b];
        ++st.endpoint_histogram[b][n];
        ++st.n_vertices;
    }
    return st;
}

SufficientStats suff_stats(const EdgeCountMatrix& A, const BlockState& z) {
    z.validate();
    return suff_stats(CountGraph(A), z.labels, z.K);
}

double log_alpha_prior(const MeasureState& m, double beta0) {
    const double K = m.K();
    double v = std::lgamma(beta0) - K * std::lgamma(beta0 / K) - beta0 * std::log(m.total_alpha());
    for (const auto& b : m.blocks) v += (beta0 / K - 1.0) * std::log(b.alpha);
    return v;
}

double log_block_core(const MeasureState& m, int l, long n_l, long k_l, TotalMassTerm mode) {
    const auto& b = m.blocks[static_cast<std::size_t>(l)];
    const GgpParams p(b.alpha, m.sigma, m.tau);
    const double lg = mode == TotalMassTerm::augmented ? log_total_mass_density_augmented(p, b.t, b.u)
                                                       : log_total_mass_density(p, b.t);
    if (!std::isfinite(lg)) return lg;
    if (k_l == 0) return lg - b.s;
    const double shape = static_cast<double>(n_l) - static_cast<double>(k_l) * m.sigma;
    if (!(shape > 0.0)) throw DomainError("block has n_l - k_l sigma <= 0");
    return static_cast<double>(k_l) * std::log(b.alpha) + (shape - 1.0) * std::log(b.s) - std::lgamma(shape) -
           m.tau * b.s + lg;
}

double log_E_block(const SufficientStats& stats, const MeasureState& m, int l, TotalMassTerm mode) {
    const auto lu = static_cast<std::size_t>(l);
    double v = log_block_core(m, l, stats.block_endpoints[lu], stats.block_vertices[lu], mode);
    for (const auto& [n, count] : stats.endpoint_histogram[lu])
        v += static_cast<double>(count) * pochhammer_log(1.0 - m.sigma, n - 1);
    return v;
}

double log_tile_term(const MeasureState& m, long n_lm, double T_l, double T_m) {
    if (m.unit_interaction) return -T_l * T_m;
    return gamma_norm_log(m.lambda_a + static_cast<double>(n_lm), m.lambda_b + T_l * T_m) -
           gamma_norm_log(m.lambda_a, m.lambda_b);
}

LogJointTerms log_joint_terms(const SufficientStats& stats, const MeasureState& m, double beta0, TotalMassTerm mode) {
    const int K = stats.K;
    if (m.K() != K) throw DomainError("measure state and statistics disagree on K");
    LogJointTerms terms;
    terms.alpha_prior = log_alpha_prior(m, beta0);
    std::vector<double> T(static_cast<std::size_t>(K));
    for (int l = 0; l < K; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        terms.blocks += log_block_core(m, l, stats.block_endpoints[lu], stats.block_vertices[lu], mode);
        for (const auto& [n, count] : stats.endpoint_histogram[lu])
            terms.pochhammer += static_cast<double>(count) * pochhammer_log(1.0 - m.sigma, n - 1);
        T[lu] = m.block_mass(l, stats.block_vertices[lu]);
    }
    terms.factorials = -stats.log_factorial_sum;
    for (int l = 0; l < K; ++l)
        for (int k = 0; k < K; ++k)
            terms.tiles += log_tile_term(m, stats.tile_count(l, k), T[static_cast<std::size_t>(l)],
                                         T[static_cast<std::size_t>(k)]);

    const std::pair<const char*, double> named[] = {{"alpha prior", terms.alpha_prior},
                                                    {"block", terms.blocks},
                                                    {"Pochhammer", terms.pochhammer},
                                                    {"factorial", terms.factorials},
                                                    {"tile", terms.tiles}};
    for (const auto& [name, value] : named)
        if (std::isnan(value)) {
            std::ostringstream msg;
            msg << "NaN in " << name << " term of the joint (sigma=" << m.sigma << ", tau=" << m.tau << ")";
            throw NumericError(msg.str());
        }
    return terms;
}

double log_joint(const EdgeCountMatrix& A, const BlockState& z, const MeasureState& m, TotalMassTerm mode) {
    return log_joint_terms(suff_stats(A, z), m, z.beta0, mode).total();
}

std::vector<double> transform_params(const MeasureState& m) {
    std::vector<double> y;
    y.reserve(2 + 4 * m.blocks.size() + 2);
    y.push_back(logit(m.sigma));
    y.push_back(std::log(m.tau));
    for (const auto& b : m.blocks) {
        y.push_back(std::log(b.alpha));
        y.push_back(std::log(b.s));
        y.push_back(std::log(b.t));
        y.push_back(logit(b.u / std::numbers::pi));
    }
    if (!m.unit_interaction) {
        y.push_back(std::log(m.lambda_a));
        y.push_back(std::log(m.lambda_b));
    }
    return y;
}

MeasureState untransform(const std::vector<double>& y, const MeasureState& shape) {
    const std::size_t expected = 2 + 4 * shape.blocks.size() + (shape.unit_interaction ? 0 : 2);
    if (y.size() != expected) throw DomainError("transformed vector has wrong length");
    MeasureState m = shape;
    std::size_t k = 0;
    m.sigma = logistic(y[k++]);
    m.tau = std::exp(y[k++]);
    for (auto& b : m.blocks) {
        b.alpha = std::exp(y[k++]);
        b.s = std::exp(y[k++]);
        b.t = std::exp(y[k++]);
        b.u = std::numbers::pi * logistic(y[k++]);
    }
    if (!m.unit_interaction) {
        m.lambda_a = std::exp(y[k++]);
        m.lambda_b = std::exp(y[k++]);
    }
    return m;
}

double log_jacobian(const std::vector<double>& y, const MeasureState& shape) {
    auto logistic_jac = [](double x) { return -softplus(x) - softplus(-x); };
    double j = 0.0;
    std::size_t k = 0;
    j += logistic_jac(y[k++]);
    j += y[k++];
    for (std::size_t l = 0; l < shape.blocks.size(); ++l) {
        j += y[k] + y[k + 1] + y[k + 2];
        j += std::log(std::numbers::pi) + logistic_jac(y[k + 3]);
        k += 4;
    }
    if (!shape.unit_interaction) j += y[k] + y[k + 1];
    return j;
}

}  // namespace crmsbm
