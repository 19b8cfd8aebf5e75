#include "crmsbm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "crmsbm/error.hpp"

namespace crmsbm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gamma21(double x) { return std::log(x) - x; }

bool valid_state(const MeasureState& m, double beta0) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!(m.sigma > 0.0 && m.sigma < 1.0) || !positive(m.tau) || !positive(beta0)) return false;
    for (const auto& b : m.blocks)
        if (!positive(b.alpha) || !positive(b.s) || !positive(b.t) || !(b.u > 0.0 && b.u < std::numbers::pi))
            return false;
    return m.unit_interaction || (positive(m.lambda_a) && positive(m.lambda_b));
}

// Block counts for incremental label moves.
class LabelWorkspace {
public:
    LabelWorkspace(const CountGraph& graph, const std::vector<int>& labels, int K, const MeasureState& m)
        : graph_(graph), labels_(labels), K_(K), m_(m), out_(static_cast<std::size_t>(K)),
          in_(static_cast<std::size_t>(K)) {
        const SufficientStats st = suff_stats(graph, labels, K);
        n_ = st.vertex_endpoints;
        block_n_ = st.block_endpoints;
        block_k_ = st.block_vertices;
        tile_ = st.tile;
    }

    const std::vector<int>& labels() const { return labels_; }

    // Detaches v from its block and returns the log conditional weights of
    // each candidate block.
    std::vector<double> detach_and_score(int v) {
        load_neighbourhood(v);
        move(v, labels_[static_cast<std::size_t>(v)], -1);
        std::vector<double> scores(static_cast<std::size_t>(K_));
        for (int b = 0; b < K_; ++b) {
            const double before = local(b);
            move(v, b, +1);
            const double after = local(b);
            move(v, b, -1);
            scores[static_cast<std::size_t>(b)] = after - before;
        }
        return scores;
    }

    void attach(int v, int b) {
        move(v, b, +1);
        labels_[static_cast<std::size_t>(v)] = b;
    }

private:
    void load_neighbourhood(int v) {
        std::fill(out_.begin(), out_.end(), 0);
        std::fill(in_.begin(), in_.end(), 0);
        self_ = 0;
        const auto& dyads = graph_.dyads();
        for (int e : graph_.outgoing(v)) {
            const auto& d = dyads[static_cast<std::size_t>(e)];
            if (d.j == v)
                self_ += d.count;
            else
                out_[static_cast<std::size_t>(labels_[static_cast<std::size_t>(d.j)])] += d.count;
        }
        for (int e : graph_.incoming(v)) {
            const auto& d = dyads[static_cast<std::size_t>(e)];
            in_[static_cast<std::size_t>(labels_[static_cast<std::size_t>(d.i)])] += d.count;
        }
    }

    void move(int v, int b, long sign) {
        const long n = n_[static_cast<std::size_t>(v)];
        if (n == 0) return;
        const auto bu = static_cast<std::size_t>(b);
        block_n_[bu] += sign * n;
        block_k_[bu] += sign;
        for (int c = 0; c < K_; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            tile_[bu * static_cast<std::size_t>(K_) + cu] += sign * out_[cu];
            tile_[cu * static_cast<std::size_t>(K_) + bu] += sign * in_[cu];
        }
        tile_[bu * static_cast<std::size_t>(K_) + bu] += sign * self_;
    }

    double mass(int b) const { return m_.block_mass(b, block_k_[static_cast<std::size_t>(b)]); }

    // Every term of the joint that involves block b.
    double local(int b) const {
        const auto bu = static_cast<std::size_t>(b);
        double v = log_block_core(m_, b, block_n_[bu], block_k_[bu]);
        const double Tb = mass(b);
        for (int c = 0; c < K_; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            const double Tc = mass(c);
            v += log_tile_term(m_, tile_[bu * static_cast<std::size_t>(K_) + cu], Tb, Tc);
            if (c != b) v += log_tile_term(m_, tile_[cu * static_cast<std::size_t>(K_) + bu], Tc, Tb);
        }
        return v;
    }

    const CountGraph& graph_;
    std::vector<int> labels_;
    int K_;
    const MeasureState& m_;
    std::vector<long> n_, block_n_, block_k_, tile_;
    std::vector<long> out_, in_;
    long self_ = 0;
};

std::vector<double> normalize_log(const std::vector<double>& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    if (!std::isfinite(top)) return p;
    double total = 0.0;
    for (std::size_t b = 0; b < scores.size(); ++b) total += p[b] = std::exp(scores[b] - top);
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

double log_posterior(const SufficientStats& stats, const MeasureState& m, double beta0, TotalMassTerm mode) {
    double v = log_joint_terms(stats, m, beta0, mode).total() + log_gamma21(beta0);
    if (!m.unit_interaction) v += log_gamma21(m.lambda_a) + log_gamma21(m.lambda_b);
    return v;
}

MhResult mh_sweep(const SufficientStats& stats, const MeasureState& m, double beta0, const MhSettings& settings,
                  Rng& rng) {
    if (settings.steps < 1) throw DomainError("MH needs at least one step");
    std::vector<double> y = transform_params(m);
    y.push_back(std::log(beta0));
    const std::size_t dim = y.size();
    std::vector<bool> active = settings.active.empty() ? std::vector<bool>(dim, true) : settings.active;
    if (active.size() != dim) throw DomainError("MH coordinate mask has wrong length");
    if (!settings.sample_beta0) active.back() = false;

    std::vector<double> core(dim - 1);
    auto target = [&](const std::vector<double>& x) {
        std::copy(x.begin(), x.end() - 1, core.begin());
        const MeasureState cand = untransform(core, m);
        const double b0 = std::exp(x.back());
        if (!valid_state(cand, b0)) return kNegInf;
        return log_posterior(stats, cand, b0) + log_jacobian(core, m) + x.back();
    };

    std::normal_distribution<double> step(0.0, settings.step_size);
    double current = target(y);
    long proposals = 0, accepted = 0;
    for (int s = 0; s < settings.steps; ++s)
        for (std::size_t k = 0; k < dim; ++k) {
            if (!active[k]) continue;
            const double old = y[k];
            y[k] = old + step(rng);
            const double proposed = target(y);
            ++proposals;
            const double log_ratio = proposed - current;
            if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
                current = proposed;
                ++accepted;
            } else {
                y[k] = old;
            }
        }

    MhResult out;
    std::copy(y.begin(), y.end() - 1, core.begin());
    out.measure = untransform(core, m);
    out.beta0 = std::exp(y.back());
    out.acceptance_rate = proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
    return out;
}

std::vector<double> gibbs_conditional(const CountGraph& graph, const std::vector<int>& labels, int K,
                                      const MeasureState& m, int vertex) {
    LabelWorkspace ws(graph, labels, K, m);
    return normalize_log(ws.detach_and_score(vertex));
}

void gibbs_z_sweep(const CountGraph& graph, BlockState& z, const MeasureState& m, Rng& rng) {
    z.validate();
    if (z.K == 1) return;
    LabelWorkspace ws(graph, z.labels, z.K, m);
    for (int v = 0; v < graph.n_vertices(); ++v) {
        const int current = ws.labels()[static_cast<std::size_t>(v)];
        const std::vector<double> p = normalize_log(ws.detach_and_score(v));
        int chosen = current;
        if (std::any_of(p.begin(), p.end(), [](double x) { return x > 0.0; }))
            chosen = static_cast<int>(std::discrete_distribution<int>(p.begin(), p.end())(rng));
        ws.attach(v, chosen);
    }
    z.labels = ws.labels();
}

std::vector<double> impute_weights(const SufficientStats& stats, const MeasureState& m, int l, Rng& rng) {
    std::vector<double> conc;
    for (std::size_t v = 0; v < stats.labels.size(); ++v)
        if (stats.labels[v] == l && stats.vertex_endpoints[v] > 0)
            conc.push_back(static_cast<double>(stats.vertex_endpoints[v]) - m.sigma);
    if (conc.empty()) throw DomainError("cannot impute weights of an empty block");
    return sample_dirichlet(conc, rng);
}

std::vector<double> impute_all_weights(const SufficientStats& stats, const MeasureState& m, Rng& rng) {
    std::vector<double> w(stats.labels.size(), 0.0);
    for (int l = 0; l < stats.K; ++l) {
        if (stats.block_vertices[static_cast<std::size_t>(l)] == 0) continue;
        const std::vector<double> x = impute_weights(stats, m, l, rng);
        const double s = m.blocks[static_cast<std::size_t>(l)].s;
        std::size_t k = 0;
        for (std::size_t v = 0; v < stats.labels.size(); ++v)
            if (stats.labels[v] == l && stats.vertex_endpoints[v] > 0) w[v] = x[k++] * s;
    }
    return w;
}

std::vector<double> impute_eta(const SufficientStats& stats, const MeasureState& m, Rng& rng) {
    const int K = stats.K;
    std::vector<double> eta(static_cast<std::size_t>(K * K), 1.0);
    if (m.unit_interaction) return eta;
    for (int l = 0; l < K; ++l)
        for (int k = 0; k < K; ++k) {
            const double T = m.block_mass(l, stats.block_vertices[static_cast<std::size_t>(l)]) *
                             m.block_mass(k, stats.block_vertices[static_cast<std::size_t>(k)]);
            eta[static_cast<std::size_t>(l * K + k)] =
                sample_gamma(static_cast<double>(stats.tile_count(l, k)) + m.lambda_a, T + m.lambda_b, rng);
        }
    return eta;
}

long sample_zero_truncated_poisson(double rate, Rng& rng) {
    if (!(rate > 0.0)) return 1;
    if (rate > 1.0) {
        while (true) {
            const long a = sample_poisson(rate, rng);
            if (a > 0) return a;
        }
    }
    // Inverse CDF from k = 1; p_1 = rate / expm1(rate).
    const double u = uniform01(rng);
    double p = rate / std::expm1(rate);
    double cdf = p;
    long k = 1;
    while (u > cdf && p > 0.0) {
        ++k;
        p *= rate / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

long update_edge_count(long current, bool held_out, bool binary_mode, double rate, Rng& rng, bool clip_held_out) {
    if (held_out) {
        const long a = sample_poisson(rate, rng);
        return clip_held_out ? std::min<long>(a, 1) : a;
    }
    if (!binary_mode || current == 0) return current;
    return sample_zero_truncated_poisson(rate, rng);
}

void impute_edges(CountGraph& graph, const std::vector<int>& labels, int K, const std::vector<double>& weights,
                  const std::vector<double>& eta, Rng& rng, bool clip_held_out) {
    for (auto& d : graph.dyads()) {
        const auto zi = static_cast<std::size_t>(labels[static_cast<std::size_t>(d.i)]);
        const auto zj = static_cast<std::size_t>(labels[static_cast<std::size_t>(d.j)]);
        const double rate = eta[zi * static_cast<std::size_t>(K) + zj] * weights[static_cast<std::size_t>(d.i)] *
                            weights[static_cast<std::size_t>(d.j)];
        d.count = update_edge_count(d.count, d.held_out, graph.binary_mode(), rate, rng, clip_held_out);
    }
}

std::vector<int> Chain::mode_labels() const {
    const int K = final_labels.K;
    const std::size_t n = final_labels.labels.size();
    if (label_counts.empty() || std::all_of(label_counts.begin(), label_counts.end(), [](long c) { return c == 0; }))
        return final_labels.labels;
    std::vector<int> mode(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto row = label_counts.begin() + static_cast<std::ptrdiff_t>(v * static_cast<std::size_t>(K));
        mode[v] = static_cast<int>(std::max_element(row, row + K) - row);
    }
    return mode;
}

MeasureState initial_measure_state(int n_vertices, int K, bool unit_interaction, Rng& rng) {
    MeasureState m;
    m.sigma = 0.5;
    m.tau = 1.0;
    m.unit_interaction = unit_interaction;
    const double alpha = std::max(1.0, static_cast<double>(n_vertices)) / K;
    const GgpParams p(alpha, m.sigma, m.tau);
    for (int l = 0; l < K; ++l) {
        BlockParams b;
        b.alpha = alpha;
        b.s = sample_total_mass(p, rng);
        b.t = sample_total_mass(p, rng);
        b.u = std::numbers::pi / 2.0;
        m.blocks.push_back(b);
    }
    return m;
}

Chain run_mcmc(const EdgeCountMatrix& A, const McmcConfig& config, Rng& rng) {
    if (config.K < 1) throw DomainError("K must be at least 1");
    if (config.iterations < 0) throw DomainError("iteration count must be nonnegative");
    A.validate(true);
    CountGraph graph(A);
    const int n = graph.n_vertices();
    const int K = config.K;

    BlockState z;
    z.K = K;
    z.beta0 = config.initial_beta0;
    if (config.initial_labels) {
        z.labels = *config.initial_labels;
        if (static_cast<int>(z.labels.size()) != n) throw DomainError("initial labels have wrong length");
    } else {
        std::uniform_int_distribution<int> pick(0, K - 1);
        z.labels.resize(static_cast<std::size_t>(n));
        for (auto& l : z.labels) l = pick(rng);
    }
    z.validate();
    MeasureState m = config.initial_measure ? *config.initial_measure
                                            : initial_measure_state(n, K, config.unit_interaction, rng);
    if (m.K() != K) throw DomainError("initial measure state has wrong K");

    Chain chain;
    chain.initial_labels = z;
    chain.initial_measure = m;
    chain.label_counts.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(K), 0);

    // Prediction targets: each held-out ordered dyad, or each unordered pair
    // (both orientations) for symmetric data.
    std::map<Dyad, int> dyad_index;
    for (std::size_t e = 0; e < graph.dyads().size(); ++e)
        if (graph.dyads()[e].held_out) dyad_index[{graph.dyads()[e].i, graph.dyads()[e].j}] = static_cast<int>(e);
    struct Target {
        int i, j;
        std::vector<int> dyads;
    };
    std::vector<Target> targets;
    for (const auto& [d, e] : dyad_index) {
        if (A.symmetric()) {
            if (d.first > d.second) continue;
            Target t{d.first, d.second, {e}};
            if (d.first != d.second) {
                const auto it = dyad_index.find({d.second, d.first});
                if (it != dyad_index.end()) t.dyads.push_back(it->second);
            }
            targets.push_back(std::move(t));
        } else {
            targets.push_back({d.first, d.second, {e}});
        }
    }
    std::vector<double> score_sum(targets.size(), 0.0);
    long score_draws = 0;
    const bool impute = !dyad_index.empty() || graph.binary_mode();
    const long burn_in = config.burn_in < 0 ? config.iterations / 2 : config.burn_in;

    MhSettings mh;
    mh.steps = config.mh_steps;
    mh.step_size = config.step_size;
    mh.sample_beta0 = config.sample_beta0;

    for (long it = 0; it < config.iterations; ++it) {
        SufficientStats stats = suff_stats(graph, z.labels, K);
        double accept = 0.0;
        if (config.sample_measure) {
            const MhResult r = mh_sweep(stats, m, z.beta0, mh, rng);
            m = r.measure;
            z.beta0 = r.beta0;
            accept = r.acceptance_rate;
        }
        if (config.sample_labels && K > 1) {
            gibbs_z_sweep(graph, z, m, rng);
            stats = suff_stats(graph, z.labels, K);
        }
        if (impute) {
            const std::vector<double> w = impute_all_weights(stats, m, rng);
            const std::vector<double> eta = impute_eta(stats, m, rng);
            if (it >= burn_in && !targets.empty()) {
                for (std::size_t k = 0; k < targets.size(); ++k) {
                    double rate = 0.0;
                    for (int e : targets[k].dyads) {
                        const auto& d = graph.dyads()[static_cast<std::size_t>(e)];
                        rate += eta[static_cast<std::size_t>(z.labels[static_cast<std::size_t>(d.i)] * K +
                                                             z.labels[static_cast<std::size_t>(d.j)])] *
                                w[static_cast<std::size_t>(d.i)] * w[static_cast<std::size_t>(d.j)];
                    }
                    score_sum[k] += -std::expm1(-rate);
                }
                ++score_draws;
            }
            impute_edges(graph, z.labels, K, w, eta, rng, config.clip_held_out);
            stats = suff_stats(graph, z.labels, K);
        }

        TraceRow row;
        row.iter = it + 1;
        row.logp = log_joint_terms(stats, m, z.beta0).total();
        row.sigma = m.sigma;
        row.tau = m.tau;
        for (const auto& b : m.blocks) {
            row.alpha.push_back(b.alpha);
            row.s.push_back(b.s);
            row.t.push_back(b.t);
            row.u.push_back(b.u);
        }
        row.beta0 = z.beta0;
        row.lambda_a = m.lambda_a;
        row.lambda_b = m.lambda_b;
        row.accept_rate = accept;
        chain.trace.push_back(std::move(row));

        if (it >= burn_in)
            for (int v = 0; v < n; ++v)
                ++chain.label_counts[static_cast<std::size_t>(v) * static_cast<std::size_t>(K) +
                                     static_cast<std::size_t>(z.labels[static_cast<std::size_t>(v)])];
        if (config.label_stride > 0 && (it + 1) % config.label_stride == 0)
            chain.label_snapshots.emplace_back(it + 1, z.labels);
        if (config.progress) config.progress(it + 1);
    }

    for (std::size_t k = 0; k < targets.size(); ++k)
        chain.predictions.push_back(
            {targets[k].i, targets[k].j, score_draws > 0 ? score_sum[k] / static_cast<double>(score_draws) : 0.0});
    chain.final_labels = z;
    chain.final_measure = m;
    return chain;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace, int K) {
    out << "iter,logp,sigma,tau";
    for (const char* name : {"alpha", "s", "t"})
        for (int l = 1; l <= K; ++l) out << ',' << name << '_' << l;
    out << ",accept_rate\n";
    out.precision(12);
    for (const auto& r : trace) {
        out << r.iter << ',' << r.logp << ',' << r.sigma << ',' << r.tau;
        for (const auto* col : {&r.alpha, &r.s, &r.t})
            for (double v : *col) out << ',' << v;
        out << ',' << r.accept_rate << '\n';
    }
}

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions) {
    out << "i,j,score\n";
    out.precision(12);
    for (const auto& p : predictions) out << p.i + 1 << ',' << p.j + 1 << ',' << p.score << '\n';
}

std::vector<Prediction> read_predictions_csv(std::istream& in) {
    std::vector<Prediction> preds;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.rfind("i,", 0) == 0) continue;
        Prediction p;
        char c1 = 0, c2 = 0;
        std::istringstream fields(line);
        if (!(fields >> p.i >> c1 >> p.j >> c2 >> p.score) || c1 != ',' || c2 != ',')
            throw ParseError("expected 'i,j,score'", line_no);
        --p.i;
        --p.j;
        preds.push_back(p);
    }
    return preds;
}

void write_label_snapshots(std::ostream& out, const std::vector<std::pair<long, std::vector<int>>>& snapshots) {
    for (const auto& [iter, labels] : snapshots) {
        out << iter;
        for (int l : labels) out << ',' << l + 1;
        out << '\n';
    }
}

}  // namespace crmsbm
