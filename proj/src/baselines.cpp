#include "crmsbm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "crmsbm/error.hpp"

namespace crmsbm {

namespace {

struct Degrees {
    std::vector<long> out, in;
};

Degrees degrees(const CountGraph& graph) {
    Degrees d{std::vector<long>(static_cast<std::size_t>(graph.n_vertices()), 0),
              std::vector<long>(static_cast<std::size_t>(graph.n_vertices()), 0)};
    for (const auto& e : graph.dyads()) {
        d.out[static_cast<std::size_t>(e.i)] += e.count;
        d.in[static_cast<std::size_t>(e.j)] += e.count;
    }
    return d;
}

// Multiplicity of each out- and in-degree value.
std::map<long, long> degree_histogram(const Degrees& d) {
    std::map<long, long> h;
    for (long x : d.out) ++h[x];
    for (long x : d.in) ++h[x];
    return h;
}

// sum_i log Gamma(gamma + d_i) - log Gamma(gamma) over out- and in-degrees.
double vertex_terms(const std::map<long, long>& hist, double gamma) {
    double v = 0.0;
    const double lg = std::lgamma(gamma);
    for (const auto& [d, count] : hist)
        if (d > 0) v += static_cast<double>(count) * (std::lgamma(gamma + static_cast<double>(d)) - lg);
    return v;
}

// Block-level degree-correction terms: the k^n rate factors and the
// Dirichlet-multinomial normalizers.
double block_dc_term(long k, long n_out, long n_in, double gamma) {
    if (k == 0) return 0.0;
    const double kd = static_cast<double>(k), kg = kd * gamma;
    return static_cast<double>(n_out + n_in) * std::log(kd) + 2.0 * std::lgamma(kg) -
           std::lgamma(kg + static_cast<double>(n_out)) - std::lgamma(kg + static_cast<double>(n_in));
}

double tile_term(long n, long k_l, long k_m, double la, double lb) {
    return gamma_norm_log(la + static_cast<double>(n), lb + static_cast<double>(k_l * k_m)) - gamma_norm_log(la, lb);
}

double log_gamma21(double x) { return std::log(x) - x; }

// Block statistics with a variable number of blocks.
class CrpWorkspace {
public:
    CrpWorkspace(const CountGraph& graph, DcsbmState& state) : graph_(graph), s_(state), deg_(degrees(graph)) {
        const auto K = static_cast<std::size_t>(s_.K);
        k_.assign(K, 0);
        n_out_.assign(K, 0);
        n_in_.assign(K, 0);
        tile_.assign(K, std::vector<long>(K, 0));
        for (std::size_t v = 0; v < s_.labels.size(); ++v) {
            const auto b = static_cast<std::size_t>(s_.labels[v]);
            ++k_[b];
            n_out_[b] += deg_.out[v];
            n_in_[b] += deg_.in[v];
        }
        for (const auto& e : graph.dyads())
            tile_[static_cast<std::size_t>(s_.labels[static_cast<std::size_t>(e.i)])]
                 [static_cast<std::size_t>(s_.labels[static_cast<std::size_t>(e.j)])] += e.count;
    }

    // Removes v (deleting its block if emptied) and scores every remaining
    // block followed by a fresh one.
    std::vector<double> detach_and_score(int v) {
        const int old = s_.labels[static_cast<std::size_t>(v)];
        load_neighbourhood(v);
        move(v, old, -1);
        if (k_[static_cast<std::size_t>(old)] == 0) drop_block(old);
        s_.labels[static_cast<std::size_t>(v)] = -1;

        add_block();
        std::vector<double> scores(static_cast<std::size_t>(s_.K));
        for (int b = 0; b < s_.K; ++b) {
            const double before = local(b);
            move(v, b, +1);
            const double after = local(b);
            move(v, b, -1);
            scores[static_cast<std::size_t>(b)] = after - before;
        }
        drop_block(s_.K - 1);
        return scores;
    }

    void attach(int v, int b) {
        if (b == s_.K) add_block();
        move(v, b, +1);
        s_.labels[static_cast<std::size_t>(v)] = b;
    }

private:
    void load_neighbourhood(int v) {
        out_.assign(static_cast<std::size_t>(s_.K), 0);
        in_.assign(static_cast<std::size_t>(s_.K), 0);
        self_ = 0;
        const auto& dyads = graph_.dyads();
        for (int e : graph_.outgoing(v)) {
            const auto& d = dyads[static_cast<std::size_t>(e)];
            if (d.j == v)
                self_ += d.count;
            else
                out_[static_cast<std::size_t>(s_.labels[static_cast<std::size_t>(d.j)])] += d.count;
        }
        for (int e : graph_.incoming(v)) {
            const auto& d = dyads[static_cast<std::size_t>(e)];
            in_[static_cast<std::size_t>(s_.labels[static_cast<std::size_t>(d.i)])] += d.count;
        }
    }

    void move(int v, int b, long sign) {
        const auto bu = static_cast<std::size_t>(b);
        k_[bu] += sign;
        n_out_[bu] += sign * deg_.out[static_cast<std::size_t>(v)];
        n_in_[bu] += sign * deg_.in[static_cast<std::size_t>(v)];
        for (std::size_t c = 0; c < out_.size(); ++c) {
            tile_[bu][c] += sign * out_[c];
            tile_[c][bu] += sign * in_[c];
        }
        tile_[bu][bu] += sign * self_;
    }

    void add_block() {
        ++s_.K;
        k_.push_back(0);
        n_out_.push_back(0);
        n_in_.push_back(0);
        for (auto& row : tile_) row.push_back(0);
        tile_.emplace_back(static_cast<std::size_t>(s_.K), 0);
        out_.push_back(0);
        in_.push_back(0);
    }

    void drop_block(int b) {
        const auto bu = static_cast<std::ptrdiff_t>(b);
        --s_.K;
        k_.erase(k_.begin() + bu);
        n_out_.erase(n_out_.begin() + bu);
        n_in_.erase(n_in_.begin() + bu);
        tile_.erase(tile_.begin() + bu);
        for (auto& row : tile_) row.erase(row.begin() + bu);
        out_.erase(out_.begin() + bu);
        in_.erase(in_.begin() + bu);
        for (int& l : s_.labels)
            if (l > b) --l;
    }

    double local(int b) const {
        const auto bu = static_cast<std::size_t>(b);
        double v = 0.0;
        if (k_[bu] > 0) v += std::log(s_.crp_alpha) + std::lgamma(static_cast<double>(k_[bu]));
        if (s_.degree_corrected) v += block_dc_term(k_[bu], n_out_[bu], n_in_[bu], s_.gamma);
        for (std::size_t c = 0; c < k_.size(); ++c) {
            v += tile_term(tile_[bu][c], k_[bu], k_[c], s_.lambda_a, s_.lambda_b);
            if (c != bu) v += tile_term(tile_[c][bu], k_[c], k_[bu], s_.lambda_a, s_.lambda_b);
        }
        return v;
    }

    const CountGraph& graph_;
    DcsbmState& s_;
    Degrees deg_;
    std::vector<long> k_, n_out_, n_in_;
    std::vector<std::vector<long>> tile_;
    std::vector<long> out_, in_;
    long self_ = 0;
};

std::vector<double> normalize_log(const std::vector<double>& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double total = 0.0;
    for (std::size_t b = 0; b < scores.size(); ++b) total += p[b] = std::exp(scores[b] - top);
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

int canonicalize_labels(std::vector<int>& labels) {
    std::map<int, int> remap;
    for (int& l : labels) {
        const auto it = remap.try_emplace(l, static_cast<int>(remap.size())).first;
        l = it->second;
    }
    return static_cast<int>(remap.size());
}

double crp_log_prior(const std::vector<int>& labels, int K, double crp_alpha) {
    if (!(crp_alpha > 0.0)) throw DomainError("CRP concentration must be positive");
    std::vector<long> sizes(static_cast<std::size_t>(K), 0);
    for (int l : labels) {
        if (l < 0 || l >= K) throw DomainError("block label out of range");
        ++sizes[static_cast<std::size_t>(l)];
    }
    const double n = static_cast<double>(labels.size());
    double v = std::lgamma(crp_alpha) - std::lgamma(crp_alpha + n);
    for (long s : sizes) {
        if (s == 0) throw DomainError("CRP labels must use every block");
        v += std::log(crp_alpha) + std::lgamma(static_cast<double>(s));
    }
    return v;
}

namespace {

struct CrpStats {
    Degrees deg;
    std::map<long, long> degree_hist;
    std::vector<long> k, n_out, n_in, tile;
    double log_factorials = 0.0;
};

CrpStats crp_stats(const CountGraph& graph, const DcsbmState& state) {
    if (static_cast<int>(state.labels.size()) != graph.n_vertices()) throw DomainError("label vector has wrong length");
    const auto K = static_cast<std::size_t>(state.K);
    CrpStats st{degrees(graph), {}, std::vector<long>(K, 0), std::vector<long>(K, 0), std::vector<long>(K, 0),
                std::vector<long>(K * K, 0)};
    st.degree_hist = degree_histogram(st.deg);
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        const auto l = state.labels[i];
        if (l < 0 || l >= state.K) throw DomainError("block label out of range");
        const auto b = static_cast<std::size_t>(l);
        ++st.k[b];
        st.n_out[b] += st.deg.out[i];
        st.n_in[b] += st.deg.in[i];
    }
    for (const auto& e : graph.dyads()) {
        st.tile[static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.i)]) * K +
                static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.j)])] += e.count;
        st.log_factorials += std::lgamma(static_cast<double>(e.count) + 1.0);
    }
    return st;
}

double joint_from_stats(const CrpStats& st, const DcsbmState& state) {
    const auto K = static_cast<std::size_t>(state.K);
    double v = crp_log_prior(state.labels, state.K, state.crp_alpha) - st.log_factorials;
    for (std::size_t l = 0; l < K; ++l)
        for (std::size_t m = 0; m < K; ++m)
            v += tile_term(st.tile[l * K + m], st.k[l], st.k[m], state.lambda_a, state.lambda_b);
    if (state.degree_corrected) {
        if (!(state.gamma > 0.0)) throw DomainError("gamma must be positive");
        for (std::size_t l = 0; l < K; ++l) v += block_dc_term(st.k[l], st.n_out[l], st.n_in[l], state.gamma);
        v += vertex_terms(st.degree_hist, state.gamma);
    }
    if (std::isnan(v)) throw NumericError("NaN in baseline joint");
    return v;
}

}  // namespace

double dcsbm_log_joint(const CountGraph& graph, const DcsbmState& state) {
    return joint_from_stats(crp_stats(graph, state), state);
}

double dcsbm_log_joint(const EdgeCountMatrix& A, const DcsbmState& state) {
    return dcsbm_log_joint(CountGraph(A), state);
}

std::vector<double> dcsbm_conditional(const CountGraph& graph, const DcsbmState& state, int vertex) {
    DcsbmState copy = state;
    CrpWorkspace ws(graph, copy);
    return normalize_log(ws.detach_and_score(vertex));
}

void dcsbm_gibbs_sweep(const CountGraph& graph, DcsbmState& state, Rng& rng) {
    CrpWorkspace ws(graph, state);
    for (int v = 0; v < graph.n_vertices(); ++v) {
        const std::vector<double> p = normalize_log(ws.detach_and_score(v));
        ws.attach(v, std::discrete_distribution<int>(p.begin(), p.end())(rng));
    }
}

BaselineChain dcsbm_gibbs(const EdgeCountMatrix& A, const BaselineConfig& config, Rng& rng) {
    if (config.initial_K < 1) throw DomainError("initial block count must be at least 1");
    A.validate(true);
    CountGraph graph(A);
    const int n = graph.n_vertices();

    DcsbmState state;
    state.degree_corrected = config.degree_corrected;
    state.labels.resize(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> pick(0, config.initial_K - 1);
    for (auto& l : state.labels) l = pick(rng);
    state.K = canonicalize_labels(state.labels);

    // Prediction targets, as in the CRMSBM chain.
    std::map<Dyad, int> dyad_index;
    for (std::size_t e = 0; e < graph.dyads().size(); ++e)
        if (graph.dyads()[e].held_out) dyad_index[{graph.dyads()[e].i, graph.dyads()[e].j}] = static_cast<int>(e);
    struct Target {
        int i, j;
        std::vector<int> dyads;
    };
    std::vector<Target> targets;
    for (const auto& [d, e] : dyad_index) {
        if (A.symmetric() && d.first > d.second) continue;
        Target t{d.first, d.second, {e}};
        if (A.symmetric() && d.first != d.second) {
            const auto it = dyad_index.find({d.second, d.first});
            if (it != dyad_index.end()) t.dyads.push_back(it->second);
        }
        targets.push_back(std::move(t));
    }
    std::vector<double> score_sum(targets.size(), 0.0);
    long score_draws = 0;
    const bool impute = !dyad_index.empty() || graph.binary_mode();
    const long burn_in = config.burn_in < 0 ? config.iterations / 2 : config.burn_in;

    BaselineChain chain;
    std::normal_distribution<double> step(0.0, config.step_size);
    for (long it = 0; it < config.iterations; ++it) {
        // Hyperparameters: log gamma (degree-corrected only), log alpha, log lambda_a, log lambda_b.
        std::vector<double*> coords;
        if (state.degree_corrected) coords.push_back(&state.gamma);
        coords.push_back(&state.crp_alpha);
        coords.push_back(&state.lambda_a);
        coords.push_back(&state.lambda_b);
        const CrpStats stats = crp_stats(graph, state);
        auto target = [&]() {
            double v = joint_from_stats(stats, state);
            for (double* c : coords) v += log_gamma21(*c) + std::log(*c);
            return v;
        };
        double current = target();
        long proposals = 0, accepted = 0;
        for (int s = 0; s < config.mh_steps; ++s)
            for (double* c : coords) {
                const double old = *c;
                *c = old * std::exp(step(rng));
                const double proposed = std::isfinite(*c) && *c > 0.0 ? target() : -INFINITY;
                ++proposals;
                const double log_ratio = proposed - current;
                if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
                    current = proposed;
                    ++accepted;
                } else {
                    *c = old;
                }
            }

        dcsbm_gibbs_sweep(graph, state, rng);

        if (impute) {
            const auto K = static_cast<std::size_t>(state.K);
            const Degrees d = degrees(graph);
            std::vector<long> k(K, 0), tile(K * K, 0);
            for (int l : state.labels) ++k[static_cast<std::size_t>(l)];
            for (const auto& e : graph.dyads())
                tile[static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.i)]) * K +
                     static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.j)])] += e.count;
            // Per-vertex rate factors k_l theta_i (1 without degree correction).
            std::vector<double> f_out(static_cast<std::size_t>(n), 1.0), f_in(static_cast<std::size_t>(n), 1.0);
            if (state.degree_corrected)
                for (std::size_t l = 0; l < K; ++l) {
                    std::vector<double> a_out, a_in;
                    std::vector<std::size_t> members;
                    for (std::size_t v = 0; v < static_cast<std::size_t>(n); ++v)
                        if (static_cast<std::size_t>(state.labels[v]) == l) {
                            members.push_back(v);
                            a_out.push_back(state.gamma + static_cast<double>(d.out[v]));
                            a_in.push_back(state.gamma + static_cast<double>(d.in[v]));
                        }
                    const auto th_out = sample_dirichlet(a_out, rng);
                    const auto th_in = sample_dirichlet(a_in, rng);
                    for (std::size_t q = 0; q < members.size(); ++q) {
                        f_out[members[q]] = static_cast<double>(k[l]) * th_out[q];
                        f_in[members[q]] = static_cast<double>(k[l]) * th_in[q];
                    }
                }
            std::vector<double> eta(K * K);
            for (std::size_t l = 0; l < K; ++l)
                for (std::size_t m = 0; m < K; ++m)
                    eta[l * K + m] = sample_gamma(state.lambda_a + static_cast<double>(tile[l * K + m]),
                                                  state.lambda_b + static_cast<double>(k[l] * k[m]), rng);
            auto rate = [&](const CountGraph::Dyad& e) {
                return eta[static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.i)]) * K +
                           static_cast<std::size_t>(state.labels[static_cast<std::size_t>(e.j)])] *
                       f_out[static_cast<std::size_t>(e.i)] * f_in[static_cast<std::size_t>(e.j)];
            };
            if (it >= burn_in && !targets.empty()) {
                for (std::size_t q = 0; q < targets.size(); ++q) {
                    double r = 0.0;
                    for (int e : targets[q].dyads) r += rate(graph.dyads()[static_cast<std::size_t>(e)]);
                    score_sum[q] += -std::expm1(-r);
                }
                ++score_draws;
            }
            for (auto& e : graph.dyads())
                e.count = update_edge_count(e.count, e.held_out, graph.binary_mode(), rate(e), rng,
                                            config.clip_held_out);
        }

        BaselineTraceRow row;
        row.iter = it + 1;
        row.logp = dcsbm_log_joint(graph, state);
        row.K = state.K;
        row.gamma = state.gamma;
        row.crp_alpha = state.crp_alpha;
        row.lambda_a = state.lambda_a;
        row.lambda_b = state.lambda_b;
        row.accept_rate = proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
        chain.trace.push_back(row);
        if (config.label_stride > 0 && (it + 1) % config.label_stride == 0)
            chain.label_snapshots.emplace_back(it + 1, state.labels);
        if (config.progress) config.progress(it + 1);
    }
    for (std::size_t q = 0; q < targets.size(); ++q)
        chain.predictions.push_back(
            {targets[q].i, targets[q].j, score_draws > 0 ? score_sum[q] / static_cast<double>(score_draws) : 0.0});
    chain.final_state = state;
    return chain;
}

void write_baseline_trace_csv(std::ostream& out, const std::vector<BaselineTraceRow>& trace) {
    out << "iter,logp,K,gamma,crp_alpha,lambda_a,lambda_b,accept_rate\n";
    out.precision(12);
    for (const auto& r : trace)
        out << r.iter << ',' << r.logp << ',' << r.K << ',' << r.gamma << ',' << r.crp_alpha << ',' << r.lambda_a
            << ',' << r.lambda_b << ',' << r.accept_rate << '\n';
}

}  // namespace crmsbm
