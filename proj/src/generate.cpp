#include "crmsbm/generate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "crmsbm/error.hpp"

namespace crmsbm {

double AtomSet::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

long GeneratedNetwork::num_edges() const {
    long total = 0;
    for (const auto& e : edges) total += e.count;
    return total;
}

double expected_atom_count(const GgpParams& p, double truncation) {
    if (!(truncation > 0.0)) throw DomainError("truncation must be positive");
    const double s = p.sigma();
    double tail;  // int_eps^inf w^(-1-s) exp(-tau w) dw
    if (p.tau() == 0.0) {
        tail = std::pow(truncation, -s) / s;
    } else {
        // tau^s Gamma(-s, tau eps), via Gamma(1-s, x) = -s Gamma(-s, x) + x^-s e^-x
        const double x = p.tau() * truncation;
        const double upper = boost::math::tgamma(1.0 - s, x);
        tail = std::pow(p.tau(), s) * (std::pow(x, -s) * std::exp(-x) - upper) / s;
    }
    return p.alpha() * tail / std::tgamma(1.0 - s);
}

double expected_remainder_mass(const GgpParams& p, double truncation) {
    if (!(truncation > 0.0)) throw DomainError("truncation must be positive");
    const double s = p.sigma();
    double head;  // int_0^eps w^(-s) exp(-tau w) dw
    if (p.tau() == 0.0)
        head = std::pow(truncation, 1.0 - s) / (1.0 - s);
    else
        head = std::pow(p.tau(), s - 1.0) * boost::math::tgamma_lower(1.0 - s, p.tau() * truncation);
    return p.alpha() * head / std::tgamma(1.0 - s);
}

double default_truncation(const GgpParams& p) {
    const double reference = p.tau() > 0.0 ? p.mean_total_mass() : p.scale();
    return 1e-6 * reference;
}

AtomSet sample_atoms(const GgpParams& p, double truncation, Rng& rng, std::size_t max_atoms) {
    const double expected = expected_atom_count(p, truncation);
    if (expected > static_cast<double>(max_atoms)) {
        std::ostringstream msg;
        msg << "expected atom count " << expected << " exceeds cap " << max_atoms;
        throw ResourceError(msg.str());
    }
    AtomSet atoms;
    atoms.truncation = truncation;
    atoms.remainder_mass = expected_remainder_mass(p, truncation);
    const auto n = static_cast<std::size_t>(sample_poisson(expected, rng));
    atoms.weights.reserve(n);
    atoms.locations.reserve(n);
    atoms.traits.reserve(n);

    const double s = p.sigma();
    const double tau = p.tau();
    const bool exponential_proposal = tau * truncation > 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w;
        while (true) {
            if (exponential_proposal) {
                // eps + Exp(tau), thinned by (w/eps)^(-1-s)
                w = truncation + std::exponential_distribution<double>(tau)(rng);
                if (uniform01(rng) < std::pow(w / truncation, -1.0 - s)) break;
            } else {
                // Pareto(eps, s), thinned by exp(-tau (w - eps))
                double u = uniform01(rng);
                while (u == 0.0) u = uniform01(rng);
                w = truncation * std::pow(u, -1.0 / s);
                if (tau == 0.0 || uniform01(rng) < std::exp(-tau * (w - truncation))) break;
            }
        }
        atoms.weights.push_back(w);
        atoms.locations.push_back(p.alpha() * uniform01(rng));
        atoms.traits.push_back(uniform01(rng));
    }
    return atoms;
}

std::vector<double> sample_block_proportions(int K, double beta0, Rng& rng) {
    if (K < 1) throw DomainError("K must be at least 1");
    if (!(beta0 > 0.0)) throw DomainError("beta0 must be positive");
    if (K == 1) return {1.0};
    const std::vector<double> conc(static_cast<std::size_t>(K), beta0 / K);
    return sample_dirichlet(conc, rng);
}

GeneratedNetwork sample_network(int K, const GgpParams& p, double beta0, double lambda_a, double lambda_b, Rng& rng,
                                const NetworkOptions& opts) {
    if (K < 1) throw DomainError("K must be at least 1");
    if (!(lambda_a > 0.0) || !(lambda_b > 0.0)) throw DomainError("lambda_a and lambda_b must be positive");
    const double truncation = opts.truncation > 0.0 ? opts.truncation : default_truncation(p);
    const auto Ku = static_cast<std::size_t>(K);

    GeneratedNetwork net;
    net.K = K;
    net.truncation = truncation;
    net.block_proportions = sample_block_proportions(K, beta0, rng);
    AtomSet atoms = sample_atoms(p, truncation, rng, opts.max_atoms);
    net.remainder_mass = atoms.remainder_mass;

    // z_i = l iff u_i falls in the l-th interval of the beta partition of [0,1].
    std::vector<double> cumulative(Ku);
    std::partial_sum(net.block_proportions.begin(), net.block_proportions.end(), cumulative.begin());
    std::vector<int> atom_block(atoms.size());
    std::vector<std::vector<std::size_t>> members(Ku);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), atoms.traits[i]);
        const int b = static_cast<int>(std::min<std::size_t>(it - cumulative.begin(), Ku - 1));
        atom_block[i] = b;
        members[static_cast<std::size_t>(b)].push_back(i);
    }

    net.block_masses.assign(Ku, 0.0);
    for (std::size_t b = 0; b < Ku; ++b) {
        double mass = net.block_proportions[b] * atoms.remainder_mass;
        for (auto i : members[b]) mass += atoms.weights[i];
        net.block_masses[b] = mass;
    }

    net.interaction.assign(Ku * Ku, 0.0);
    for (auto& eta : net.interaction) eta = opts.eta_override ? *opts.eta_override : sample_gamma(lambda_a, lambda_b, rng);

    net.tile_edges.assign(Ku * Ku, 0);
    double expected_edges = 0.0;
    for (std::size_t l = 0; l < Ku; ++l)
        for (std::size_t m = 0; m < Ku; ++m)
            expected_edges += net.interaction[l * Ku + m] * net.block_masses[l] * net.block_masses[m];
    if (expected_edges > static_cast<double>(opts.max_edges)) {
        std::ostringstream msg;
        msg << "expected edge count " << expected_edges << " exceeds cap " << opts.max_edges;
        throw ResourceError(msg.str());
    }
    for (std::size_t l = 0; l < Ku; ++l)
        for (std::size_t m = 0; m < Ku; ++m)
            net.tile_edges[l * Ku + m] =
                sample_poisson(net.interaction[l * Ku + m] * net.block_masses[l] * net.block_masses[m], rng);

    // Per-block categorical over member atoms; the last outcome is the
    // sub-threshold remainder, which yields a fresh vertex on every hit.
    std::vector<std::discrete_distribution<std::size_t>> pick(Ku);
    for (std::size_t b = 0; b < Ku; ++b) {
        std::vector<double> w;
        w.reserve(members[b].size() + 1);
        for (auto i : members[b]) w.push_back(atoms.weights[i]);
        w.push_back(net.block_proportions[b] * atoms.remainder_mass);
        pick[b] = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }

    constexpr long kUnassigned = -1;
    std::vector<long> atom_vertex(atoms.size(), kUnassigned);
    struct Endpoint {
        bool dust;
        std::size_t id;  // atom index, or dust serial
        int block;
    };
    std::vector<std::pair<Endpoint, Endpoint>> raw_edges;
    std::size_t dust_serial = 0;
    auto draw = [&](std::size_t b) {
        const std::size_t k = pick[b](rng);
        if (k == members[b].size()) return Endpoint{true, dust_serial++, static_cast<int>(b)};
        return Endpoint{false, members[b][k], static_cast<int>(b)};
    };
    for (std::size_t l = 0; l < Ku; ++l)
        for (std::size_t m = 0; m < Ku; ++m)
            for (long e = 0; e < net.tile_edges[l * Ku + m]; ++e) {
                const Endpoint src = draw(l);
                const Endpoint dst = draw(m);
                raw_edges.emplace_back(src, dst);
            }

    // Vertex ids: selected atoms in generation order, then remainder vertices.
    for (const auto& [a, b] : raw_edges)
        for (const Endpoint& ep : {a, b})
            if (!ep.dust) atom_vertex[ep.id] = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atom_vertex[i] == kUnassigned) {
            if (opts.keep_unselected) {
                net.unselected.weights.push_back(atoms.weights[i]);
                net.unselected.locations.push_back(atoms.locations[i]);
                net.unselected.traits.push_back(atoms.traits[i]);
                net.unselected_blocks.push_back(atom_block[i]);
            }
            continue;
        }
        atom_vertex[i] = static_cast<long>(net.vertex_blocks.size());
        net.vertex_blocks.push_back(atom_block[i]);
        net.vertex_weights.push_back(atoms.weights[i]);
    }
    net.unselected.truncation = truncation;
    net.unselected.remainder_mass = atoms.remainder_mass;
    const long first_dust = static_cast<long>(net.vertex_blocks.size());
    std::vector<int> dust_block(dust_serial);
    for (const auto& [a, b] : raw_edges)
        for (const Endpoint& ep : {a, b})
            if (ep.dust) dust_block[ep.id] = ep.block;
    for (int b : dust_block) {
        net.vertex_blocks.push_back(b);
        net.vertex_weights.push_back(0.0);
    }

    auto vertex_of = [&](const Endpoint& ep) {
        return static_cast<int>(ep.dust ? first_dust + static_cast<long>(ep.id) : atom_vertex[ep.id]);
    };
    std::map<std::pair<int, int>, long> counts;
    net.vertex_endpoints.assign(net.vertex_blocks.size(), 0);
    for (const auto& [a, b] : raw_edges) {
        const int i = vertex_of(a), j = vertex_of(b);
        ++counts[{i, j}];
        ++net.vertex_endpoints[static_cast<std::size_t>(i)];
        ++net.vertex_endpoints[static_cast<std::size_t>(j)];
    }
    net.edges.reserve(counts.size());
    for (const auto& [key, c] : counts) net.edges.push_back({key.first, key.second, c});
    return net;
}

}  // namespace crmsbm
