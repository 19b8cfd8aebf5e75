#include "crmsbm/validate.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <thread>

#include "crmsbm/error.hpp"
#include "crmsbm/quadrature.hpp"

namespace crmsbm {

namespace {

constexpr int kChunks = 64;
// e^{-(s+t)^2} is below 1e-27 past this point.
constexpr double kMassCutoff = 8.0;

// The T^(2L) e^(-T^2) factor peaks at sqrt(L).
double mass_cutoff(long L) { return kMassCutoff + std::sqrt(static_cast<double>(L)); }

// Runs work(chunk, count, rng) for kChunks chunks with independent seeds.
void run_chunks(long total, int threads, Rng& rng, const std::function<void(int, long, Rng&)>& work) {
    const std::uint64_t base = rng();
    auto run = [&](int worker, int stride) {
        for (int c = worker; c < kChunks; c += stride) {
            const long count = total / kChunks + (c < total % kChunks ? 1 : 0);
            std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                              static_cast<std::uint32_t>(c)};
            Rng local(seq);
            work(c, count, local);
        }
    };
    threads = std::clamp(threads, 1, kChunks);
    if (threads == 1) {
        run(0, 1);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
    for (auto& t : pool) t.join();
}

void partitions(long remaining, long max_part, Signature& prefix, std::vector<Signature>& out) {
    if (remaining == 0) {
        out.push_back(prefix);
        return;
    }
    for (long part = std::min(remaining, max_part); part >= 1; --part) {
        prefix.push_back(part);
        partitions(remaining - part, part, prefix, out);
        prefix.pop_back();
    }
}

QuadratureOptions tight() {
    QuadratureOptions q;
    q.abs_tol = 1e-13;
    q.rel_tol = 1e-10;
    return q;
}

void require(const QuadratureResult& r, const char* what) {
    if (!r.converged) throw NumericError(std::string("quadrature did not converge: ") + what);
}

}  // namespace

Signature signature_of(std::vector<long> endpoint_counts) {
    std::erase(endpoint_counts, 0);
    std::sort(endpoint_counts.begin(), endpoint_counts.end(), std::greater<>());
    return endpoint_counts;
}

Signature signature_of(const GeneratedNetwork& net) {
    if (net.K != 1) throw DomainError("signatures are defined for single-block networks");
    return signature_of(net.vertex_endpoints);
}

std::vector<Signature> enumerate_signatures(int max_edges) {
    if (max_edges < 0) throw DomainError("max_edges must be nonnegative");
    std::vector<Signature> out;
    Signature prefix;
    for (long L = 0; L <= max_edges; ++L) partitions(2 * L, 2 * L, prefix, out);
    return out;
}

double log_multiplicity_factor(const Signature& sig) {
    long n = 0;
    std::map<long, long> multiplicity;
    for (long part : sig) {
        if (part < 1) throw DomainError("signature parts must be positive");
        n += part;
        ++multiplicity[part];
    }
    double v = std::lgamma(static_cast<double>(n) + 1.0);
    for (const auto& [part, m] : multiplicity)
        v -= static_cast<double>(m) * std::lgamma(static_cast<double>(part) + 1.0) +
             std::lgamma(static_cast<double>(m) + 1.0);
    return v;
}

double multiplicity_factor(const Signature& sig) { return std::round(std::exp(log_multiplicity_factor(sig))); }

double edge_count_probability(const GgpParams& p, int L) {
    if (L < 0) throw DomainError("edge count must be nonnegative");
    const double log_fact = std::lgamma(L + 1.0);
    auto f = [&](double T) {
        if (T <= 0.0) return 0.0;
        return std::exp(log_total_mass_density(p, T) - T * T + 2.0 * L * std::log(T) - log_fact);
    };
    const double breaks[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    const auto r = integrate(f, 0.0, mass_cutoff(L), tight(), breaks);
    require(r, "edge count probability");
    return r.value;
}

double signature_probability(const GgpParams& p, const Signature& sig) {
    const long k = static_cast<long>(sig.size());
    long n = 0;
    for (long part : sig) n += part;
    if (n % 2 != 0) throw DomainError("signature must have an even number of endpoints");
    if (k == 0) return edge_count_probability(p, 0);
    const long L = n / 2;
    const double sigma = p.sigma(), tau = p.tau();
    const double shape = static_cast<double>(n) - static_cast<double>(k) * sigma;

    double log_coeff = log_multiplicity_factor(sig) + static_cast<double>(k) * std::log(p.alpha()) -
                       std::lgamma(shape) - std::lgamma(static_cast<double>(L) + 1.0);
    for (long part : sig) log_coeff += pochhammer_log(1.0 - sigma, part - 1);

    const double breaks[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    auto inner = [&](double t) {
        auto h = [&](double s) {
            if (s <= 0.0) return 0.0;
            return std::exp((shape - 1.0) * std::log(s) - tau * s - (s + t) * (s + t));
        };
        const auto r = integrate(h, 0.0, mass_cutoff(L), tight(), breaks);
        require(r, "signature probability (inner)");
        return r.value;
    };
    auto outer = [&](double t) {
        if (t <= 0.0) return 0.0;
        const double lg = log_total_mass_density(p, t);
        if (!std::isfinite(lg)) return 0.0;
        return std::exp(lg) * inner(t);
    };
    const auto r = integrate(outer, 0.0, mass_cutoff(L), tight(), breaks);
    require(r, "signature probability (outer)");
    return std::exp(log_coeff) * r.value;
}

SignatureReport validate_signatures(const GgpParams& p, long n_networks, int max_edges, Rng& rng,
                                    const SimulationOptions& opts) {
    if (n_networks < 1) throw DomainError("need at least one network");
    SignatureReport report;
    report.n_networks = n_networks;
    report.max_edges = max_edges;
    const std::vector<Signature> sigs = enumerate_signatures(max_edges);
    std::map<Signature, std::size_t> index;
    for (std::size_t i = 0; i < sigs.size(); ++i) index[sigs[i]] = i;

    std::vector<std::vector<long>> chunk_counts(kChunks, std::vector<long>(sigs.size() + 1, 0));
    NetworkOptions net_opts;
    net_opts.truncation = opts.truncation;
    net_opts.eta_override = 1.0;
    run_chunks(n_networks, opts.threads, rng, [&](int c, long count, Rng& local) {
        auto& counts = chunk_counts[static_cast<std::size_t>(c)];
        for (long i = 0; i < count; ++i) {
            const GeneratedNetwork net = sample_network(1, p, 1.0, 1.0, 1.0, local, net_opts);
            const auto it = index.find(signature_of(net));
            ++counts[it == index.end() ? sigs.size() : it->second];
        }
    });
    std::vector<long> counts(sigs.size() + 1, 0);
    for (const auto& cc : chunk_counts)
        for (std::size_t i = 0; i < cc.size(); ++i) counts[i] += cc[i];

    const double N = static_cast<double>(n_networks);
    auto finish = [&](SignatureRow& row) {
        row.empirical = static_cast<double>(row.count) / N;
        const double var = N * row.analytic * (1.0 - row.analytic);
        row.z = var > 0.0 ? (static_cast<double>(row.count) - N * row.analytic) / std::sqrt(var)
                          : (row.count == 0 ? 0.0 : std::numeric_limits<double>::infinity());
        report.total_variation += 0.5 * std::abs(row.empirical - row.analytic);
        report.max_abs_z = std::max(report.max_abs_z, std::abs(row.z));
    };

    std::vector<double> per_L(static_cast<std::size_t>(max_edges) + 1, 0.0);
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        SignatureRow row;
        row.signature = sigs[i];
        row.analytic = signature_probability(p, sigs[i]);
        row.count = counts[i];
        long n = 0;
        for (long part : sigs[i]) n += part;
        per_L[static_cast<std::size_t>(n / 2)] += row.analytic;
        finish(row);
        report.rows.push_back(std::move(row));
    }
    double kept = 0.0;
    for (int L = 0; L <= max_edges; ++L) {
        const double pl = edge_count_probability(p, L);
        kept += pl;
        report.max_edge_count_mismatch =
            std::max(report.max_edge_count_mismatch, std::abs(per_L[static_cast<std::size_t>(L)] - pl));
    }
    report.discard.analytic = 1.0 - kept;
    report.discard.count = counts.back();
    finish(report.discard);
    return report;
}

void write_signature_csv(std::ostream& out, const SignatureReport& report) {
    out << "signature,analytic,empirical,z\n";
    out.precision(10);
    auto line = [&](const std::string& name, const SignatureRow& row) {
        out << name << ',' << row.analytic << ',' << row.empirical << ',' << row.z << '\n';
    };
    for (const auto& row : report.rows) {
        std::string name = "[";
        for (std::size_t i = 0; i < row.signature.size(); ++i)
            name += (i ? " " : "") + std::to_string(row.signature[i]);
        line(name + "]", row);
    }
    line("discard", report.discard);
}

double validate_total_mass(const GgpParams& p, long n_samples, Rng& rng, const SimulationOptions& opts,
                           std::optional<GgpParams> oracle) {
    if (n_samples < 1) throw DomainError("need at least one sample");
    const double truncation = opts.truncation > 0.0 ? opts.truncation : default_truncation(p);
    std::vector<std::vector<double>> chunks(kChunks);
    run_chunks(n_samples, opts.threads, rng, [&](int c, long count, Rng& local) {
        auto& out = chunks[static_cast<std::size_t>(c)];
        for (long i = 0; i < count; ++i) {
            const AtomSet atoms = sample_atoms(p, truncation, local);
            out.push_back(atoms.total_weight() + atoms.remainder_mass);
        }
    });
    std::vector<double> sample;
    for (const auto& c : chunks) sample.insert(sample.end(), c.begin(), c.end());
    const auto table = total_mass_distribution(oracle.value_or(p));
    return ks_distance(std::move(sample), [&](double t) { return table->cdf(t); });
}

}  // namespace crmsbm
