#include "crmsbm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "crmsbm/error.hpp"

namespace crmsbm {

int RawEdgeList::index_of(const std::string& label) const {
    const auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

void RawEdgeList::add(std::string source, std::string target, long count) {
    for (const std::string* label : {&source, &target})
        if (!index_.contains(*label)) {
            index_.emplace(*label, static_cast<int>(labels.size()));
            labels.push_back(*label);
        }
    records.push_back({std::move(source), std::move(target), count});
}

RawEdgeList parse_edge_list(std::istream& in) {
    RawEdgeList list;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        for (std::string tok; fields >> tok;) tokens.push_back(tok);
        if (tokens.empty() || tokens.front().front() == '#') continue;
        if (tokens.size() < 2 || tokens.size() > 3)
            throw ParseError("expected 'source target [count]', got " + std::to_string(tokens.size()) + " fields",
                             line_no);
        long count = 1;
        if (tokens.size() == 3) {
            const std::string& c = tokens[2];
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), count);
            if (ec != std::errc() || ptr != c.data() + c.size()) throw ParseError("invalid count '" + c + "'", line_no);
            if (count < 1) throw ParseError("count must be at least 1", line_no);
        }
        list.add(tokens[0], tokens[1], count);
    }
    return list;
}

RawEdgeList load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_edge_list(in);
}

void write_edge_list(std::ostream& out, const RawEdgeList& edges) {
    for (const auto& r : edges.records) {
        out << r.source << ' ' << r.target;
        if (r.count != 1) out << ' ' << r.count;
        out << '\n';
    }
}

void save_edge_list(const std::string& path, const RawEdgeList& edges) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_edge_list(out, edges);
}

EdgeCountMatrix::EdgeCountMatrix(int n_vertices) : n_(n_vertices) {
    if (n_vertices < 0) throw DomainError("vertex count must be nonnegative");
}

void EdgeCountMatrix::set(int i, int j, long count) {
    if (count < 0) throw DomainError("edge counts must be nonnegative");
    if (count == 0)
        counts_.erase({i, j});
    else
        counts_[{i, j}] = count;
}

void EdgeCountMatrix::add(int i, int j, long count) { set(i, j, this->count(i, j) + count); }

long EdgeCountMatrix::count(int i, int j) const {
    const auto it = counts_.find({i, j});
    return it == counts_.end() ? 0 : it->second;
}

long EdgeCountMatrix::total_count() const {
    long total = 0;
    for (const auto& [d, c] : counts_) total += c;
    return total;
}

void EdgeCountMatrix::hold_out(int i, int j) {
    counts_.erase({i, j});
    holdout_.insert({i, j});
}

void EdgeCountMatrix::release(int i, int j) { holdout_.erase({i, j}); }

std::vector<long> EdgeCountMatrix::observed_degree() const {
    std::vector<long> deg(static_cast<std::size_t>(n_), 0);
    for (const auto& [d, c] : counts_) {
        ++deg[static_cast<std::size_t>(d.first)];
        if (d.second != d.first) ++deg[static_cast<std::size_t>(d.second)];
    }
    return deg;
}

void EdgeCountMatrix::validate(bool require_observed_edges) const {
    auto in_range = [&](const Dyad& d) { return d.first >= 0 && d.first < n_ && d.second >= 0 && d.second < n_; };
    for (const auto& [d, c] : counts_) {
        if (!in_range(d)) throw DomainError("edge index out of range");
        if (c <= 0) throw DomainError("stored edge counts must be positive");
        if (holdout_.contains(d)) throw DomainError("held-out dyad carries an observed count");
    }
    for (const auto& d : holdout_)
        if (!in_range(d)) throw DomainError("held-out index out of range");
    if (require_observed_edges) {
        const auto deg = observed_degree();
        for (std::size_t v = 0; v < deg.size(); ++v)
            if (deg[v] == 0) throw DomainError("vertex " + std::to_string(v + 1) + " has no observed edge");
    }
}

namespace {

Dataset finish_preprocess(int n, std::map<Dyad, long> counts, std::vector<std::string> labels,
                          const PreprocessOptions& opts) {
    std::map<Dyad, long> cleaned;
    for (const auto& [d, c] : counts) {
        if (opts.drop_self_edges && d.first == d.second) continue;
        const long v = opts.binarize ? std::min<long>(c, 1) : c;
        if (opts.symmetrize) {
            auto& a = cleaned[d];
            auto& b = cleaned[{d.second, d.first}];
            a = std::max(a, v);
            b = std::max(b, v);
        } else {
            cleaned[d] = v;
        }
    }
    std::vector<int> new_index(static_cast<std::size_t>(n), -1);
    for (const auto& [d, c] : cleaned) {
        new_index[static_cast<std::size_t>(d.first)] = 0;
        new_index[static_cast<std::size_t>(d.second)] = 0;
    }
    Dataset out;
    int next = 0;
    for (int v = 0; v < n; ++v)
        if (new_index[static_cast<std::size_t>(v)] == 0) {
            new_index[static_cast<std::size_t>(v)] = next++;
            out.labels.push_back(labels[static_cast<std::size_t>(v)]);
        }
    if (next == 0) throw DomainError("preprocessing left an empty graph");
    out.matrix = EdgeCountMatrix(next);
    for (const auto& [d, c] : cleaned)
        out.matrix.set(new_index[static_cast<std::size_t>(d.first)], new_index[static_cast<std::size_t>(d.second)], c);
    out.matrix.set_binary_mode(opts.binarize);
    out.matrix.set_symmetric(opts.symmetrize);
    return out;
}

}  // namespace

Dataset preprocess(const RawEdgeList& raw, const PreprocessOptions& opts) {
    std::map<Dyad, long> counts;
    for (const auto& r : raw.records) counts[{raw.index_of(r.source), raw.index_of(r.target)}] += r.count;
    return finish_preprocess(static_cast<int>(raw.labels.size()), std::move(counts), raw.labels, opts);
}

Dataset preprocess(const EdgeCountMatrix& A, const PreprocessOptions& opts) {
    std::vector<std::string> labels;
    for (int v = 0; v < A.n_vertices(); ++v) labels.push_back(std::to_string(v + 1));
    PreprocessOptions o = opts;
    o.symmetrize = opts.symmetrize || A.symmetric();
    o.binarize = opts.binarize || A.binary_mode();
    return finish_preprocess(A.n_vertices(), A.entries(), std::move(labels), o);
}

HoldoutSplit make_holdout(const EdgeCountMatrix& A, double fraction, Rng& rng, const HoldoutOptions& opts) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("holdout fraction must lie in [0, 1)");
    A.validate(true);
    const int n = A.n_vertices();
    const bool sym = A.symmetric();
    const auto nn = static_cast<std::uint64_t>(n);

    // Dyads are keyed canonically (i <= j in symmetric mode) as i * n + j.
    auto key = [&](int i, int j) {
        if (sym && i > j) std::swap(i, j);
        return static_cast<std::uint64_t>(i) * nn + static_cast<std::uint64_t>(j);
    };
    auto first = [&](std::uint64_t k) { return static_cast<int>(k / nn); };
    auto second = [&](std::uint64_t k) { return static_cast<int>(k % nn); };

    const double un = static_cast<double>(n);
    const double pool = sym ? un * (un - 1.0) / 2.0 + (opts.include_self_pairs ? un : 0.0)
                            : un * un - (opts.include_self_pairs ? 0.0 : un);
    const auto target = static_cast<std::size_t>(std::llround(fraction * pool));

    std::uniform_int_distribution<int> pick_vertex(0, n - 1);
    auto draw_dyad = [&]() {
        while (true) {
            const int i = pick_vertex(rng), j = pick_vertex(rng);
            if (i == j && !opts.include_self_pairs) continue;
            if (sym && i > j) continue;
            return key(i, j);
        }
    };

    // Observed edges, per-vertex incidence, and degree in canonical units.
    std::vector<std::vector<std::uint64_t>> incident(static_cast<std::size_t>(n));
    std::unordered_set<std::uint64_t> edges;
    for (const auto& [d, c] : A.entries()) {
        const auto k = key(d.first, d.second);
        if (!edges.insert(k).second) continue;
        incident[static_cast<std::size_t>(d.first)].push_back(k);
        if (d.first != d.second) incident[static_cast<std::size_t>(d.second)].push_back(k);
    }
    std::vector<long> degree(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) degree[static_cast<std::size_t>(v)] = static_cast<long>(incident[static_cast<std::size_t>(v)].size());

    std::vector<std::uint64_t> held;
    std::unordered_map<std::uint64_t, std::size_t> held_pos;
    auto adjust = [&](std::uint64_t k, long delta) {
        if (!edges.contains(k)) return;
        degree[static_cast<std::size_t>(first(k))] += delta;
        if (first(k) != second(k)) degree[static_cast<std::size_t>(second(k))] += delta;
    };
    auto hold = [&](std::uint64_t k) {
        held_pos.emplace(k, held.size());
        held.push_back(k);
        adjust(k, -1);
    };
    auto unhold = [&](std::uint64_t k) {
        const std::size_t pos = held_pos.at(k);
        held_pos[held.back()] = pos;
        held[pos] = held.back();
        held.pop_back();
        held_pos.erase(k);
        adjust(k, +1);
    };

    while (held.size() < target) {
        const auto k = draw_dyad();
        if (!held_pos.contains(k)) hold(k);
    }

    const std::size_t max_repairs = static_cast<std::size_t>(opts.max_repair_factor) * target + 1000;
    std::size_t repairs = 0;
    for (bool dirty = true; dirty;) {
        dirty = false;
        for (int v = 0; v < n; ++v) {
            while (degree[static_cast<std::size_t>(v)] == 0) {
                if (++repairs > max_repairs)
                    throw DomainError("holdout fraction too high to keep an observed edge at every vertex");
                std::vector<std::uint64_t> candidates;
                for (auto k : incident[static_cast<std::size_t>(v)])
                    if (held_pos.contains(k)) candidates.push_back(k);
                const auto back = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
                unhold(back);
                if (static_cast<double>(held.size()) + 1.0 >= pool)
                    throw DomainError("holdout fraction too high to keep an observed edge at every vertex");
                while (true) {
                    const auto k = draw_dyad();
                    if (k == back || held_pos.contains(k)) continue;
                    hold(k);
                    break;
                }
                dirty = true;
            }
        }
    }

    HoldoutSplit split;
    split.observed = A;
    std::sort(held.begin(), held.end());
    for (auto k : held) {
        const int i = first(k), j = second(k);
        split.truth.push_back({i, j, edges.contains(k) ? 1 : 0});
        split.observed.hold_out(i, j);
        if (sym && i != j) split.observed.hold_out(j, i);
    }
    split.observed.validate(true);
    return split;
}

void write_holdout_manifest(std::ostream& out, const std::vector<HeldOutDyad>& truth) {
    out << "i,j,true_label\n";
    for (const auto& d : truth) out << d.i + 1 << ',' << d.j + 1 << ',' << d.label << '\n';
}

std::vector<HeldOutDyad> read_holdout_manifest(std::istream& in) {
    std::vector<HeldOutDyad> truth;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.rfind("i,", 0) == 0) continue;
        HeldOutDyad d;
        char c1 = 0, c2 = 0;
        std::istringstream fields(line);
        if (!(fields >> d.i >> c1 >> d.j >> c2 >> d.label) || c1 != ',' || c2 != ',')
            throw ParseError("expected 'i,j,true_label'", line_no);
        --d.i;
        --d.j;
        truth.push_back(d);
    }
    return truth;
}

}  // namespace crmsbm
