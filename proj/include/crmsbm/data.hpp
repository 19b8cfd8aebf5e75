#pragma once

// Edge-list I/O, preprocessing and held-out dyad selection.
//
// Vertex indices are 0-based in memory and 1-based in every file format.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crmsbm/random.hpp"

namespace crmsbm {

struct RawEdge {
    std::string source;
    std::string target;
    long count = 1;
    bool operator==(const RawEdge&) const = default;
};

struct RawEdgeList {
    std::vector<RawEdge> records;
    /// Labels in first-appearance order; labels[i] has file index i+1.
    std::vector<std::string> labels;

    /// 0-based index of a label, -1 if absent.
    int index_of(const std::string& label) const;
    void add(std::string source, std::string target, long count = 1);

private:
    std::unordered_map<std::string, int> index_;
};

/// Whitespace-separated `src dst [count]` lines; blank and `#` lines skipped.
RawEdgeList parse_edge_list(std::istream& in);
RawEdgeList load_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const RawEdgeList& edges);
void save_edge_list(const std::string& path, const RawEdgeList& edges);

using Dyad = std::pair<int, int>;

/// Sparse directed multigraph counts with a held-out dyad mask.
class EdgeCountMatrix {
public:
    explicit EdgeCountMatrix(int n_vertices = 0);

    int n_vertices() const noexcept { return n_; }
    /// Sets A_ij; a zero count erases the entry.
    void set(int i, int j, long count);
    void add(int i, int j, long count);
    long count(int i, int j) const;
    const std::map<Dyad, long>& entries() const noexcept { return counts_; }
    long total_count() const;

    /// Marks (i, j) as unobserved and drops any stored count for it.
    void hold_out(int i, int j);
    void release(int i, int j);
    bool is_held_out(int i, int j) const { return holdout_.contains({i, j}); }
    const std::set<Dyad>& holdout() const noexcept { return holdout_; }

    bool binary_mode() const noexcept { return binary_; }
    void set_binary_mode(bool on) noexcept { binary_ = on; }
    /// Counts are symmetric and holdout pairs come in both orientations.
    bool symmetric() const noexcept { return symmetric_; }
    void set_symmetric(bool on) noexcept { symmetric_ = on; }

    /// Number of distinct observed neighbours-with-count per vertex (a
    /// self-edge counts once).
    std::vector<long> observed_degree() const;

    /// Throws DomainError if any index is out of range, any count is
    /// nonpositive, a held-out pair carries a count, or (when requested) some
    /// vertex has no observed incident edge.
    void validate(bool require_observed_edges = true) const;

    bool operator==(const EdgeCountMatrix&) const = default;

private:
    int n_ = 0;
    std::map<Dyad, long> counts_;
    std::set<Dyad> holdout_;
    bool binary_ = false;
    bool symmetric_ = false;
};

struct PreprocessOptions {
    bool symmetrize = false;
    bool drop_self_edges = false;
    /// Threshold counts at 0 (count >= 1 becomes 1).
    bool binarize = true;
};

struct Dataset {
    EdgeCountMatrix matrix;
    /// Original label of each vertex after reindexing.
    std::vector<std::string> labels;
};

/// Thresholds to binary, optionally symmetrizes (max of the two directions)
/// and drops self-edges, removes vertices without edges and reindexes.
/// Throws DomainError if nothing remains.
Dataset preprocess(const RawEdgeList& raw, const PreprocessOptions& opts = {});
/// Same rules applied to an in-memory matrix; the returned labels are the
/// 1-based indices of the surviving input vertices.
Dataset preprocess(const EdgeCountMatrix& A, const PreprocessOptions& opts = {});

struct HeldOutDyad {
    int i = 0;
    int j = 0;
    int label = 0;
    bool operator==(const HeldOutDyad&) const = default;
};

struct HoldoutOptions {
    /// Include (i, i) in the pool of potential dyads.
    bool include_self_pairs = false;
    /// Cap on repair iterations, as a multiple of the holdout size (plus a constant).
    int max_repair_factor = 50;
};

struct HoldoutSplit {
    EdgeCountMatrix observed;
    /// Held-out dyads with their true presence labels. Symmetric data lists
    /// each unordered pair once with i <= j.
    std::vector<HeldOutDyad> truth;
};

/// Holds out round(fraction * #potential dyads) dyads uniformly at random,
/// then repairs vertices left without an observed edge by re-introducing one
/// of their edges and holding out a random replacement dyad.
HoldoutSplit make_holdout(const EdgeCountMatrix& A, double fraction, Rng& rng, const HoldoutOptions& opts = {});

void write_holdout_manifest(std::ostream& out, const std::vector<HeldOutDyad>& truth);
std::vector<HeldOutDyad> read_holdout_manifest(std::istream& in);

}  // namespace crmsbm
