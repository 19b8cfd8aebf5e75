#include "crmsbm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "crmsbm/error.hpp"

namespace crmsbm {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mid-ranks (1-based) summed over positives.
    double rank_sum = 0.0;
    double positives = 0.0;
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo;
        while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) ++hi;
        const double mid = 0.5 * static_cast<double>(lo + 1 + hi);
        for (std::size_t k = lo; k < hi; ++k)
            if (labels[order[k]] != 0) {
                rank_sum += mid;
                positives += 1.0;
            }
        lo = hi;
    }
    const double negatives = static_cast<double>(scores.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) throw DomainError("AUC needs both positive and negative labels");
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

std::vector<double> autocorrelation(std::span<const double> series, int max_lag) {
    if (max_lag < 0 || series.size() <= static_cast<std::size_t>(max_lag))
        throw DomainError("series must be longer than the maximum lag");
    const double n = static_cast<double>(series.size());
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    std::vector<double> centered(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) centered[i] = series[i] - mean;
    double c0 = 0.0;
    for (double v : centered) c0 += v * v;
    if (!(c0 > 0.0)) throw DomainError("autocorrelation of a constant series");
    std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < centered.size(); ++i)
            c += centered[i] * centered[i + static_cast<std::size_t>(lag)];
        acf[static_cast<std::size_t>(lag)] = c / c0;
    }
    return acf;
}

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DomainError("labelings differ in length");
    if (a.empty()) throw DomainError("adjusted Rand index of empty labelings");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [k, c] : joint) index += pairs(c);
    for (const auto& [k, c] : rows) sum_a += pairs(c);
    for (const auto& [k, c] : cols) sum_b += pairs(c);
    const double total = pairs(static_cast<double>(a.size()));
    const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    // Both labelings trivial (all singletons or one cluster each, identically).
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace crmsbm
