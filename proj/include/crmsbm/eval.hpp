#pragma once

#include <span>
#include <vector>

namespace crmsbm {

/// Probability that a random positive outscores a random negative, ties
/// counted 1/2 (Mann-Whitney). Throws DomainError unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Normalized autocorrelation at lags 0..max_lag (biased autocovariance
/// divided by the lag-0 value). Throws DomainError for a constant series or
/// one not longer than max_lag.
std::vector<double> autocorrelation(std::span<const double> series, int max_lag);

/// Adjusted Rand index of two labelings of the same items.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

}  // namespace crmsbm
