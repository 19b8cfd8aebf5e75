#pragma once

// File formats shared by the command-line tools.

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "crmsbm/data.hpp"
#include "crmsbm/generate.hpp"
#include "crmsbm/sampler.hpp"

namespace crmsbm {

/// `source target [count]` lines with 1-based vertex indices.
void write_network_edge_list(std::ostream& out, const GeneratedNetwork& net);

/// Ground truth of a generated network: 1-based labels, weights, endpoint
/// counts, block proportions, interaction matrix, block masses, tile counts.
nlohmann::json network_sidecar(const GeneratedNetwork& net);

struct LinkMetrics {
    double auc = 0.0;
    long pairs = 0;
    long positives = 0;
    /// Held-out dyads absent from the prediction file.
    long missing = 0;
};

/// Joins predictions with the held-out truth on (i, j).
LinkMetrics score_predictions(const std::vector<Prediction>& predictions, const std::vector<HeldOutDyad>& truth);
nlohmann::json to_json(const LinkMetrics& m);

}  // namespace crmsbm
