#include "crmsbm/output.hpp"

#include <map>
#include <ostream>

#include "crmsbm/error.hpp"
#include "crmsbm/eval.hpp"

namespace crmsbm {

void write_network_edge_list(std::ostream& out, const GeneratedNetwork& net) {
    for (const auto& e : net.edges) {
        out << e.source + 1 << ' ' << e.target + 1;
        if (e.count != 1) out << ' ' << e.count;
        out << '\n';
    }
}

nlohmann::json network_sidecar(const GeneratedNetwork& net) {
    nlohmann::json j;
    j["K"] = net.K;
    std::vector<int> labels;
    for (int b : net.vertex_blocks) labels.push_back(b + 1);
    j["labels"] = labels;
    j["weights"] = net.vertex_weights;
    j["endpoints"] = net.vertex_endpoints;
    j["block_proportions"] = net.block_proportions;
    const auto K = static_cast<std::size_t>(net.K);
    nlohmann::json eta = nlohmann::json::array(), tiles = nlohmann::json::array();
    for (std::size_t l = 0; l < K; ++l) {
        eta.push_back(std::vector<double>(net.interaction.begin() + static_cast<std::ptrdiff_t>(l * K),
                                          net.interaction.begin() + static_cast<std::ptrdiff_t>((l + 1) * K)));
        tiles.push_back(std::vector<long>(net.tile_edges.begin() + static_cast<std::ptrdiff_t>(l * K),
                                          net.tile_edges.begin() + static_cast<std::ptrdiff_t>((l + 1) * K)));
    }
    j["interaction"] = eta;
    j["tile_edges"] = tiles;
    j["block_masses"] = net.block_masses;
    j["truncation"] = net.truncation;
    j["remainder_mass"] = net.remainder_mass;
    j["vertices"] = net.num_vertices();
    j["edges"] = net.num_edges();
    return j;
}

LinkMetrics score_predictions(const std::vector<Prediction>& predictions, const std::vector<HeldOutDyad>& truth) {
    std::map<Dyad, double> score;
    for (const auto& p : predictions) score[{p.i, p.j}] = p.score;
    std::vector<double> s;
    std::vector<int> y;
    LinkMetrics m;
    for (const auto& d : truth) {
        const auto it = score.find({d.i, d.j});
        if (it == score.end()) {
            ++m.missing;
            continue;
        }
        s.push_back(it->second);
        y.push_back(d.label);
        m.positives += d.label != 0;
    }
    m.pairs = static_cast<long>(s.size());
    m.auc = auc(s, y);
    return m;
}

nlohmann::json to_json(const LinkMetrics& m) {
    return {{"auc", m.auc}, {"pairs", m.pairs}, {"positives", m.positives}, {"missing", m.missing}};
}

}  // namespace crmsbm
