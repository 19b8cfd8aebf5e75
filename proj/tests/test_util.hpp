#pragma once

#include <vector>

#include "crmsbm/data.hpp"
#include "crmsbm/model.hpp"
#include "crmsbm/random.hpp"

namespace test_util {

// Small directed binary graph where every vertex has an edge.
inline crmsbm::EdgeCountMatrix small_graph(int n, double density, crmsbm::Rng& rng, bool binary = true) {
    crmsbm::EdgeCountMatrix A(n);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (U(rng) < density) A.set(i, j, binary ? 1 : 1 + static_cast<long>(3 * U(rng)));
    for (int i = 0; i < n; ++i) {
        bool has = false;
        for (int j = 0; j < n; ++j) has = has || A.count(i, j) > 0 || A.count(j, i) > 0;
        if (!has) A.set(i, (i + 1) % n, 1);
    }
    A.set_binary_mode(binary);
    return A;
}

inline crmsbm::MeasureState random_measure(int K, crmsbm::Rng& rng, bool unit_interaction = false) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    crmsbm::MeasureState m;
    m.sigma = 0.1 + 0.8 * U(rng);
    m.tau = 0.2 + 2.0 * U(rng);
    m.lambda_a = 0.5 + U(rng);
    m.lambda_b = 0.5 + U(rng);
    m.unit_interaction = unit_interaction;
    for (int l = 0; l < K; ++l)
        m.blocks.push_back({0.5 + 3.0 * U(rng), 0.2 + 2.0 * U(rng), 0.2 + 2.0 * U(rng), 0.2 + 2.5 * U(rng)});
    return m;
}

}  // namespace test_util
