#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "crmsbm/error.hpp"
#include "crmsbm/generate.hpp"
#include "doctest.h"

using namespace crmsbm;

TEST_CASE("expected atom count and remainder mass agree with quadrature") {
    for (double tau : {0.0, 1.0, 3.0}) {
        const GgpParams p(2.0, 0.5, tau);
        const double eps = 0.01;
        boost::math::quadrature::exp_sinh<double> upper;
        const double count = p.alpha() * upper.integrate([&](double w) { return levy_density(p, w); }, eps,
                                                         std::numeric_limits<double>::infinity());
        CHECK(expected_atom_count(p, eps) == doctest::Approx(count).epsilon(1e-9));
        // w = eps e^{-x} maps (0, eps) to (0, inf).
        const double rem = p.alpha() * upper.integrate(
                                           [&](double x) {
                                               const double w = eps * std::exp(-x);
                                               return w > 0.0 ? std::exp(2.0 * std::log(w) + log_levy_density(p, w)) : 0.0;
                                           },
                                           0.0, std::numeric_limits<double>::infinity());
        CHECK(expected_remainder_mass(p, eps) == doctest::Approx(rem).epsilon(1e-9));
    }
}

TEST_CASE("atom sets") {
    Rng rng(1);
    const GgpParams p(2.0, 0.5, 1.0);
    const double eps = 0.01;
    const double expected = expected_atom_count(p, eps);
    const int reps = 10000;
    double sum = 0.0, sum_mass = 0.0;
    for (int r = 0; r < reps; ++r) {
        const AtomSet a = sample_atoms(p, eps, rng);
        sum += static_cast<double>(a.size());
        sum_mass += a.total_weight() + a.remainder_mass;
        if (r < 50)
            for (std::size_t i = 0; i < a.size(); ++i) {
                CHECK(a.weights[i] >= eps);
                CHECK(a.locations[i] >= 0.0);
                CHECK(a.locations[i] < p.alpha());
                CHECK(a.traits[i] >= 0.0);
                CHECK(a.traits[i] <= 1.0);
            }
    }
    // The count is Poisson, so its standard error is sqrt(mean / reps).
    CHECK(std::abs(sum / reps - expected) < 4.0 * std::sqrt(expected / reps));
    // E[T] = alpha tau^(sigma - 1) = 2, Var T = alpha (1 - sigma) tau^(sigma - 2) = 1.
    CHECK(std::abs(sum_mass / reps - 2.0) < 4.0 * std::sqrt(1.0 / reps));

    SUBCASE("tilted proposal branch") {
        const GgpParams q(1.0, 0.3, 50.0);
        const double e = 0.05;
        double n = 0.0;
        for (int r = 0; r < 20000; ++r) n += static_cast<double>(sample_atoms(q, e, rng).size());
        const double m = expected_atom_count(q, e);
        CHECK(std::abs(n / 20000 - m) < 4.0 * std::sqrt(m / 20000));
    }
    SUBCASE("vanishing intensity") {
        int empty = 0;
        for (int r = 0; r < 100; ++r) empty += sample_atoms(GgpParams(0.001, 0.5, 1.0), 0.1, rng).size() == 0;
        CHECK(empty >= 95);
    }
    SUBCASE("atom cap") {
        CHECK_THROWS_AS(sample_atoms(GgpParams(2.0, 0.5, 1.0), 1e-12, rng, 1000), ResourceError);
    }
}

TEST_CASE("block proportions") {
    Rng rng(3);
    CHECK(sample_block_proportions(1, 2.0, rng) == std::vector<double>{1.0});
    double mean = 0.0;
    for (int r = 0; r < 10000; ++r) {
        const auto b = sample_block_proportions(2, 2.0, rng);
        CHECK(b[0] + b[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b[0] > 0.0);
        CHECK(b[0] < 1.0);
        mean += b[0] / 10000;
    }
    // Beta(1, 1) marginal: sd 1/sqrt(12).
    CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * 10000));
    const auto b = sample_block_proportions(5, 0.1, rng);
    CHECK(std::accumulate(b.begin(), b.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("network invariants") {
    Rng rng(7);
    const GgpParams p(20.0, 0.5, 1.0);
    const GeneratedNetwork net = sample_network(3, p, 3.0, 1.0, 1.0, rng);
    const int K = 3;
    CHECK(net.num_vertices() > 0);
    std::vector<long> endpoints(net.num_vertices(), 0);
    std::vector<long> tiles(K * K, 0);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const Edge& ed = net.edges[e];
        CHECK(ed.count >= 1);
        if (e > 0) {
            const Edge& prev = net.edges[e - 1];
            CHECK(std::pair(prev.source, prev.target) < std::pair(ed.source, ed.target));
        }
        endpoints[ed.source] += ed.count;
        endpoints[ed.target] += ed.count;
        tiles[net.vertex_blocks[ed.source] * K + net.vertex_blocks[ed.target]] += ed.count;
    }
    CHECK(endpoints == net.vertex_endpoints);
    CHECK(tiles == net.tile_edges);
    for (long n : endpoints) CHECK(n >= 1);
    for (int z : net.vertex_blocks) {
        CHECK(z >= 0);
        CHECK(z < K);
    }
    for (double eta : net.interaction) CHECK(eta >= 0.0);
    CHECK(std::accumulate(net.block_proportions.begin(), net.block_proportions.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("deterministic under a seed") {
        Rng a(99), b(99);
        const auto n1 = sample_network(2, p, 2.0, 1.0, 1.0, a);
        const auto n2 = sample_network(2, p, 2.0, 1.0, 1.0, b);
        CHECK(n1.edges == n2.edges);
        CHECK(n1.vertex_blocks == n2.vertex_blocks);
    }
    SUBCASE("zero interaction gives an empty network") {
        NetworkOptions o;
        o.eta_override = 0.0;
        CHECK(sample_network(2, p, 2.0, 1.0, 1.0, rng, o).edges.empty());
    }
    SUBCASE("edge cap") {
        NetworkOptions o;
        o.max_edges = 10;
        o.eta_override = 1.0;
        CHECK_THROWS_AS(sample_network(1, GgpParams(200.0, 0.5, 1.0), 1.0, 1.0, 1.0, rng, o), ResourceError);
    }
    SUBCASE("unselected atoms carry their block from the trait") {
        NetworkOptions o;
        o.keep_unselected = true;
        const auto n = sample_network(3, p, 3.0, 1.0, 1.0, rng, o);
        std::vector<double> cum(3);
        std::partial_sum(n.block_proportions.begin(), n.block_proportions.end(), cum.begin());
        for (std::size_t i = 0; i < n.unselected.size(); ++i) {
            const auto b = std::upper_bound(cum.begin(), cum.end(), n.unselected.traits[i]) - cum.begin();
            CHECK(std::min<long>(b, 2) == n.unselected_blocks[i]);
        }
    }
}

TEST_CASE("edge counts are Poisson given the block masses") {
    // K = 1, eta = 1: L | T ~ Poisson(T^2). Standardized residuals have
    // mean 0 and variance 1.
    Rng rng(13);
    NetworkOptions o;
    o.eta_override = 1.0;
    const GgpParams p(2.0, 0.5, 1.0);
    const int reps = 20000;
    double s1 = 0.0, s2 = 0.0;
    int used = 0;
    for (int r = 0; r < reps; ++r) {
        const auto net = sample_network(1, p, 1.0, 1.0, 1.0, rng, o);
        const double mean = net.block_masses[0] * net.block_masses[0];
        if (mean < 1e-3) continue;
        const double z = (static_cast<double>(net.num_edges()) - mean) / std::sqrt(mean);
        s1 += z;
        s2 += z * z;
        ++used;
    }
    CHECK(std::abs(s1 / used) < 4.0 / std::sqrt(used));
    CHECK(s2 / used == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("tile counts are conditionally Poisson") {
    // Randomized probability integral transform of each tile count under
    // Poisson(eta T_l T_m) is uniform when the conditional law is right.
    Rng rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const GgpParams p(5.0, 0.5, 1.0);
    const int bins = 10;
    std::vector<long> hist(bins, 0);
    long total = 0;
    for (int r = 0; r < 3000; ++r) {
        const auto net = sample_network(2, p, 2.0, 2.0, 2.0, rng);
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m) {
                const double rate = net.interaction[l * 2 + m] * net.block_masses[l] * net.block_masses[m];
                if (!(rate > 0.0)) continue;
                const long L = net.tile_edges[l * 2 + m];
                const boost::math::poisson_distribution<double> pois(rate);
                const double below = L == 0 ? 0.0 : boost::math::cdf(pois, static_cast<double>(L - 1));
                const double u = below + U(rng) * boost::math::pdf(pois, static_cast<double>(L));
                ++hist[std::min(bins - 1, static_cast<int>(u * bins))];
                ++total;
            }
    }
    double chi2 = 0.0;
    const double e = static_cast<double>(total) / bins;
    for (long h : hist) chi2 += (h - e) * (h - e) / e;
    CHECK(chi2 < boost::math::quantile(boost::math::chi_squared(bins - 1), 0.99));
}
