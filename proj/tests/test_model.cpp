#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "crmsbm/error.hpp"
#include "crmsbm/model.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace crmsbm;

TEST_CASE("sufficient statistics") {
    EdgeCountMatrix A(4);
    A.set(0, 1, 2);
    A.set(1, 0, 1);
    A.set(2, 2, 1);
    A.set(3, 0, 3);
    const BlockState z{{0, 0, 1, 1}, 2, 1.0};
    const auto st = suff_stats(A, z);
    CHECK(st.vertex_endpoints == std::vector<long>{6, 3, 2, 3});
    CHECK(st.block_endpoints == std::vector<long>{9, 5});
    CHECK(st.block_vertices == std::vector<long>{2, 2});
    CHECK(st.tile == std::vector<long>{3, 0, 3, 1});
    CHECK(st.log_factorial_sum == doctest::Approx(std::log(2.0) + std::log(6.0)));
    CHECK(st.endpoint_histogram[1].at(3) == 1);
    CHECK(st.endpoint_histogram[1].at(2) == 1);
    // The graph form agrees with the matrix form.
    const auto sg = suff_stats(CountGraph(A), z.labels, 2);
    CHECK(sg.tile == st.tile);
    CHECK(sg.vertex_endpoints == st.vertex_endpoints);
}

TEST_CASE("single-block joint equals the hand-written formula") {
    EdgeCountMatrix A(3);
    A.set(0, 1, 1);
    A.set(1, 2, 2);
    A.set(2, 2, 1);
    MeasureState m;
    m.sigma = 0.4;
    m.tau = 1.3;
    m.unit_interaction = true;
    m.blocks = {{2.5, 1.7, 0.6, 1.1}};
    const BlockState z{{0, 0, 0}, 1, 1.0};
    // n = (1, 3, 4): (1-s)_0 (1-s)_2 (1-s)_3.
    const double s = m.sigma;
    const double n = 8.0, k = 3.0;
    const double poch = std::log((1 - s) * (2 - s)) + std::log((1 - s) * (2 - s) * (3 - s));
    const double expected = -std::log(2.5) + k * std::log(2.5) + (n - k * s - 1) * std::log(1.7) -
                            std::lgamma(n - k * s) - m.tau * 1.7 +
                            log_total_mass_density_augmented(GgpParams(2.5, s, m.tau), 0.6, 1.1) + poch -
                            std::log(2.0) - (1.7 + 0.6) * (1.7 + 0.6);
    CHECK(log_joint(A, z, m) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Pochhammer term uses n_i - 1") {
    // One vertex with a single self-edge: n_i = 2, so the factor is (1 - sigma)_1 = 1 - sigma.
    EdgeCountMatrix A(1);
    A.set(0, 0, 1);
    MeasureState m;
    m.sigma = 0.5;
    m.blocks = {{1.0, 1.0, 1.0, 1.0}};
    const auto terms = log_joint_terms(suff_stats(A, BlockState{{0}, 1, 1.0}), m, 1.0);
    CHECK(std::exp(terms.pochhammer) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("collapsed block factor equals direct integration over weights") {
    // Two vertices with n = (2, 3). Integrate the weights on the simplex
    // w1 + w2 = s against alpha^2 rho(w1) rho(w2) w1^n1 w2^n2.
    const double alpha = 1.7, sigma = 0.35, tau = 0.8, s = 1.4;
    const int n1 = 2, n2 = 3;
    boost::math::quadrature::tanh_sinh<double> q;
    const double g1 = std::tgamma(1 - sigma);
    const double direct = alpha * alpha *
                          q.integrate(
                              [&](double w1) {
                                  const double w2 = s - w1;
                                  if (w1 <= 0 || w2 <= 0) return 0.0;
                                  return std::pow(w1, n1 - 1 - sigma) * std::pow(w2, n2 - 1 - sigma) *
                                         std::exp(-tau * s) / (g1 * g1);
                              },
                              0.0, s);
    MeasureState m;
    m.sigma = sigma;
    m.tau = tau;
    m.blocks = {{alpha, s, 1.0, 1.0}};
    const double core = log_block_core(m, 0, n1 + n2, 2, TotalMassTerm::marginal) -
                        log_total_mass_density(GgpParams(alpha, sigma, tau), 1.0);
    const double poch = pochhammer_log(1 - sigma, n1 - 1) + pochhammer_log(1 - sigma, n2 - 1);
    CHECK(std::exp(core + poch) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("joint is invariant to block relabelling and vertex reordering") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 6;
        const EdgeCountMatrix A = test_util::small_graph(n, 0.3, rng);
        const MeasureState m = test_util::random_measure(3, rng);
        std::vector<int> labels(n);
        std::uniform_int_distribution<int> pick(0, 2);
        for (auto& l : labels) l = pick(rng);
        const double base = log_joint(A, BlockState{labels, 3, 1.4}, m);

        const std::vector<int> perm = {2, 0, 1};
        MeasureState mp = m;
        std::vector<int> lp = labels;
        for (int l = 0; l < 3; ++l) mp.blocks[perm[l]] = m.blocks[l];
        for (auto& l : lp) l = perm[l];
        CHECK(log_joint(A, BlockState{lp, 3, 1.4}, mp) == doctest::Approx(base).epsilon(1e-12));

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        EdgeCountMatrix B(n);
        for (const auto& [d, c] : A.entries()) B.set(order[d.first], order[d.second], c);
        B.set_binary_mode(A.binary_mode());
        std::vector<int> lb(n);
        for (int v = 0; v < n; ++v) lb[order[v]] = labels[v];
        CHECK(log_joint(B, BlockState{lb, 3, 1.4}, m) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("large interaction hyperparameters reduce the tile term to exp(-T T)") {
    Rng rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        MeasureState m = test_util::random_measure(1, rng);
        m.lambda_a = m.lambda_b = 1e6;
        const double T = m.blocks[0].s + m.blocks[0].t;
        const long n = static_cast<long>(10 * U(rng));
        MeasureState unit = m;
        unit.unit_interaction = true;
        // Gamma(1e6, 1e6) concentrates at 1, leaving exp(-T^2) with eta^n -> 1.
        CHECK(std::abs(log_tile_term(m, n, T, T) - log_tile_term(unit, n, T, T)) < 1e-3);
    }
}

TEST_CASE("empty blocks") {
    MeasureState m;
    m.sigma = 0.5;
    m.tau = 1.0;
    m.blocks = {{1.0, 2.0, 0.7, 1.2}};
    const double lg = log_total_mass_density_augmented(GgpParams(1.0, 0.5, 1.0), 0.7, 1.2);
    CHECK(log_block_core(m, 0, 0, 0) == doctest::Approx(lg - 2.0));
    CHECK(m.block_mass(0, 0) == 0.7);
    CHECK(m.block_mass(0, 3) == doctest::Approx(2.7));
}

TEST_CASE("alpha prior") {
    MeasureState m;
    m.blocks = {{2.0, 1, 1, 1}};
    CHECK(log_alpha_prior(m, 3.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-13));
    m.blocks = {{1.0, 1, 1, 1}, {3.0, 1, 1, 1}};
    const double b0 = 2.0;
    // Gamma(2) a1^0 a2^0 / (Gamma(1)^2 4^2)
    CHECK(log_alpha_prior(m, b0) == doctest::Approx(-2.0 * std::log(4.0)).epsilon(1e-13));
}

TEST_CASE("parameter transform") {
    Rng rng(4);
    for (bool unit : {false, true}) {
        const MeasureState m = test_util::random_measure(3, rng, unit);
        const auto y = transform_params(m);
        CHECK(y.size() == (unit ? 14u : 16u));
        const MeasureState back = untransform(y, m);
        CHECK(back.sigma == doctest::Approx(m.sigma).epsilon(1e-13));
        CHECK(back.blocks[2].u == doctest::Approx(m.blocks[2].u).epsilon(1e-13));
        CHECK(back.blocks[1].t == doctest::Approx(m.blocks[1].t).epsilon(1e-13));
        CHECK(back.lambda_b == doctest::Approx(m.lambda_b).epsilon(1e-13));

        // The map is coordinatewise, so log|J| is a sum of log derivatives.
        double fd = 0.0;
        const double h = 1e-6;
        for (std::size_t k = 0; k < y.size(); ++k) {
            auto yp = y, ym = y;
            yp[k] += h;
            ym[k] -= h;
            auto flat = [&](const MeasureState& s) {
                std::vector<double> v = {s.sigma, s.tau};
                for (const auto& b : s.blocks) v.insert(v.end(), {b.alpha, b.s, b.t, b.u});
                if (!s.unit_interaction) v.insert(v.end(), {s.lambda_a, s.lambda_b});
                return v;
            };
            fd += std::log(std::abs((flat(untransform(yp, m))[k] - flat(untransform(ym, m))[k]) / (2 * h)));
        }
        CHECK(log_jacobian(y, m) == doctest::Approx(fd).epsilon(1e-7));
    }
    const MeasureState m = test_util::random_measure(2, rng);
    CHECK_THROWS_AS(untransform({0.0, 1.0}, m), DomainError);
}

TEST_CASE("label validation") {
    CHECK_THROWS_AS((BlockState{{0, 2}, 2, 1.0}).validate(), DomainError);
    CHECK_THROWS_AS((BlockState{{0, 1}, 2, 0.0}).validate(), DomainError);
    CHECK_NOTHROW((BlockState{{0, 1}, 2, 1.0}).validate());
}
