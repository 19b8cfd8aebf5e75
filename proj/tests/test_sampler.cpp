#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "crmsbm/error.hpp"
#include "crmsbm/quadrature.hpp"
#include "crmsbm/sampler.hpp"
#include "crmsbm/validate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace crmsbm;

namespace {

// Label conditional by evaluating the full joint at every label.
std::vector<double> brute_conditional(const EdgeCountMatrix& A, std::vector<int> labels, int K,
                                      const MeasureState& m, int v) {
    std::vector<double> lp(static_cast<std::size_t>(K));
    for (int l = 0; l < K; ++l) {
        labels[static_cast<std::size_t>(v)] = l;
        lp[static_cast<std::size_t>(l)] = log_joint(A, BlockState{labels, K, 1.3}, m);
    }
    const double mx = *std::max_element(lp.begin(), lp.end());
    double z = 0.0;
    for (double& x : lp) z += (x = std::exp(x - mx));
    for (double& x : lp) x /= z;
    return lp;
}

double chi2_statistic(const std::vector<long>& observed, const std::vector<double>& expected) {
    double chi2 = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        const double d = static_cast<double>(observed[k]) - expected[k];
        chi2 += d * d / expected[k];
    }
    return chi2;
}

}  // namespace

TEST_CASE("gibbs conditional matches brute-force joint evaluation") {
    Rng rng(11);
    for (int rep = 0; rep < 12; ++rep) {
        const int n = 3 + rep % 3;
        const int K = 2 + rep % 2;
        const EdgeCountMatrix A = test_util::small_graph(n, 0.35, rng, rep % 2 == 0);
        const MeasureState m = test_util::random_measure(K, rng, rep % 4 == 3);
        std::vector<int> labels(static_cast<std::size_t>(n));
        std::uniform_int_distribution<int> pick(0, K - 1);
        for (auto& l : labels) l = pick(rng);
        const CountGraph graph(A);
        for (int v = 0; v < n; ++v) {
            const auto fast = gibbs_conditional(graph, labels, K, m, v);
            const auto slow = brute_conditional(A, labels, K, m, v);
            REQUIRE(fast.size() == slow.size());
            for (int l = 0; l < K; ++l)
                CHECK(fast[static_cast<std::size_t>(l)] / fast[0] ==
                      doctest::Approx(slow[static_cast<std::size_t>(l)] / slow[0]).epsilon(1e-10));
        }
    }
}

TEST_CASE("gibbs conditional handles a vertex that empties its block") {
    Rng rng(5);
    const EdgeCountMatrix A = test_util::small_graph(4, 0.5, rng);
    const MeasureState m = test_util::random_measure(3, rng);
    const std::vector<int> labels = {0, 0, 1, 0};
    const auto fast = gibbs_conditional(CountGraph(A), labels, 3, m, 2);
    const auto slow = brute_conditional(A, labels, 3, m, 2);
    for (int l = 0; l < 3; ++l) CHECK(fast[l] == doctest::Approx(slow[l]).epsilon(1e-10));
}

TEST_CASE("zero-truncated Poisson passes a chi-square test") {
    Rng rng(3);
    for (double rate : {0.05, 0.4, 1.0, 2.5, 7.0}) {
        const long draws = 100000;
        const int top = 40;
        std::vector<long> counts(top + 1, 0);
        for (long d = 0; d < draws; ++d) {
            const long a = update_edge_count(1, false, true, rate, rng);
            REQUIRE(a >= 1);
            ++counts[static_cast<std::size_t>(std::min<long>(a, top))];
        }
        // Merge adjacent cells until each expects at least 5 draws; the last
        // cell absorbs the tail beyond `top`.
        std::vector<long> obs;
        std::vector<double> expd;
        double pmf = rate / std::expm1(rate);
        double cell_e = 0.0, used = 0.0;
        long cell_o = 0;
        for (int k = 1; k <= top; ++k) {
            cell_e += pmf * draws;
            used += pmf;
            cell_o += counts[static_cast<std::size_t>(k)];
            if (cell_e >= 5.0) {
                obs.push_back(cell_o);
                expd.push_back(cell_e);
                cell_e = 0.0;
                cell_o = 0;
            }
            pmf *= rate / static_cast<double>(k + 1);
        }
        obs.back() += cell_o;
        expd.back() += (1.0 - used) * draws + cell_e;
        const double chi2 = chi2_statistic(obs, expd);
        const auto dof = static_cast<double>(std::max<std::size_t>(obs.size(), 2) - 1);
        const double crit = boost::math::quantile(boost::math::chi_squared(dof), 0.99);
        INFO("rate " << rate << " chi2 " << chi2 << " crit " << crit);
        CHECK(chi2 < crit);
    }
}

TEST_CASE("edge update rules") {
    Rng rng(8);
    CHECK(update_edge_count(3, false, false, 2.0, rng) == 3);
    CHECK(update_edge_count(0, false, true, 2.0, rng) == 0);
    double sum = 0.0;
    for (int d = 0; d < 20000; ++d) sum += static_cast<double>(update_edge_count(0, true, true, 1.7, rng));
    CHECK(sum / 20000.0 == doctest::Approx(1.7).epsilon(0.03));
    for (int d = 0; d < 100; ++d) CHECK(update_edge_count(0, true, true, 50.0, rng, true) <= 1);
}

TEST_CASE("weight imputation") {
    Rng rng(2);
    EdgeCountMatrix A(4);
    A.set(0, 1, 1);
    A.set(1, 2, 2);
    A.set(2, 3, 1);
    A.set(3, 0, 3);
    MeasureState m = test_util::random_measure(2, rng);
    m.sigma = 0.3;
    SUBCASE("single-vertex block") {
        const auto stats = suff_stats(A, BlockState{{0, 1, 1, 1}, 2, 1.0});
        const auto w = impute_weights(stats, m, 0, rng);
        REQUIRE(w.size() == 1);
        CHECK(w[0] == doctest::Approx(1.0));
    }
    SUBCASE("Dirichlet means") {
        const auto stats = suff_stats(A, BlockState{{0, 0, 0, 1}, 2, 1.0});
        // n = (4, 3, 3) for vertices 0..2.
        const std::vector<double> n = {4, 3, 3};
        const double total = 10.0 - 3.0 * m.sigma;
        std::vector<double> mean(3, 0.0);
        const int draws = 100000;
        for (int d = 0; d < draws; ++d) {
            const auto w = impute_weights(stats, m, 0, rng);
            CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
            for (int i = 0; i < 3; ++i) mean[i] += w[i] / draws;
        }
        for (int i = 0; i < 3; ++i) {
            const double a = (n[i] - m.sigma) / total;
            const double sd = std::sqrt(a * (1 - a) / (total + 1) / draws);
            CHECK(std::abs(mean[i] - a) < 5 * sd);
        }
    }
    SUBCASE("interaction rate means") {
        const BlockState z{{0, 0, 1, 1}, 2, 1.0};
        const auto stats = suff_stats(A, z);
        std::vector<double> mean(4, 0.0);
        const int draws = 50000;
        for (int d = 0; d < draws; ++d) {
            const auto eta = impute_eta(stats, m, rng);
            for (int k = 0; k < 4; ++k) mean[k] += eta[k] / draws;
        }
        for (int l = 0; l < 2; ++l)
            for (int k = 0; k < 2; ++k) {
                const double T = m.block_mass(l, 2) * m.block_mass(k, 2);
                const double shape = m.lambda_a + static_cast<double>(stats.tile_count(l, k));
                const double rate = m.lambda_b + T;
                const double sd = std::sqrt(shape) / rate / std::sqrt(draws);
                CHECK(std::abs(mean[l * 2 + k] - shape / rate) < 5 * sd);
            }
    }
    SUBCASE("unit interaction") {
        m.unit_interaction = true;
        const auto eta = impute_eta(suff_stats(A, BlockState{{0, 0, 1, 1}, 2, 1.0}), m, rng);
        for (double e : eta) CHECK(e == 1.0);
    }
}

TEST_CASE("tiny MH steps are almost always accepted") {
    Rng rng(4);
    const EdgeCountMatrix A = test_util::small_graph(5, 0.4, rng);
    const MeasureState m = test_util::random_measure(2, rng);
    const auto stats = suff_stats(A, BlockState{{0, 0, 1, 1, 0}, 2, 1.0});
    MhSettings s;
    s.steps = 50;
    s.step_size = 1e-7;
    const auto r = mh_sweep(stats, m, 1.0, s, rng);
    CHECK(r.acceptance_rate > 0.99);
    CHECK(r.measure.sigma == doctest::Approx(m.sigma).epsilon(1e-5));
    CHECK(r.measure.blocks[1].s == doctest::Approx(m.blocks[1].s).epsilon(1e-5));
}

TEST_CASE("MH marginal of sigma matches the quadrature posterior") {
    // Frozen 3-vertex network; only logit(sigma) moves.
    EdgeCountMatrix A(3);
    A.set(0, 1, 1);
    A.set(1, 2, 1);
    A.set(2, 0, 1);
    A.set(0, 2, 1);
    A.set_binary_mode(false);
    const BlockState z{{0, 0, 0}, 1, 1.0};
    const auto stats = suff_stats(A, z);
    MeasureState m;
    m.tau = 1.0;
    m.blocks = {{2.0, 1.5, 0.8, 1.0}};
    m.unit_interaction = true;

    auto log_target = [&](double sigma) {
        MeasureState c = m;
        c.sigma = sigma;
        return log_posterior(stats, c, 1.0);
    };
    double peak = -1e300;
    for (int i = 1; i < 1000; ++i) peak = std::max(peak, log_target(i / 1000.0));
    QuadratureOptions q;
    q.abs_tol = 1e-12;
    const double norm = integrate([&](double x) { return std::exp(log_target(x) - peak); }, 1e-9, 1 - 1e-9, q).value;
    auto cdf = [&](double s) {
        return integrate([&](double x) { return std::exp(log_target(x) - peak); }, 1e-9, s, q).value / norm;
    };

    MhSettings set;
    set.steps = 1;
    set.step_size = 0.1;
    set.sample_beta0 = false;
    set.active.assign(transform_params(m).size() + 1, false);
    set.active[0] = true;
    Rng rng(17);
    std::vector<double> draws;
    MeasureState cur = m;
    cur.sigma = 0.5;
    // Thin by 20 single-coordinate steps.
    for (int d = 0; d < 20000; ++d) {
        for (int k = 0; k < 20; ++k) cur = mh_sweep(stats, cur, 1.0, set, rng).measure;
        draws.push_back(cur.sigma);
    }
    // Tabulate the CDF once on a grid and interpolate.
    const int grid = 2000;
    std::vector<double> table(grid + 1);
    for (int i = 0; i <= grid; ++i) table[i] = i == 0 ? 0.0 : cdf(static_cast<double>(i) / grid);
    auto cdf_interp = [&](double s) {
        const double x = s * grid;
        const int i = std::clamp(static_cast<int>(x), 0, grid - 1);
        return table[i] + (x - i) * (table[i + 1] - table[i]);
    };
    const double ks = ks_distance(draws, cdf_interp);
    INFO("KS " << ks);
    CHECK(ks < 0.05);
}

TEST_CASE("run_mcmc is reproducible and writes consistent traces") {
    Rng g(9);
    EdgeCountMatrix A = test_util::small_graph(8, 0.3, g);
    A.hold_out(0, 5);
    if (A.count(5, 0) == 0) A.hold_out(5, 0);
    McmcConfig c;
    c.K = 2;
    c.iterations = 30;
    c.mh_steps = 5;
    try {
        A.validate(true);
    } catch (const DomainError&) {
        A.release(0, 5);
        A.release(5, 0);
    }
    Rng r1(42), r2(42);
    const Chain a = run_mcmc(A, c, r1);
    const Chain b = run_mcmc(A, c, r2);
    std::ostringstream ta, tb, pa, pb;
    write_trace_csv(ta, a.trace, 2);
    write_trace_csv(tb, b.trace, 2);
    write_predictions_csv(pa, a.predictions);
    write_predictions_csv(pb, b.predictions);
    CHECK(ta.str() == tb.str());
    CHECK(pa.str() == pb.str());
    CHECK(a.trace.size() == 30);
    CHECK(ta.str().rfind("iter,logp,sigma,tau,alpha_1,alpha_2,s_1,s_2,t_1,t_2,accept_rate", 0) == 0);
    for (const auto& p : a.predictions) {
        CHECK(p.score >= 0.0);
        CHECK(p.score <= 1.0);
    }
    std::istringstream in(pa.str());
    const auto back = read_predictions_csv(in);
    REQUIRE(back.size() == a.predictions.size());
}
