#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "crmsbm/error.hpp"
#include "crmsbm/ggp.hpp"
#include "crmsbm/validate.hpp"
#include "doctest.h"

using namespace crmsbm;

namespace {

double levy_half(double x) { return std::exp(-0.25 / x) / (2.0 * std::sqrt(std::numbers::pi) * std::pow(x, 1.5)); }

// Independent double-exponential quadrature over (0, inf).
template <class F>
double boost_half_line(F f) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(GgpParams(0.0, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(GgpParams(1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(GgpParams(1.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(GgpParams(1.0, 0.5, -1.0), DomainError);
    CHECK_NOTHROW(GgpParams(1.0, 0.5, 0.0));
}

TEST_CASE("Levy density") {
    const GgpParams p(2.0, 0.5, 1.0);
    CHECK(levy_density(p, 1.0) == doctest::Approx(std::exp(-1.0) / std::tgamma(0.5)).epsilon(1e-14));
    CHECK(std::exp(log_levy_density(p, 3.0)) == doctest::Approx(levy_density(p, 3.0)).epsilon(1e-13));
    // alpha * int (1 - e^{-uw}) rho(w) dw = psi(u).
    for (double u : {0.1, 1.0, 10.0}) {
        const double integral =
            p.alpha() * boost_half_line([&](double w) { return -std::expm1(-u * w) * levy_density(p, w); });
        CHECK(integral == doctest::Approx(laplace_exponent(p, u)).epsilon(1e-9));
    }
}

TEST_CASE("Zolotarev function") {
    for (double s : {0.2, 0.5, 0.8}) {
        CHECK(zolotarev_A(s, 1e-6) == doctest::Approx(zolotarev_A_at_zero(s)).epsilon(1e-10));
        // Direct formula away from the endpoints.
        const double u = 1.3;
        const double direct = std::pow(std::sin(s * u), s / (1 - s)) * std::sin((1 - s) * u) /
                              std::pow(std::sin(u), 1 / (1 - s));
        CHECK(zolotarev_A(s, u) == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK_THROWS_AS(zolotarev_A(0.5, 0.0), DomainError);
    CHECK_THROWS_AS(zolotarev_A(0.5, std::numbers::pi), DomainError);
}

TEST_CASE("stable density at sigma 1/2 matches the closed form") {
    double worst = 0.0;
    for (double lx = std::log(0.05); lx <= std::log(20.0) + 1e-12; lx += 0.01) {
        const double x = std::exp(lx);
        worst = std::max(worst, std::abs(stable_density(0.5, x) / levy_half(x) - 1.0));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("stable density integrates to one and has the right Laplace transform") {
    for (double s : {0.2, 0.5, 0.7}) {
        // Body by quadrature up to X, tail from the termwise-integrated
        // large-x series P(X > x) = (1/pi) sum (-1)^(k+1) Gamma(k s)/k! sin(k pi s) x^(-k s).
        const double X = 1e8;
        boost::math::quadrature::tanh_sinh<double> q;
        const double body = q.integrate([&](double lx) { return stable_density(s, std::exp(lx)) * std::exp(lx); },
                                        std::log(1e-40), std::log(X));
        double tail = 0.0;
        for (int k = 1; k <= 40; ++k)
            tail += (k % 2 ? 1.0 : -1.0) * std::tgamma(k * s) / std::tgamma(k + 1.0) * std::sin(k * std::numbers::pi * s) *
                    std::pow(X, -k * s) / std::numbers::pi;
        const double mass = body + tail;
        INFO("sigma " << s);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));
        const double lt = boost_half_line([&](double x) { return std::exp(-x) * stable_density(s, x); });
        CHECK(lt == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    }
}

TEST_CASE("Laplace identity of the total-mass density") {
    for (double sigma : {0.25, 0.5, 0.75})
        for (double tau : {0.5, 1.0, 2.0}) {
            const GgpParams p(2.0, sigma, tau);
            for (double u : {0.1, 1.0, 10.0}) {
                const double lhs =
                    boost_half_line([&](double t) { return std::exp(-u * t) * total_mass_density(p, t); });
                INFO("sigma " << sigma << " tau " << tau << " u " << u);
                CHECK(std::abs(lhs - std::exp(-laplace_exponent(p, u))) < 1e-6);
            }
        }
}

TEST_CASE("augmented density marginalizes to the total-mass density") {
    const GgpParams p(3.0, 0.4, 1.5);
    boost::math::quadrature::tanh_sinh<double> q;
    for (double t : {0.5, 2.0, 6.0}) {
        const double m = q.integrate([&](double u) { return std::exp(log_total_mass_density_augmented(p, t, u)); },
                                     0.0, std::numbers::pi);
        CHECK(m == doctest::Approx(total_mass_density(p, t)).epsilon(1e-8));
    }
    CHECK(std::isinf(log_total_mass_density_augmented(p, 1.0, 0.0)));
}

TEST_CASE("total-mass density stays finite for extreme sigma") {
    const GgpParams p(30.0, 0.012, 2.5);
    CHECK(std::isfinite(log_total_mass_density(p, 1.0)));
    CHECK(std::isfinite(log_total_mass_density_augmented(p, 1.0, 0.5)));
}

TEST_CASE("total-mass moments and sampler") {
    const GgpParams p(2.0, 0.5, 1.0);
    const double mean = boost_half_line([&](double t) { return t * total_mass_density(p, t); });
    CHECK(mean == doctest::Approx(p.mean_total_mass()).epsilon(1e-8));
    const double var = boost_half_line([&](double t) { return t * t * total_mass_density(p, t); }) - mean * mean;
    // Var T = alpha (1 - sigma) tau^(sigma - 2).
    CHECK(var == doctest::Approx(2.0 * 0.5).epsilon(1e-8));

    Rng rng(1);
    std::vector<double> draws(100000);
    for (double& d : draws) d = sample_total_mass(p, rng);
    const auto dist = total_mass_distribution(p);
    CHECK(ks_distance(draws, [&](double t) { return dist->cdf(t); }) < 0.01);
    double sum = 0.0;
    for (double d : draws) sum += d;
    CHECK(std::abs(sum / draws.size() - mean) < 5 * std::sqrt(var / draws.size()));
    CHECK(dist->cdf(0.0) == 0.0);
    CHECK(dist->cdf(1e6) == doctest::Approx(1.0));
}

TEST_CASE("positive stable sampler has Laplace transform exp(-u^sigma)") {
    Rng rng(7);
    for (double s : {0.3, 0.5, 0.8}) {
        const int n = 100000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += std::exp(-sample_stable(s, rng));
        CHECK(std::abs(acc / n - std::exp(-1.0)) < 5 * 0.5 / std::sqrt(n));
    }
}

TEST_CASE("tau = 0 reduces the total mass to a scaled stable variable") {
    const GgpParams p(1.5, 0.5, 0.0);
    for (double t : {0.3, 1.0, 4.0})
        CHECK(total_mass_density(p, t) == doctest::Approx(levy_half(t / p.scale()) / p.scale()).epsilon(1e-8));
}

TEST_CASE("Pochhammer and Gamma normalizer") {
    CHECK(std::exp(pochhammer_log(0.5, 1)) == doctest::Approx(0.5));
    CHECK(pochhammer_log(0.7, 0) == 0.0);
    CHECK(std::exp(pochhammer_log(0.3, 4)) == doctest::Approx(0.3 * 1.3 * 2.3 * 3.3).epsilon(1e-13));
    CHECK(gamma_norm_log(2.5, 3.0) == doctest::Approx(std::lgamma(2.5) - 2.5 * std::log(3.0)).epsilon(1e-14));
}
