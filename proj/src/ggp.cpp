#include "crmsbm/ggp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "crmsbm/error.hpp"
#include "crmsbm/quadrature.hpp"

namespace crmsbm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sinc(double v) {
    const double av = std::abs(v);
    if (av < 0.1) {
        const double v2 = v * v;
        return -v2 * (1.0 / 6.0 + v2 * (1.0 / 180.0 + v2 * (1.0 / 2835.0 + v2 / 37800.0)));
    }
    const double s = std::sin(v) / v;
    return s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
}

// log A(sigma, u) - log A(sigma, 0+). Accurate in relative terms for small u,
// where it behaves like sigma u^2 / 2. +inf at u >= pi.
double log_A_excess(double sigma, double u) {
    const double one_minus = 1.0 - sigma;
    const double ls_u = log_sinc(u);
    if (!std::isfinite(ls_u)) return std::numeric_limits<double>::infinity();
    return (one_minus * log_sinc(one_minus * u) + sigma * log_sinc(sigma * u) - ls_u) / one_minus;
}

double log_A_unchecked(double sigma, double u) {
    return std::log(zolotarev_A_at_zero(sigma)) + log_A_excess(sigma, u);
}

double log_prefactor(double sigma, double log_x) {
    return std::log(sigma) - std::log(kPi) - std::log1p(-sigma) - log_x / (1.0 - sigma);
}

// Large-x expansion f(x) = (1/(pi x)) sum_k (-1)^(k+1) Gamma(k sigma + 1)/k! sin(k pi sigma) x^(-k sigma),
// used once x^-sigma < 0.1 where the Zolotarev integrand approaches its
// nonintegrable limit and the terms decay geometrically.
double log_stable_density_series(double sigma, double log_x) {
    const double log_y = -sigma * log_x;
    double sum = 0.0;
    for (int k = 1; k <= 60; ++k) {
        const double log_mag = std::lgamma(k * sigma + 1.0) - std::lgamma(k + 1.0) + k * log_y;
        const double term = std::exp(log_mag) * std::sin(k * kPi * sigma);
        sum += (k % 2 == 1) ? term : -term;
        if (log_mag < std::log(std::abs(sum)) - 40.0) break;
    }
    return -std::log(kPi) - log_x + std::log(sum);
}

// Stable density via Zolotarev's integral, with exp(-a0 c) factored out so
// the integrand stays O(1) for extreme x.
double log_stable_density_impl(double sigma, double x) {
    const double log_x = std::log(x);
    const double r = sigma / (1.0 - sigma);
    const double log_c = -r * log_x;
    const double a0 = zolotarev_A_at_zero(sigma);
    const double log_ac = std::log(a0) + log_c;
    if (log_ac > 700.0) return kNegInf;
    if (-sigma * log_x < std::log(0.1)) return log_stable_density_series(sigma, log_x);
    const double ac = std::exp(log_ac);

    // Integrand is a0 exp(D - a0 c expm1(D)) with D = log A - log a0.
    // Beyond u_cut the exponential factor is below e^-60.
    const double d_cut = std::log1p(60.0 / ac);
    // D is increasing in u; bisect in log u so tiny cut points resolve.
    double lo = std::log(1e-300), hi = std::log(kPi);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (log_A_excess(sigma, std::exp(mid)) < d_cut)
            lo = mid;
        else
            hi = mid;
    }
    hi = std::exp(hi);
    const double u_cut = hi;

    std::vector<double> breaks;
    for (int j = 6; j >= 1; --j) breaks.push_back(u_cut * std::ldexp(1.0, -j));
    for (int j = 2; j <= 12; ++j) breaks.push_back(u_cut - u_cut * std::ldexp(1.0, -j));
    std::sort(breaks.begin(), breaks.end());

    auto integrand = [&](double u) {
        const double d = log_A_excess(sigma, u);
        if (!std::isfinite(d)) return 0.0;
        return std::exp(d - ac * std::expm1(d));
    };
    QuadratureOptions opts;
    opts.abs_tol = 0.0;
    opts.rel_tol = 1e-12;
    opts.max_panels = 4000;
    const auto res = integrate(integrand, 0.0, u_cut, opts, breaks);
    if (!res.converged || !(res.value > 0.0)) {
        if (res.value > 0.0 && res.error < 1e-8 * res.value) {
            // Rounding floor reached; accuracy is still adequate.
        } else {
            std::ostringstream msg;
            msg << "Zolotarev quadrature did not converge: sigma=" << sigma << " x=" << x
                << " value=" << res.value << " error=" << res.error;
            throw NumericError(msg.str());
        }
    }
    return log_prefactor(sigma, log_x) + std::log(a0) - ac + std::log(res.value);
}

}  // namespace

GgpParams::GgpParams(double alpha, double sigma, double tau) : alpha_(alpha), sigma_(sigma), tau_(tau) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("GGP alpha must be positive");
    if (!(sigma > 0.0 && sigma < 1.0))
        throw DomainError("GGP sigma must lie in (0,1); the finite-activity region is not supported");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("GGP tau must be nonnegative");
}

double GgpParams::scale() const { return std::exp(std::log(theta()) / sigma_); }

double GgpParams::mean_total_mass() const {
    if (tau_ == 0.0) return std::numeric_limits<double>::infinity();
    return alpha_ * std::pow(tau_, sigma_ - 1.0);
}

double log_levy_density(const GgpParams& p, double w) {
    if (!(w > 0.0)) throw DomainError("levy_density requires w > 0");
    return -(1.0 + p.sigma()) * std::log(w) - p.tau() * w - std::lgamma(1.0 - p.sigma());
}

double levy_density(const GgpParams& p, double w) { return std::exp(log_levy_density(p, w)); }

double laplace_exponent(const GgpParams& p, double u) {
    if (!(u >= 0.0)) throw DomainError("laplace_exponent requires u >= 0");
    const double s = p.sigma();
    if (p.tau() == 0.0) return p.theta() * std::pow(u, s);
    // (u+tau)^s - tau^s without cancellation for small u.
    return p.theta() * std::pow(p.tau(), s) * std::expm1(s * std::log1p(u / p.tau()));
}

double zolotarev_A_at_zero(double sigma) {
    return (1.0 - sigma) * std::pow(sigma, sigma / (1.0 - sigma));
}

double log_zolotarev_A(double sigma, double u) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("zolotarev_A requires sigma in (0,1)");
    if (!(u > 0.0 && u < kPi)) throw DomainError("zolotarev_A requires u in (0, pi)");
    return log_A_unchecked(sigma, u);
}

double zolotarev_A(double sigma, double u) { return std::exp(log_zolotarev_A(sigma, u)); }

double log_stable_density(double sigma, double x) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("stable_density requires sigma in (0,1)");
    if (!(x > 0.0)) throw DomainError("stable_density requires x > 0");
    return log_stable_density_impl(sigma, x);
}

double stable_density(double sigma, double x) { return std::exp(log_stable_density(sigma, x)); }

double log_total_mass_density(const GgpParams& p, double t) {
    if (!(t > 0.0)) throw DomainError("total_mass_density requires t > 0");
    const double log_scale = std::log(p.theta()) / p.sigma();
    const double x = std::exp(std::log(t) - log_scale);
    if (!(x > 0.0)) return kNegInf;
    const double tilt = p.theta() * std::pow(p.tau(), p.sigma()) - p.tau() * t;
    return -log_scale + log_stable_density_impl(p.sigma(), x) + tilt;
}

double total_mass_density(const GgpParams& p, double t) { return std::exp(log_total_mass_density(p, t)); }

double log_total_mass_density_augmented(const GgpParams& p, double t, double u) {
    if (!(t > 0.0) || !(u > 0.0 && u < kPi)) return kNegInf;
    const double sigma = p.sigma();
    const double log_scale = std::log(p.theta()) / sigma;
    const double log_x = std::log(t) - log_scale;
    const double la = log_A_unchecked(sigma, u);
    if (!std::isfinite(la)) return kNegInf;
    const double log_c = -sigma / (1.0 - sigma) * log_x;
    const double ac = std::exp(la + log_c);
    const double tilt = p.theta() * std::pow(p.tau(), sigma) - p.tau() * t;
    return -log_scale + log_prefactor(sigma, log_x) + la - ac + tilt;
}

// ---------------------------------------------------------------------------

TotalMassDistribution::TotalMassDistribution(const GgpParams& p) : params_(p), scale_(p.scale()) {
    const double sigma = p.sigma();
    const double lambda = p.tilt();
    const double log_norm = p.theta() * std::pow(p.tau(), sigma);
    // Density of log X, X = T / scale.
    auto log_mass = [&](double lx) {
        const double x = std::exp(lx);
        return log_stable_density_impl(sigma, x) + log_norm - lambda * x + lx;
    };
    constexpr double kFloor = -46.0;
    constexpr double kStep = 0.5;

    double lo = 0.0;
    double prev = log_mass(lo);
    while (true) {
        const double v = log_mass(lo - kStep);
        lo -= kStep;
        if (v < kFloor && v < prev) break;
        prev = v;
        if (lo < -800.0) throw NumericError("total mass table: lower bound search failed");
    }
    double hi = 0.0;
    if (lambda > 0.0) {
        prev = log_mass(hi);
        while (true) {
            const double v = log_mass(hi + kStep);
            hi += kStep;
            if (v < kFloor && v < prev) break;
            prev = v;
            if (hi > 700.0) throw NumericError("total mass table: upper bound search failed");
        }
    } else {
        // Pure stable: stop where the tail x^-sigma / Gamma(1-sigma) is below 1e-10.
        hi = std::max(1.0, (23.0 - std::lgamma(1.0 - sigma)) / sigma);
        hi = std::min(hi, 650.0);
    }

    const double width = std::max(0.01, (hi - lo) / 20000.0);
    const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    log_x_.resize(cells + 1);
    cdf_.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) log_x_[i] = lo + (hi - lo) * static_cast<double>(i) / cells;
    auto mass = [&](double lx) { return std::exp(log_mass(lx)); };
    cdf_[0] = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
        cdf_[i + 1] = cdf_[i] + detail::gk15(mass, log_x_[i], log_x_[i + 1]).value;

    const double total = cdf_.back();
    if (lambda > 0.0) {
        if (std::abs(total - 1.0) > 1e-6) {
            std::ostringstream msg;
            msg << "total mass table does not normalize: " << total;
            throw NumericError(msg.str());
        }
        for (double& v : cdf_) v /= total;
    }
}

double TotalMassDistribution::cdf(double t) const {
    if (!(t > 0.0)) return 0.0;
    const double lx = std::log(t / scale_);
    if (lx <= log_x_.front()) return 0.0;
    if (lx >= log_x_.back()) {
        if (params_.tau() > 0.0) return 1.0;
        const double sigma = params_.sigma();
        return 1.0 - std::exp(-sigma * lx - std::lgamma(1.0 - sigma));
    }
    const auto it = std::upper_bound(log_x_.begin(), log_x_.end(), lx);
    const auto i = static_cast<std::size_t>(it - log_x_.begin()) - 1;
    const double f = (lx - log_x_[i]) / (log_x_[i + 1] - log_x_[i]);
    return cdf_[i] + f * (cdf_[i + 1] - cdf_[i]);
}

double TotalMassDistribution::sample(Rng& rng) const {
    if (params_.tau() == 0.0) return scale_ * sample_stable(params_.sigma(), rng);
    double u = uniform01(rng);
    while (u <= 0.0 || u >= 1.0) u = uniform01(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    i = std::clamp<std::size_t>(i, 1, cdf_.size() - 1) - 1;
    const double span = cdf_[i + 1] - cdf_[i];
    const double f = span > 0.0 ? (u - cdf_[i]) / span : 0.5;
    return scale_ * std::exp(log_x_[i] + f * (log_x_[i + 1] - log_x_[i]));
}

std::shared_ptr<const TotalMassDistribution> total_mass_distribution(const GgpParams& p) {
    static std::mutex mutex;
    static std::map<std::tuple<double, double, double>, std::shared_ptr<const TotalMassDistribution>> cache;
    const auto key = std::make_tuple(p.alpha(), p.sigma(), p.tau());
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto table = std::make_shared<const TotalMassDistribution>(p);
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(table)).first->second;
}

double sample_total_mass(const GgpParams& p, Rng& rng) { return total_mass_distribution(p)->sample(rng); }

double sample_stable(double sigma, Rng& rng) {
    double u = 0.0;
    while (u <= 0.0 || u >= kPi) u = kPi * uniform01(rng);
    double w = 0.0;
    while (w <= 0.0) w = std::exponential_distribution<double>(1.0)(rng);
    return std::exp((1.0 - sigma) / sigma * (log_A_unchecked(sigma, u) - std::log(w)));
}

double pochhammer_log(double a, long n) {
    if (!(a > 0.0)) throw DomainError("pochhammer_log requires a > 0");
    if (n < 0) throw DomainError("pochhammer_log requires n >= 0");
    if (n <= 16) {
        double prod = 1.0;
        for (long i = 0; i < n; ++i) prod *= a + static_cast<double>(i);
        return std::log(prod);
    }
    return std::lgamma(a + static_cast<double>(n)) - std::lgamma(a);
}

double gamma_norm_log(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("gamma_norm_log requires positive arguments");
    return std::lgamma(a) - a * std::log(b);
}

}  // namespace crmsbm
