#pragma once

// Generalized gamma process (GGP) special functions.
//
// The GGP restricted to a location window of Lebesgue measure alpha has Levy
// intensity alpha * rho(dw) with
//
//     rho(dw) = w^(-1-sigma) exp(-tau w) / Gamma(1-sigma) dw,   0 < sigma < 1, tau >= 0.
//
// Its total mass T has Laplace exponent psi(u) = (alpha/sigma)((u+tau)^sigma - tau^sigma)
// and density g(t) = theta^(-1/sigma) f_sigma(x) exp(lambda^sigma - lambda x) with
// x = t theta^(-1/sigma), theta = alpha/sigma, lambda = tau theta^(1/sigma), where
// f_sigma is the positive sigma-stable density (Laplace transform exp(-u^sigma))
// evaluated through Zolotarev's integral over (0, pi).

#include <memory>
#include <vector>

#include "crmsbm/random.hpp"

namespace crmsbm {

class GgpParams {
public:
    /// Throws DomainError unless alpha > 0, 0 < sigma < 1, tau >= 0.
    GgpParams(double alpha, double sigma, double tau);

    double alpha() const noexcept { return alpha_; }
    double sigma() const noexcept { return sigma_; }
    double tau() const noexcept { return tau_; }

    /// alpha / sigma
    double theta() const noexcept { return alpha_ / sigma_; }
    /// theta^(1/sigma): scale between the standard stable variable and T.
    double scale() const;
    /// Exponential tilt of the standardized variable, tau * scale().
    double tilt() const { return tau_ * scale(); }
    /// E[T] = alpha tau^(sigma-1); infinite when tau = 0.
    double mean_total_mass() const;

private:
    double alpha_, sigma_, tau_;
};

double levy_density(const GgpParams& p, double w);
double log_levy_density(const GgpParams& p, double w);

double laplace_exponent(const GgpParams& p, double u);

/// Zolotarev's function A(sigma, u) on the open interval (0, pi).
double zolotarev_A(double sigma, double u);
double log_zolotarev_A(double sigma, double u);
/// The u -> 0+ limit, (1-sigma) sigma^(sigma/(1-sigma)).
double zolotarev_A_at_zero(double sigma);

/// Positive sigma-stable density by adaptive quadrature of Zolotarev's integral.
double stable_density(double sigma, double x);
double log_stable_density(double sigma, double x);

double total_mass_density(const GgpParams& p, double t);
double log_total_mass_density(const GgpParams& p, double t);

/// Log of the joint density of (T, U) whose U-marginal is the total-mass
/// density: the Zolotarev integrand with U in (0, pi) treated as an auxiliary
/// variable. No quadrature; used inside the MCMC target.
double log_total_mass_density_augmented(const GgpParams& p, double t, double u);

/// Inverse-CDF sampler and CDF for the total mass, tabulated by quadrature on
/// a log-spaced grid of the standardized variable. Immutable once built.
class TotalMassDistribution {
public:
    explicit TotalMassDistribution(const GgpParams& p);

    const GgpParams& params() const noexcept { return params_; }
    double cdf(double t) const;
    double sample(Rng& rng) const;
    /// Number of grid cells in the table.
    std::size_t cells() const noexcept { return log_x_.size() - 1; }

private:
    GgpParams params_;
    double scale_;
    std::vector<double> log_x_;  // grid in log of the standardized variable
    std::vector<double> cdf_;
};

/// Shared, lazily built table for the given parameters.
std::shared_ptr<const TotalMassDistribution> total_mass_distribution(const GgpParams& p);

/// One draw of the total mass T.
double sample_total_mass(const GgpParams& p, Rng& rng);

/// Exact positive-stable draw (Kanter's representation), Laplace transform exp(-u^sigma).
double sample_stable(double sigma, Rng& rng);

/// log of the rising factorial a (a+1) ... (a+n-1).
double pochhammer_log(double a, long n);

/// log G(a, b) = log Gamma(a) - a log b, the Gamma normalizer.
double gamma_norm_log(double a, double b);

}  // namespace crmsbm
