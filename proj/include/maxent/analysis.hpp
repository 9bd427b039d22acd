#ifndef MAXENT_ANALYSIS_HPP
#define MAXENT_ANALYSIS_HPP

#include <vector>

#include "maxent/common.hpp"
#include "maxent/entropy.hpp"

namespace maxent {

/// Inputs to the performance-bound expressions: the bell-shaped Q envelope
/// (zeta = peak height, xi = peak width), the per-state policy-std cap
/// sigma_star, the entropy weight alpha, the entropy measure with its index,
/// and the discount used by the final lower bound.
struct BoundParams {
    double xi_lo = 1.0, xi_hi = 1.0;
    double zeta_lo = 1.0, zeta_hi = 1.0;
    double sigma_star = 1.0;
    double alpha = 1.0;
    EntropyMeasure measure = EntropyMeasure::tsallis(2.0);
    double gamma = 0.99;

    void validate() const;
};

// Unique positive root sigma of
//   alpha (2 pi)^{(1-q)/2} sigma^{-q} / sqrt(q) - xi zeta sigma / (xi^2 + sigma^2)^{3/2} = 0,
// located by bracket expansion plus bisection to residual <= 1e-10. Throws if
// no sign change is found inside [1e-12, 1e12] (the equation has no root for
// some q < 2 parameter settings).
double optimal_sigma_tsallis(double alpha, double q, double xi, double zeta);

// Per-state value-loss bound when Tsallis entropy drives the improvement
// step; q = 1 evaluates the Shannon limit for comparison grids. Maximized
// over xi in [xi_lo, xi_hi] by golden section plus endpoint checks.
double zeta_tsallis(const BoundParams& params);

// Same bound for Renyi entropy; independent of the entropic index.
double zeta_renyi(const BoundParams& params);

// Dispatch on params.measure (Shannon evaluates the q = 1 Tsallis limit).
double zeta_bound(const BoundParams& params);

// Discounted performance floor: q_standard - gamma / (1 - gamma) * zeta.
double lower_bound(const BoundParams& params, double q_standard);

struct ExtremeValueParams {
    double rho = 0.0;  // F^{-1}_Omega(1 - 1/L)
    double phi = 0.0;  // F^{-1}_Omega(1 - 1/(eL)) - rho
};

// Quantile parameters of the max over L draws from the negative half-normal
// with scale sigma_star (CDF 2 Phi(a / sigma_star) on a <= 0). The inverse
// CDF uses the rational normal-quantile approximation refined by bisection
// to 1e-10.
ExtremeValueParams extreme_value_params(int L, double sigma_star);

struct DominanceRow {
    int L = 0;
    double expected_q = 0.0;
    double gap = 0.0;        // zeta_s - expected_q
    double std_error = 0.0;  // Monte-Carlo standard error of expected_q
};

// Monte-Carlo estimate of E[Q(best of L Gaussian-sampled actions)] for the
// bell-shaped Q(s,a) = zeta_s exp(-(a - abar_s)^2 / (2 xi_s^2)) with samples
// from N(abar_s, sigma_star^2).
std::vector<DominanceRow> ensemble_dominance_mc(const std::vector<int>& l_values,
                                                double sigma_star, double zeta_s,
                                                double xi_s, double abar_s,
                                                long trials, std::uint64_t seed);

}  // namespace maxent

#endif
