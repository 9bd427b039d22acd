#ifndef MAXENT_ENTROPY_HPP
#define MAXENT_ENTROPY_HPP

#include <span>
#include <string>
#include <vector>

#include "maxent/common.hpp"

namespace maxent {

enum class EntropyKind { Shannon, Tsallis, Renyi };

/// Tagged entropy measure with its entropic index (q for Tsallis, eta for
/// Renyi). Index 1 is normalized to the Shannon kind at construction, so the
/// limit case never hits the 0/0 in the generalized-logarithm forms.
struct EntropyMeasure {
    EntropyKind kind = EntropyKind::Shannon;
    double index = 1.0;

    static EntropyMeasure shannon() { return {EntropyKind::Shannon, 1.0}; }
    static EntropyMeasure tsallis(double q);
    static EntropyMeasure renyi(double eta);

    std::string name() const;
};

EntropyMeasure entropy_measure_from_name(const std::string& name, double index);

// q-logarithm: (x^{q-1} - 1) / (q - 1); natural log at q = 1. Requires x > 0.
double q_log(double x, double q);

// Discrete entropies over a probability vector (validated to sum to 1 within
// 1e-9; zero entries contribute zero).
double shannon_discrete(std::span<const double> p);
double tsallis_discrete(std::span<const double> p, double q);
double renyi_discrete(std::span<const double> p, double eta);
double discrete_entropy(std::span<const double> p, const EntropyMeasure& measure);

// Sample-based estimators from log-densities of sampled actions.
double shannon_estimate(std::span<const double> log_probs);
double tsallis_estimate(std::span<const double> log_probs, double q);

/// Diagonal Gaussian over an m-dimensional internal action.
struct DiagonalGaussian {
    Vec mean;
    Vec log_std;

    int dim() const { return static_cast<int>(mean.size()); }
};

double gaussian_log_density(const DiagonalGaussian& g, std::span<const double> u);

// Closed-form Shannon differential entropy: (m/2)(log 2*pi + 1) + sum log sigma_j.
double gaussian_shannon_entropy(const DiagonalGaussian& g);

// Exact integral of pi^eta for a diagonal Gaussian (eta > 1):
// (sqrt(2*pi))^{m(1-eta)} * eta^{-m/2} * prod_j sigma_j^{1-eta}.
double renyi_gaussian_integral(const DiagonalGaussian& g, double eta);

// Closed-form Renyi entropy of the diagonal Gaussian (eta > 1):
// (m/2) log 2*pi - m/(2(1-eta)) log eta + sum_j log sigma_j.
double renyi_gaussian_entropy(const DiagonalGaussian& g, double eta);

// Sampled estimate of the integral of pi^eta for the tanh-squashed policy:
// mean over samples of mu(u_i)^{eta-1} * prod_j (1 - tanh^2 u_{ij})^{1-eta},
// with u_i drawn from the internal Gaussian. The Jacobian factor is clamped
// at 1e-12 before the (1-eta) power; saturated samples would otherwise
// produce infinities.
double renyi_squashed_integral_estimate(const DiagonalGaussian& g,
                                        const std::vector<Vec>& u_samples,
                                        double eta);

}  // namespace maxent

#endif
