#ifndef MAXENT_POLICY_HPP
#define MAXENT_POLICY_HPP

#include <span>

#include "maxent/common.hpp"
#include "maxent/entropy.hpp"
#include "maxent/mlp.hpp"

namespace maxent {

/// Stochastic policy: an MLP maps the state to (mean, log_std) of an
/// m-dimensional diagonal Gaussian over the internal action u; the emitted
/// action is a = tanh(u). log_std is clamped to [log_std_min, log_std_max]
/// and tanh outputs are kept 1e-9 away from +/-1 so the log-Jacobian stays
/// finite.
struct SquashedGaussianPolicy {
    Mlp net;  // state_dim -> 2 * action_dim (means first, then log_stds)
    int action_dim = 0;
    double log_std_min = -5.0;
    double log_std_max = 2.0;

    static SquashedGaussianPolicy make(int state_dim, int action_dim,
                                       const std::vector<int>& hidden, Rng& rng);
};

/// Gaussian head at a given state. raw_log_std keeps the unclamped network
/// output so gradients can be masked where the clamp is active.
struct GaussianHead {
    DiagonalGaussian dist;
    Vec raw_log_std;
};

GaussianHead policy_head(const SquashedGaussianPolicy& policy, std::span<const double> s);

struct PolicySample {
    Vec action;    // tanh(u), strictly inside (-1, 1)^m
    Vec internal;  // u
    double log_prob;
};

PolicySample sample(const SquashedGaussianPolicy& policy, std::span<const double> s, Rng& rng);

// Exact log-density of a = tanh(u) under the policy at state s:
// log mu(s, u) - sum_j log(1 - tanh^2 u_j).
double log_prob(const SquashedGaussianPolicy& policy, std::span<const double> s,
                std::span<const double> u);

// Same change-of-variables density evaluated from a precomputed head.
double squashed_log_density(const DiagonalGaussian& g, std::span<const double> u);

// Deterministic test-time recommendation: tanh(mean(s)).
Vec mean_action(const SquashedGaussianPolicy& policy, std::span<const double> s);

// d log pi / d (mean_j, log_std_j) at fixed u, with zeros where the log_std
// clamp is active. Length 2m, matching the network's output layout.
Vec score_head_upstream(const SquashedGaussianPolicy& policy, const GaussianHead& head,
                        std::span<const double> u);

// Exact gradient of log pi w.r.t. all policy parameters (flat layout).
Vec score_grad(const SquashedGaussianPolicy& policy, std::span<const double> s,
               std::span<const double> u);

nlohmann::json policy_to_json(const SquashedGaussianPolicy& policy);
SquashedGaussianPolicy policy_from_json(const nlohmann::json& j);

}  // namespace maxent

#endif
