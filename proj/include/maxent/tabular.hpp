#ifndef MAXENT_TABULAR_HPP
#define MAXENT_TABULAR_HPP

#include <functional>
#include <string>
#include <vector>

#include "maxent/common.hpp"
#include "maxent/entropy.hpp"

#include <nlohmann/json_fwd.hpp>

namespace maxent {

/// Finite MDP with an exact transition kernel. P is flattened row-major as
/// [s][a][s'], rewards as [s][a].
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transitions;
    std::vector<double> rewards;
    double gamma = 0.99;

    double p(int s, int a, int s2) const {
        return transitions[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    double r(int s, int a) const {
        return rewards[static_cast<std::size_t>(s) * num_actions + a];
    }

    void validate() const;  // rows sum to 1 within 1e-12, gamma in [0,1)

    static TabularMdp random(int num_states, int num_actions, double gamma, Rng& rng);
    static TabularMdp from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Row-stochastic policy matrix, [s][a] flattened.
struct TabularPolicy {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs;

    double p(int s, int a) const {
        return probs[static_cast<std::size_t>(s) * num_actions + a];
    }
    std::span<const double> row(int s) const {
        return {probs.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }

    static TabularPolicy uniform(int num_states, int num_actions);
    void validate() const;  // rows on the simplex within 1e-12
};

using QTable = std::vector<double>;  // [s][a] flattened

// Entropy-augmented Bellman backup:
// Q'(s,a) = r(s,a) + gamma * sum_{s'} P(s,a,s') * (sum_b pi(s',b) Q(s',b)
//           + alpha * H(pi(s',.))).
QTable bellman_backup(const TabularMdp& mdp, const TabularPolicy& policy,
                      const QTable& q, const EntropyMeasure& measure, double alpha);

struct EvaluateResult {
    QTable q;
    int iterations = 0;
};

// Fixed point of the backup, within tol of Q^pi in sup norm.
EvaluateResult evaluate(const TabularMdp& mdp, const TabularPolicy& policy,
                        const EntropyMeasure& measure, double alpha, double tol);

// Per-state maximization of sum_a pi_a q_a + alpha * H(pi) over the simplex
// by exponentiated-gradient ascent, optionally warm-started from init.
// Throws (with the residual) if the stationarity residual has not reached
// tol within max_iters.
Vec max_entropy_distribution(std::span<const double> q_row, const EntropyMeasure& measure,
                             double alpha, double tol, int max_iters = 10000,
                             std::span<const double> init = {});

TabularPolicy improve(const TabularMdp& mdp, const QTable& q,
                      const EntropyMeasure& measure, double alpha, double tol,
                      const TabularPolicy* warm_start = nullptr);

struct PolicyIterationResult {
    TabularPolicy policy;
    QTable q;
    struct AuditEntry {
        int iteration;
        double q_change_sup;     // sup |Q_{i+1} - Q_i|
        double min_improvement;  // min over (s,a) of Q_{i+1} - Q_i
    };
    std::vector<AuditEntry> audit;
    int iterations = 0;
};

// Alternates evaluate/improve until successive Q tables differ by less than
// tol. A monotonicity violation beyond 10*tol is treated as a theory bug and
// raises. test_hook, when set, may perturb the improved policy each
// iteration (fault injection for the verifier).
PolicyIterationResult policy_iteration(
    const TabularMdp& mdp, const EntropyMeasure& measure, double alpha, double tol,
    const std::function<void(int, TabularPolicy&)>& test_hook = nullptr);

struct TabularVerifyOptions {
    int num_mdps = 100;
    int max_states = 8;
    int max_actions = 4;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    double monotone_tol = 1e-6;
    bool include_gamma_zero = true;
    bool inject_fault = false;  // corrupt one improvement step and expect detection
};

struct TabularVerifyReport {
    struct Property {
        std::string name;
        bool passed;
        std::string detail;
    };
    std::vector<Property> properties;
    bool all_passed() const;
};

// Property suite behind `verify-tabular`: contraction, monotone improvement,
// convergence, and the Shannon softmax-vs-maximization equivalence.
TabularVerifyReport verify_tabular(const TabularVerifyOptions& opts);

}  // namespace maxent

#endif
