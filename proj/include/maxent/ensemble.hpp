#ifndef MAXENT_ENSEMBLE_HPP
#define MAXENT_ENSEMBLE_HPP

#include "maxent/learner.hpp"

namespace maxent {

/// L independently parameterized agents trained from one shared replay
/// buffer, plus the entropy-free action-selection network Q_psi with its own
/// target copy. One member is chosen uniformly per episode to drive
/// behaviour; Q_psi arbitrates between member recommendations at test time.
struct EnsembleAgent {
    std::vector<AgentState> members;
    Mlp q_psi;
    Mlp q_psi_target;
    AdamState q_psi_opt;
    int active_member = 0;

    int size() const { return static_cast<int>(members.size()); }
};

// Member entropic indices: cfg.ensemble_indices when set, otherwise cycling
// through {1.5, 2.0, 2.5}. The kind (Tsallis or Renyi) comes from cfg.entropy.
std::vector<EntropyMeasure> ensemble_member_measures(const TrainerConfig& cfg);

EnsembleAgent make_ensemble(int state_dim, int action_dim, const TrainerConfig& cfg);

// Uniform over {0, ..., ensemble_size - 1}; fixed for a whole episode.
int select_member(int ensemble_size, Rng& rng);

struct QPsiLossResult {
    double loss = 0.0;
    Vec grad;  // d loss / d psi
};

// Entropy-free Bellman residue for Q_psi: the bootstrap target maxes the
// target copy over one action sampled from each member's policy at s'.
QPsiLossResult q_psi_loss(const std::vector<Transition>& batch,
                          const EnsembleAgent& ensemble, const TrainerConfig& cfg,
                          Rng& rng);

// Test-time action: each member recommends its deterministic mean action and
// Q_psi picks the highest-value one; ties break toward the lowest index.
Vec test_action(const EnsembleAgent& ensemble, std::span<const double> s);

struct EnsembleEvalPoint {
    long step = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double v_loss = 0.0;            // averaged across members
    double q_loss = 0.0;            // averaged across members
    double entropy_estimate = 0.0;  // averaged across members
    Vec member_q_loss;              // one entry per member
    double q_psi_loss = 0.0;
};

struct EnsembleTrainResult {
    std::vector<EnsembleEvalPoint> curve;
    EnsembleAgent agent;
};

// Bootstrap-exploration training: per episode pick a member, act with its
// stochastic policy, and update every member plus Q_psi on a shared batch
// each step. Evaluation rollouts use test_action.
EnsembleTrainResult train_ensemble(Env& env, const TrainerConfig& cfg);

// Member-policy evaluation inside a trained ensemble (deterministic rollouts).
std::pair<double, double> evaluate_member(Env& env, const EnsembleAgent& ensemble,
                                          int member, int episodes, Rng& rng);

// Deterministic test_action rollouts; unscaled returns.
std::pair<double, double> evaluate_ensemble(Env& env, const EnsembleAgent& ensemble,
                                            int episodes, Rng& rng);

}  // namespace maxent

#endif
