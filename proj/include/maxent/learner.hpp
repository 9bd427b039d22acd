#ifndef MAXENT_LEARNER_HPP
#define MAXENT_LEARNER_HPP

#include <string>
#include <vector>

#include "maxent/entropy.hpp"
#include "maxent/envs.hpp"
#include "maxent/mlp.hpp"
#include "maxent/policy.hpp"
#include "maxent/replay.hpp"

namespace maxent {

struct TrainerConfig {
    EntropyMeasure entropy;     // selects SAC / TAC / RAC behaviour
    double alpha = 1.0;         // entropy weight
    double reward_scale = 3.0;  // applied to rewards entering the buffer
    double gamma = 0.99;
    double tau = 0.01;          // target-network smoothing
    int k_samples = 9;          // fresh policy samples per state in the estimators
    int batch_size = 64;
    int gradient_steps = 1;     // updates per environment step
    double lr_v = 3e-4;
    double lr_q = 3e-4;
    double lr_policy = 3e-4;
    std::vector<int> hidden = {128, 128};
    std::size_t buffer_capacity = 1000000;
    int warmup_steps = 1000;    // uniform-random action steps before learning
    long total_steps = 30000;
    int eval_interval = 1000;
    int eval_episodes = 10;
    std::uint64_t seed = 0;
    int ensemble_size = 6;                  // EAC only
    std::vector<double> ensemble_indices;   // EAC only; empty -> cycle {1.5, 2.0, 2.5}
    std::string diagnostics_dir;            // divergence snapshots land here if set

    void validate() const;
};

/// One agent: policy pi_phi, value net V_theta with target copy, Q net
/// Q_omega, and their optimizers. The entropy measure is carried per agent so
/// ensemble members can differ.
struct AgentState {
    SquashedGaussianPolicy policy;
    Mlp v_net;
    Mlp v_target;
    Mlp q_net;
    AdamState policy_opt;
    AdamState v_opt;
    AdamState q_opt;
    EntropyMeasure entropy;
};

AgentState make_agent(int state_dim, int action_dim, const TrainerConfig& cfg,
                      const EntropyMeasure& measure, Rng& init_rng);

struct VLossResult {
    double loss = 0.0;
    Vec grad;             // d loss / d theta
    double mean_entropy = 0.0;  // average sampled entropy estimate over the batch
};

// Squared value-fit error: V_theta(s) regressed onto E_b Q_omega(s,b) +
// alpha * H(pi), both estimated from k fresh policy samples per state.
VLossResult v_loss(const std::vector<Transition>& batch, const AgentState& agent,
                   const TrainerConfig& cfg, Rng& rng);

struct QLossResult {
    double loss = 0.0;
    Vec grad;  // d loss / d omega
};

// Bellman residue for Q_omega with the target value network bootstrap:
// target = r + gamma * (1 - done) * V_target(s').
QLossResult q_loss(const std::vector<Transition>& batch, const AgentState& agent,
                   const TrainerConfig& cfg);

struct ActorGradResult {
    Vec grad;               // ascent direction for phi
    long skipped_states = 0;  // states dropped due to a degenerate integral estimate
};

ActorGradResult actor_grad_shannon(const std::vector<Transition>& batch,
                                   const AgentState& agent, const TrainerConfig& cfg,
                                   Rng& rng);
ActorGradResult actor_grad_tsallis(const std::vector<Transition>& batch,
                                   const AgentState& agent, const TrainerConfig& cfg,
                                   Rng& rng);
ActorGradResult actor_grad_renyi(const std::vector<Transition>& batch,
                                 const AgentState& agent, const TrainerConfig& cfg,
                                 Rng& rng);

// Dispatch on the agent's entropy measure.
ActorGradResult actor_gradient(const std::vector<Transition>& batch,
                               const AgentState& agent, const TrainerConfig& cfg,
                               Rng& rng);

struct UpdateDiagnostics {
    double v_loss = 0.0;
    double q_loss = 0.0;
    double entropy_estimate = 0.0;
    long renyi_skipped = 0;
};

// One full learning step on a batch: V descent, Q descent, policy ascent,
// then the target-network soft update.
UpdateDiagnostics update_agent(AgentState& agent, const std::vector<Transition>& batch,
                               const TrainerConfig& cfg, Rng& learn_rng);

struct EvalPoint {
    long step = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double v_loss = 0.0;
    double q_loss = 0.0;
    double entropy_estimate = 0.0;
};

struct TrainResult {
    std::vector<EvalPoint> curve;
    AgentState agent;
    long env_steps = 0;
};

struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& msg, std::string snapshot)
        : std::runtime_error(msg), snapshot_path(std::move(snapshot)) {}
    std::string snapshot_path;
};

// Concurrent actor-critic training of a single agent. Deterministic for a
// fixed seed. Evaluation rollouts use the deterministic mean action on a
// fresh environment instance and report unscaled returns.
TrainResult train(Env& env, const TrainerConfig& cfg);

struct Baseline {
    double mean = 0.0;
    double stddev = 0.0;
};

// Mean and standard deviation of episode returns under uniform-random actions.
Baseline random_policy_baseline(Env& env, int episodes, Rng& rng);

// Deterministic-policy evaluation: mean/std of unscaled returns.
std::pair<double, double> evaluate_policy(Env& env, const AgentState& agent,
                                          int episodes, Rng& rng);

// Derived stream seeds; member index 0 is also the single-agent layout so an
// ensemble of one reproduces a standalone run bit for bit.
std::uint64_t agent_stream_seed(std::uint64_t master, int member_index);

}  // namespace maxent

#endif
