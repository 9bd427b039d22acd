#ifndef MAXENT_ENVS_HPP
#define MAXENT_ENVS_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "maxent/common.hpp"

namespace maxent {

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    int max_episode_steps = 0;
    double reward_bound = 0.0;  // |r| never exceeds this
    std::string description;
};

struct StepResult {
    Vec state;
    double reward = 0.0;
    bool done = false;
};

/// Deterministic, seedable toy continuous-control environment. Actions are
/// normalized to [-1,1]^m; environments with other physical ranges rescale
/// internally. Out-of-box actions are clamped and counted.
class Env {
public:
    virtual ~Env() = default;
    virtual const EnvSpec& spec() const = 0;
    virtual Vec reset(Rng& rng) = 0;
    virtual StepResult step(std::span<const double> action) = 0;

    // Fresh instance of the same environment (e.g. for evaluation rollouts).
    virtual std::unique_ptr<Env> fresh() const = 0;

    long clamp_count() const { return clamp_count_; }

protected:
    // Validates and clamps an action into [-1,1]^m.
    Vec clamp_action(std::span<const double> action, int m);

    long clamp_count_ = 0;
    int steps_in_episode_ = 0;
};

std::unique_ptr<Env> make_env(const std::string& name);
std::vector<EnvSpec> env_registry();

}  // namespace maxent

#endif
