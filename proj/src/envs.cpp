#include "maxent/envs.hpp"

#include <algorithm>
#include <cmath>

namespace maxent {

Vec Env::clamp_action(std::span<const double> action, int m) {
    check(static_cast<int>(action.size()) == m, "step: action dimension mismatch");
    check(all_finite(action), "step: non-finite action");
    Vec a(action.begin(), action.end());
    for (double& v : a) {
        if (v < -1.0 || v > 1.0) {
            v = std::clamp(v, -1.0, 1.0);
            ++clamp_count_;
        }
    }
    return a;
}

namespace {

// Planar point mass under force control. State (px, py, vx, vy); the goal is
// the origin. Episodes start at rest on the unit circle (uniform angle), so
// every start is the same distance from the goal and episode returns compare
// cleanly across policies. Explicit Euler at dt = 0.05 with linear drag;
// position and velocity are clamped to keep every reachable state (and thus
// the reward) bounded. Fixed 200-step horizon: a competent policy parks at
// the goal and pays almost nothing for the remaining steps.
class PointMass2D final : public Env {
public:
    const EnvSpec& spec() const override {
        static const EnvSpec s{"pointmass2d", 4, 2, 200, 3.0,
                               "planar point mass, force control, reward "
                               "-distance - 0.01*|a|^2, goal at origin, starts "
                               "at rest on the unit circle"};
        return s;
    }

    Vec reset(Rng& rng) override {
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        state_ = {std::cos(angle), std::sin(angle), 0.0, 0.0};
        steps_in_episode_ = 0;
        return state_;
    }

    StepResult step(std::span<const double> action) override {
        Vec a = clamp_action(action, 2);
        constexpr double dt = 0.05, gain = 4.0, drag = 1.0;
        for (int j = 0; j < 2; ++j) {
            state_[2 + j] += dt * (gain * a[j] - drag * state_[2 + j]);
            state_[2 + j] = std::clamp(state_[2 + j], -3.0, 3.0);
            state_[j] += dt * state_[2 + j];
            state_[j] = std::clamp(state_[j], -1.5, 1.5);
        }
        ++steps_in_episode_;
        const double dist = std::hypot(state_[0], state_[1]);
        const double reward = -dist - 0.01 * (a[0] * a[0] + a[1] * a[1]);
        const bool done = steps_in_episode_ >= spec().max_episode_steps;
        return {state_, reward, done};
    }

    std::unique_ptr<Env> fresh() const override { return std::make_unique<PointMass2D>(); }

private:
    Vec state_{0.0, 0.0, 0.0, 0.0};
};

// Torque-limited pendulum swing-up. Internal state (theta, theta_dot) with
// theta = 0 pointing up; observation (cos theta, sin theta, theta_dot).
// Torque = 2 * action. Semi-implicit Euler at dt = 0.05, theta_dot clamped
// to [-8, 8]; reward -(theta^2 + 0.1*theta_dot^2 + 0.001*torque^2) with
// theta wrapped to [-pi, pi). Episodes run a fixed 200 steps.
class Pendulum1D final : public Env {
public:
    const EnvSpec& spec() const override {
        static const EnvSpec s{"pendulum1d", 3, 1, 200, 16.5,
                               "pendulum swing-up, torque control via a in [-1,1], "
                               "reward -(theta^2 + 0.1*thdot^2 + 0.001*torque^2)"};
        return s;
    }

    Vec reset(Rng& rng) override {
        theta_ = rng.uniform(-M_PI, M_PI);
        theta_dot_ = rng.uniform(-1.0, 1.0);
        steps_in_episode_ = 0;
        return observe();
    }

    StepResult step(std::span<const double> action) override {
        Vec a = clamp_action(action, 1);
        constexpr double dt = 0.05, g = 10.0, l = 1.0, mass = 1.0;
        const double torque = 2.0 * a[0];
        const double accel =
            (3.0 * g / (2.0 * l)) * std::sin(theta_) + 3.0 / (mass * l * l) * torque;
        theta_dot_ = std::clamp(theta_dot_ + accel * dt, -8.0, 8.0);
        theta_ = wrap_angle(theta_ + theta_dot_ * dt);
        ++steps_in_episode_;
        const double reward =
            -(theta_ * theta_ + 0.1 * theta_dot_ * theta_dot_ + 0.001 * torque * torque);
        const bool done = steps_in_episode_ >= spec().max_episode_steps;
        return {observe(), reward, done};
    }

    std::unique_ptr<Env> fresh() const override { return std::make_unique<Pendulum1D>(); }

private:
    static double wrap_angle(double x) {
        x = std::fmod(x + M_PI, 2.0 * M_PI);
        if (x < 0.0) x += 2.0 * M_PI;
        return x - M_PI;
    }

    Vec observe() const { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

    double theta_ = 0.0;
    double theta_dot_ = 0.0;
};

// One-step bandit with a constant state. The reward has a wide local optimum
// at a = -0.6 and a narrow global optimum at a = 0.7, so wide Gaussian
// exploration settles on the local peak unless the narrow one is found.
class ContinuousBandit final : public Env {
public:
    const EnvSpec& spec() const override {
        static const EnvSpec s{"bandit", 1, 1, 1, 1.01,
                               "one-step bandit, r(a) = 0.8*exp(-(a+0.6)^2/0.08) "
                               "+ 1.0*exp(-(a-0.7)^2/0.002)"};
        return s;
    }

    Vec reset(Rng&) override {
        steps_in_episode_ = 0;
        return {0.0};
    }

    StepResult step(std::span<const double> action) override {
        Vec a = clamp_action(action, 1);
        ++steps_in_episode_;
        return {{0.0}, reward(a[0]), true};
    }

    std::unique_ptr<Env> fresh() const override {
        return std::make_unique<ContinuousBandit>();
    }

    static double reward(double a) {
        const double d1 = a + 0.6, d2 = a - 0.7;
        return 0.8 * std::exp(-d1 * d1 / 0.08) + 1.0 * std::exp(-d2 * d2 / 0.002);
    }
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "pointmass2d") return std::make_unique<PointMass2D>();
    if (name == "pendulum1d") return std::make_unique<Pendulum1D>();
    if (name == "bandit") return std::make_unique<ContinuousBandit>();
    throw std::invalid_argument("unknown environment: " + name);
}

std::vector<EnvSpec> env_registry() {
    return {make_env("pointmass2d")->spec(), make_env("pendulum1d")->spec(),
            make_env("bandit")->spec()};
}

}  // namespace maxent
