#include "maxent/learner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace maxent {

void TrainerConfig::validate() const {
    check(alpha >= 0.0, "config: alpha must be >= 0");
    check(reward_scale > 0.0, "config: reward_scale must be > 0");
    check(gamma >= 0.0 && gamma < 1.0, "config: gamma must lie in [0,1)");
    check(tau > 0.0 && tau <= 1.0, "config: tau must lie in (0,1]");
    check(k_samples >= 1, "config: k_samples must be >= 1");
    check(batch_size >= 1, "config: batch_size must be >= 1");
    check(gradient_steps >= 1, "config: gradient_steps must be >= 1");
    check(lr_v > 0.0 && lr_q > 0.0 && lr_policy > 0.0, "config: learning rates must be > 0");
    check(buffer_capacity >= 1, "config: buffer_capacity must be >= 1");
    check(warmup_steps >= 0, "config: warmup_steps must be >= 0");
    check(total_steps >= 0, "config: total_steps must be >= 0");
    check(eval_interval >= 1, "config: eval_interval must be >= 1");
    check(eval_episodes >= 1, "config: eval_episodes must be >= 1");
    check(ensemble_size >= 1, "config: ensemble_size must be >= 1");
    for (int h : hidden) check(h >= 1, "config: hidden sizes must be positive");
    for (double ix : ensemble_indices)
        check(ix >= 1.0, "config: ensemble indices must be >= 1");
}

std::uint64_t agent_stream_seed(std::uint64_t master, int member_index) {
    return derive_seed(master, "agent", static_cast<std::uint64_t>(member_index));
}

AgentState make_agent(int state_dim, int action_dim, const TrainerConfig& cfg,
                      const EntropyMeasure& measure, Rng& init_rng) {
    AgentState ag;
    ag.policy = SquashedGaussianPolicy::make(state_dim, action_dim, cfg.hidden, init_rng);

    std::vector<int> v_sizes{state_dim};
    v_sizes.insert(v_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    v_sizes.push_back(1);
    ag.v_net = Mlp::random(v_sizes, init_rng);
    ag.v_target = ag.v_net;

    std::vector<int> q_sizes{state_dim + action_dim};
    q_sizes.insert(q_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    q_sizes.push_back(1);
    ag.q_net = Mlp::random(q_sizes, init_rng);

    ag.policy_opt = AdamState::for_param_count(ag.policy.net.param_count(), cfg.lr_policy, "policy");
    ag.v_opt = AdamState::for_param_count(ag.v_net.param_count(), cfg.lr_v, "v_net");
    ag.q_opt = AdamState::for_param_count(ag.q_net.param_count(), cfg.lr_q, "q_net");
    ag.entropy = measure;
    return ag;
}

namespace {

Vec concat_sa(std::span<const double> s, std::span<const double> a) {
    Vec x;
    x.reserve(s.size() + a.size());
    x.insert(x.end(), s.begin(), s.end());
    x.insert(x.end(), a.begin(), a.end());
    return x;
}

void add_scaled(Vec& acc, const Vec& inc, double c) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * inc[i];
}

// k policy samples at one state, drawn from a per-record stream.
struct StateSamples {
    GaussianHead head;
    std::vector<Vec> u;
    std::vector<Vec> a;
    Vec log_pi;
};

constexpr double kSquashMargin = 1e-9;

StateSamples draw_state_samples(const SquashedGaussianPolicy& policy,
                                std::span<const double> s, int k, Rng& sub) {
    StateSamples out{policy_head(policy, s), {}, {}, {}};
    const int m = policy.action_dim;
    out.u.resize(k, Vec(m));
    out.a.resize(k, Vec(m));
    out.log_pi.resize(k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < m; ++j) {
            const double sigma = std::exp(out.head.dist.log_std[j]);
            out.u[i][j] = out.head.dist.mean[j] + sigma * sub.normal();
            out.a[i][j] = std::clamp(std::tanh(out.u[i][j]), -1.0 + kSquashMargin,
                                     1.0 - kSquashMargin);
        }
        out.log_pi[i] = squashed_log_density(out.head.dist, out.u[i]);
    }
    return out;
}

double entropy_estimate_from_samples(const EntropyMeasure& measure,
                                     const StateSamples& samples) {
    switch (measure.kind) {
        case EntropyKind::Shannon:
            return shannon_estimate(samples.log_pi);
        case EntropyKind::Tsallis:
            return tsallis_estimate(samples.log_pi, measure.index);
        case EntropyKind::Renyi: {
            const double integral = renyi_squashed_integral_estimate(
                samples.head.dist, samples.u, measure.index);
            return std::log(std::max(integral, 1e-300)) / (1.0 - measure.index);
        }
    }
    throw std::logic_error("entropy_estimate_from_samples: bad kind");
}

double scalar_forward(const Mlp& net, std::span<const double> x) {
    return forward(net, x)[0];
}

}  // namespace

VLossResult v_loss(const std::vector<Transition>& batch, const AgentState& agent,
                   const TrainerConfig& cfg, Rng& rng) {
    check(!batch.empty(), "v_loss: empty batch");
    const std::uint64_t call_seed = rng.next_u64();
    const double n = static_cast<double>(batch.size());

    VLossResult out;
    out.grad.assign(agent.v_net.param_count(), 0.0);
    for (const Transition& t : batch) {
        Rng sub(derive_seed(call_seed, "v", transition_hash(t)));
        StateSamples samples = draw_state_samples(agent.policy, t.s, cfg.k_samples, sub);

        double eq = 0.0;
        for (int i = 0; i < cfg.k_samples; ++i)
            eq += scalar_forward(agent.q_net, concat_sa(t.s, samples.a[i]));
        eq /= static_cast<double>(cfg.k_samples);

        const double h = entropy_estimate_from_samples(agent.entropy, samples);
        const double target = eq + cfg.alpha * h;
        const double v = scalar_forward(agent.v_net, t.s);
        const double resid = v - target;

        out.loss += 0.5 * resid * resid / n;
        out.mean_entropy += h / n;
        const Vec upstream{resid / n};
        add_scaled(out.grad, backward(agent.v_net, t.s, upstream).param_grads, 1.0);
    }
    return out;
}

QLossResult q_loss(const std::vector<Transition>& batch, const AgentState& agent,
                   const TrainerConfig& cfg) {
    check(!batch.empty(), "q_loss: empty batch");
    const double n = static_cast<double>(batch.size());
    QLossResult out;
    out.grad.assign(agent.q_net.param_count(), 0.0);
    for (const Transition& t : batch) {
        const Vec x = concat_sa(t.s, t.a);
        const double q = scalar_forward(agent.q_net, x);
        const double bootstrap =
            t.done ? 0.0 : cfg.gamma * scalar_forward(agent.v_target, t.s_next);
        const double resid = q - t.r - bootstrap;
        out.loss += 0.5 * resid * resid / n;
        const Vec upstream{resid / n};
        add_scaled(out.grad, backward(agent.q_net, x, upstream).param_grads, 1.0);
    }
    return out;
}

namespace {

ActorGradResult actor_grad_impl(const std::vector<Transition>& batch,
                                const AgentState& agent, const TrainerConfig& cfg,
                                Rng& rng) {
    check(!batch.empty(), "actor gradient: empty batch");
    const std::uint64_t call_seed = rng.next_u64();
    const double n = static_cast<double>(batch.size());
    const double k = static_cast<double>(cfg.k_samples);
    const EntropyMeasure& measure = agent.entropy;

    ActorGradResult out;
    out.grad.assign(agent.policy.net.param_count(), 0.0);
    for (const Transition& t : batch) {
        Rng sub(derive_seed(call_seed, "pi", transition_hash(t)));
        StateSamples samples = draw_state_samples(agent.policy, t.s, cfg.k_samples, sub);
        const double v_s = scalar_forward(agent.v_net, t.s);

        double renyi_integral = 0.0;
        if (measure.kind == EntropyKind::Renyi) {
            renyi_integral = renyi_squashed_integral_estimate(samples.head.dist,
                                                              samples.u, measure.index);
            if (!(renyi_integral > 0.0) || !std::isfinite(renyi_integral)) {
                ++out.skipped_states;
                continue;
            }
        }

        // Per-state estimate (1/k) sum_i w_i * grad_phi log pi(s, a_i). All k
        // samples share the forward pass at s, so the whole sum reduces to one
        // backward call with the weighted head upstreams accumulated.
        Vec head_up(2 * agent.policy.action_dim, 0.0);
        for (int i = 0; i < cfg.k_samples; ++i) {
            const double adv =
                scalar_forward(agent.q_net, concat_sa(t.s, samples.a[i])) - v_s;
            const double lp = samples.log_pi[i];
            double w = 0.0;
            switch (measure.kind) {
                case EntropyKind::Shannon:
                    w = adv - cfg.alpha * lp;
                    break;
                case EntropyKind::Tsallis: {
                    const double q = measure.index;
                    const double qlog = std::expm1((q - 1.0) * lp) / (q - 1.0);
                    w = adv - cfg.alpha * q * qlog;
                    break;
                }
                case EntropyKind::Renyi: {
                    const double eta = measure.index;
                    const double pow_term = std::exp((eta - 1.0) * lp);
                    w = adv + cfg.alpha * eta * pow_term /
                                  ((1.0 - eta) * renyi_integral);
                    break;
                }
            }
            add_scaled(head_up,
                       score_head_upstream(agent.policy, samples.head, samples.u[i]),
                       w / (k * n));
        }
        add_scaled(out.grad, backward(agent.policy.net, t.s, head_up).param_grads, 1.0);
    }
    return out;
}

}  // namespace

ActorGradResult actor_grad_shannon(const std::vector<Transition>& batch,
                                   const AgentState& agent, const TrainerConfig& cfg,
                                   Rng& rng) {
    check(agent.entropy.kind == EntropyKind::Shannon,
          "actor_grad_shannon: agent entropy is not Shannon");
    return actor_grad_impl(batch, agent, cfg, rng);
}

ActorGradResult actor_grad_tsallis(const std::vector<Transition>& batch,
                                   const AgentState& agent, const TrainerConfig& cfg,
                                   Rng& rng) {
    check(agent.entropy.kind == EntropyKind::Tsallis,
          "actor_grad_tsallis: agent entropy is not Tsallis");
    return actor_grad_impl(batch, agent, cfg, rng);
}

ActorGradResult actor_grad_renyi(const std::vector<Transition>& batch,
                                 const AgentState& agent, const TrainerConfig& cfg,
                                 Rng& rng) {
    check(agent.entropy.kind == EntropyKind::Renyi,
          "actor_grad_renyi: agent entropy is not Renyi");
    return actor_grad_impl(batch, agent, cfg, rng);
}

ActorGradResult actor_gradient(const std::vector<Transition>& batch,
                               const AgentState& agent, const TrainerConfig& cfg,
                               Rng& rng) {
    return actor_grad_impl(batch, agent, cfg, rng);
}

UpdateDiagnostics update_agent(AgentState& agent, const std::vector<Transition>& batch,
                               const TrainerConfig& cfg, Rng& learn_rng) {
    UpdateDiagnostics diag;

    VLossResult v = v_loss(batch, agent, cfg, learn_rng);
    adam_step(agent.v_net.params(), v.grad, agent.v_opt);

    QLossResult q = q_loss(batch, agent, cfg);
    adam_step(agent.q_net.params(), q.grad, agent.q_opt);

    ActorGradResult a = actor_gradient(batch, agent, cfg, learn_rng);
    Vec descent(a.grad.size());
    for (std::size_t i = 0; i < a.grad.size(); ++i) descent[i] = -a.grad[i];
    adam_step(agent.policy.net.params(), descent, agent.policy_opt);

    soft_update(agent.v_target, agent.v_net, cfg.tau);

    diag.v_loss = v.loss;
    diag.q_loss = q.loss;
    diag.entropy_estimate = v.mean_entropy;
    diag.renyi_skipped = a.skipped_states;
    return diag;
}

std::pair<double, double> evaluate_policy(Env& env, const AgentState& agent,
                                          int episodes, Rng& rng) {
    Vec returns(episodes, 0.0);
    for (int e = 0; e < episodes; ++e) {
        Vec s = env.reset(rng);
        while (true) {
            StepResult sr = env.step(mean_action(agent.policy, s));
            returns[e] += sr.reward;
            if (sr.done) break;
            s = sr.state;
        }
    }
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= episodes;
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    return {mean, std::sqrt(var / episodes)};
}

Baseline random_policy_baseline(Env& env, int episodes, Rng& rng) {
    const int m = env.spec().action_dim;
    Vec returns(episodes, 0.0);
    for (int e = 0; e < episodes; ++e) {
        env.reset(rng);
        while (true) {
            Vec a(m);
            for (double& v : a) v = rng.uniform(-1.0, 1.0);
            StepResult sr = env.step(a);
            returns[e] += sr.reward;
            if (sr.done) break;
        }
    }
    Baseline b;
    for (double r : returns) b.mean += r;
    b.mean /= episodes;
    double var = 0.0;
    for (double r : returns) var += (r - b.mean) * (r - b.mean);
    b.stddev = std::sqrt(var / episodes);
    return b;
}

namespace {

void dump_divergence_snapshot(const AgentState& agent, const TrainerConfig& cfg,
                              long step, std::string& path_out) {
    if (cfg.diagnostics_dir.empty()) return;
    std::filesystem::create_directories(cfg.diagnostics_dir);
    nlohmann::json j{{"step", step},
                     {"policy", policy_to_json(agent.policy)},
                     {"v_net", mlp_to_json(agent.v_net)},
                     {"v_target", mlp_to_json(agent.v_target)},
                     {"q_net", mlp_to_json(agent.q_net)}};
    path_out = cfg.diagnostics_dir + "/diverged_snapshot.json";
    std::ofstream(path_out) << j.dump(2) << '\n';
}

}  // namespace

TrainResult train(Env& env, const TrainerConfig& cfg) {
    cfg.validate();
    const std::uint64_t master = cfg.seed;
    Rng env_rng(derive_seed(master, "env"));
    Rng behavior_rng(derive_seed(master, "behavior"));
    Rng buffer_rng(derive_seed(master, "buffer"));
    Rng eval_rng(derive_seed(master, "eval"));
    const std::uint64_t agent_seed = agent_stream_seed(master, 0);
    Rng init_rng(derive_seed(agent_seed, "init"));
    Rng learn_rng(derive_seed(agent_seed, "learn"));

    const EnvSpec& sp = env.spec();
    TrainResult res;
    res.agent = make_agent(sp.state_dim, sp.action_dim, cfg, cfg.entropy, init_rng);
    if (cfg.total_steps == 0) return res;

    ReplayBuffer buffer(cfg.buffer_capacity);
    Vec s = env.reset(env_rng);
    double acc_v = 0.0, acc_q = 0.0, acc_h = 0.0;
    long acc_n = 0;

    for (long step = 1; step <= cfg.total_steps; ++step) {
        Vec a;
        if (step <= cfg.warmup_steps) {
            a.resize(sp.action_dim);
            for (double& v : a) v = behavior_rng.uniform(-1.0, 1.0);
        } else {
            a = sample(res.agent.policy, s, behavior_rng).action;
        }
        StepResult sr = env.step(a);
        buffer.push({s, a, sr.state, sr.reward * cfg.reward_scale, sr.done});
        s = sr.done ? env.reset(env_rng) : sr.state;

        if (step > cfg.warmup_steps) {
            for (int g = 0; g < cfg.gradient_steps; ++g) {
                auto batch = buffer.sample(cfg.batch_size, buffer_rng);
                UpdateDiagnostics d;
                try {
                    d = update_agent(res.agent, batch, cfg, learn_rng);
                    check(std::isfinite(d.v_loss) && std::isfinite(d.q_loss),
                          "non-finite loss");
                } catch (const std::exception& e) {
                    std::string snap;
                    dump_divergence_snapshot(res.agent, cfg, step, snap);
                    throw TrainingDiverged("training diverged at step " +
                                               std::to_string(step) + ": " + e.what(),
                                           snap);
                }
                acc_v += d.v_loss;
                acc_q += d.q_loss;
                acc_h += d.entropy_estimate;
                ++acc_n;
            }
        }

        if (step % cfg.eval_interval == 0) {
            auto eval_env = env.fresh();
            auto [mean, sd] =
                evaluate_policy(*eval_env, res.agent, cfg.eval_episodes, eval_rng);
            EvalPoint pt{step, mean, sd, 0.0, 0.0, 0.0};
            if (acc_n > 0) {
                pt.v_loss = acc_v / acc_n;
                pt.q_loss = acc_q / acc_n;
                pt.entropy_estimate = acc_h / acc_n;
            }
            res.curve.push_back(pt);
            acc_v = acc_q = acc_h = 0.0;
            acc_n = 0;
        }
    }
    res.env_steps = cfg.total_steps;
    return res;
}

}  // namespace maxent
