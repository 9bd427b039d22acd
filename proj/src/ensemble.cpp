#include "maxent/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace maxent {

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

}  // namespace

std::vector<EntropyMeasure> ensemble_member_measures(const TrainerConfig& cfg) {
    check(cfg.entropy.kind != EntropyKind::Shannon,
          "ensemble: members are trained by TAC or RAC; pick tsallis or renyi");
    std::vector<double> indices = cfg.ensemble_indices;
    if (indices.empty()) indices = {1.5, 2.0, 2.5};
    std::vector<EntropyMeasure> measures;
    measures.reserve(cfg.ensemble_size);
    for (int i = 0; i < cfg.ensemble_size; ++i) {
        const double ix = indices[i % indices.size()];
        measures.push_back(cfg.entropy.kind == EntropyKind::Tsallis
                               ? EntropyMeasure::tsallis(ix)
                               : EntropyMeasure::renyi(ix));
    }
    return measures;
}

EnsembleAgent make_ensemble(int state_dim, int action_dim, const TrainerConfig& cfg) {
    EnsembleAgent ens;
    const auto measures = ensemble_member_measures(cfg);
    for (int i = 0; i < cfg.ensemble_size; ++i) {
        Rng init(derive_seed(agent_stream_seed(cfg.seed, i), "init"));
        ens.members.push_back(make_agent(state_dim, action_dim, cfg, measures[i], init));
    }
    Rng qpsi_init(derive_seed(cfg.seed, "qpsi-init"));
    std::vector<int> q_sizes{state_dim + action_dim};
    q_sizes.insert(q_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    q_sizes.push_back(1);
    ens.q_psi = Mlp::random(q_sizes, qpsi_init);
    ens.q_psi_target = ens.q_psi;
    ens.q_psi_opt = AdamState::for_param_count(ens.q_psi.param_count(), cfg.lr_q, "q_psi");
    return ens;
}

int select_member(int ensemble_size, Rng& rng) {
    check(ensemble_size >= 1, "select_member: ensemble size must be >= 1");
    return rng.uniform_int(ensemble_size);
}

QPsiLossResult q_psi_loss(const std::vector<Transition>& batch,
                          const EnsembleAgent& ensemble, const TrainerConfig& cfg,
                          Rng& rng) {
    check(!batch.empty(), "q_psi_loss: empty batch");
    const std::uint64_t call_seed = rng.next_u64();
    const double n = static_cast<double>(batch.size());
    const int L = ensemble.size();

    QPsiLossResult out;
    out.grad.assign(ensemble.q_psi.param_count(), 0.0);
    for (const Transition& t : batch) {
        double bootstrap = 0.0;
        if (!t.done) {
            // One action from each member's policy at s'; the draw stream is
            // forked per (record, member), so member i's sample does not
            // depend on the ensemble size.
            double best = -std::numeric_limits<double>::infinity();
            const std::uint64_t rec_seed = derive_seed(call_seed, "psi", transition_hash(t));
            for (int i = 0; i < L; ++i) {
                Rng sub(derive_seed(rec_seed, "member", static_cast<std::uint64_t>(i)));
                PolicySample ps = sample(ensemble.members[i].policy, t.s_next, sub);
                const double qv =
                    forward(ensemble.q_psi_target, concat_sa(t.s_next, ps.action))[0];
                best = std::max(best, qv);
            }
            bootstrap = cfg.gamma * best;
        }
        const Vec x = concat_sa(t.s, t.a);
        const double q = forward(ensemble.q_psi, x)[0];
        const double resid = q - t.r - bootstrap;
        out.loss += 0.5 * resid * resid / n;
        const Vec upstream{resid / n};
        add_scaled(out.grad, backward(ensemble.q_psi, x, upstream).param_grads, 1.0);
    }
    return out;
}

Vec test_action(const EnsembleAgent& ensemble, std::span<const double> s) {
    check(ensemble.size() >= 1, "test_action: empty ensemble");
    Vec best_action = mean_action(ensemble.members[0].policy, s);
    double best_q = forward(ensemble.q_psi, concat_sa(s, best_action))[0];
    for (int i = 1; i < ensemble.size(); ++i) {
        Vec a = mean_action(ensemble.members[i].policy, s);
        const double q = forward(ensemble.q_psi, concat_sa(s, a))[0];
        if (q > best_q) {
            best_q = q;
            best_action = std::move(a);
        }
    }
    return best_action;
}

std::pair<double, double> evaluate_ensemble(Env& env, const EnsembleAgent& ensemble,
                                            int episodes, Rng& rng) {
    Vec returns(episodes, 0.0);
    for (int e = 0; e < episodes; ++e) {
        Vec s = env.reset(rng);
        while (true) {
            StepResult sr = env.step(test_action(ensemble, s));
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

std::pair<double, double> evaluate_member(Env& env, const EnsembleAgent& ensemble,
                                          int member, int episodes, Rng& rng) {
    check(member >= 0 && member < ensemble.size(), "evaluate_member: bad index");
    return evaluate_policy(env, ensemble.members[member], episodes, rng);
}

EnsembleTrainResult train_ensemble(Env& env, const TrainerConfig& cfg) {
    cfg.validate();
    const std::uint64_t master = cfg.seed;
    Rng env_rng(derive_seed(master, "env"));
    Rng behavior_rng(derive_seed(master, "behavior"));
    Rng buffer_rng(derive_seed(master, "buffer"));
    Rng eval_rng(derive_seed(master, "eval"));
    Rng select_rng(derive_seed(master, "select"));
    Rng qpsi_rng(derive_seed(master, "qpsi-learn"));

    const EnvSpec& sp = env.spec();
    const int L = cfg.ensemble_size;
    EnsembleTrainResult res;
    res.agent = make_ensemble(sp.state_dim, sp.action_dim, cfg);
    if (cfg.total_steps == 0) return res;

    std::vector<Rng> learn_rngs;
    learn_rngs.reserve(L);
    for (int i = 0; i < L; ++i)
        learn_rngs.emplace_back(derive_seed(agent_stream_seed(master, i), "learn"));

    ReplayBuffer buffer(cfg.buffer_capacity);
    Vec s = env.reset(env_rng);
    res.agent.active_member = select_member(L, select_rng);

    Vec acc_member_q(L, 0.0);
    double acc_v = 0.0, acc_q = 0.0, acc_h = 0.0, acc_psi = 0.0;
    long acc_n = 0;

    for (long step = 1; step <= cfg.total_steps; ++step) {
        Vec a;
        if (step <= cfg.warmup_steps) {
            a.resize(sp.action_dim);
            for (double& v : a) v = behavior_rng.uniform(-1.0, 1.0);
        } else {
            a = sample(res.agent.members[res.agent.active_member].policy, s,
                       behavior_rng)
                    .action;
        }
        StepResult sr = env.step(a);
        buffer.push({s, a, sr.state, sr.reward * cfg.reward_scale, sr.done});
        if (sr.done) {
            s = env.reset(env_rng);
            res.agent.active_member = select_member(L, select_rng);
        } else {
            s = sr.state;
        }

        if (step > cfg.warmup_steps) {
            for (int g = 0; g < cfg.gradient_steps; ++g) {
                auto batch = buffer.sample(cfg.batch_size, buffer_rng);
                for (int i = 0; i < L; ++i) {
                    UpdateDiagnostics d =
                        update_agent(res.agent.members[i], batch, cfg, learn_rngs[i]);
                    if (!std::isfinite(d.v_loss) || !std::isfinite(d.q_loss))
                        throw TrainingDiverged("ensemble member " + std::to_string(i) +
                                                   " diverged at step " +
                                                   std::to_string(step),
                                               "");
                    acc_member_q[i] += d.q_loss;
                    acc_v += d.v_loss / L;
                    acc_q += d.q_loss / L;
                    acc_h += d.entropy_estimate / L;
                }
                QPsiLossResult psi = q_psi_loss(batch, res.agent, cfg, qpsi_rng);
                adam_step(res.agent.q_psi.params(), psi.grad, res.agent.q_psi_opt);
                soft_update(res.agent.q_psi_target, res.agent.q_psi, cfg.tau);
                if (!std::isfinite(psi.loss))
                    throw TrainingDiverged(
                        "q_psi diverged at step " + std::to_string(step), "");
                acc_psi += psi.loss;
                ++acc_n;
            }
        }

        if (step % cfg.eval_interval == 0) {
            auto eval_env = env.fresh();
            auto [mean, sd] =
                evaluate_ensemble(*eval_env, res.agent, cfg.eval_episodes, eval_rng);
            EnsembleEvalPoint pt;
            pt.step = step;
            pt.return_mean = mean;
            pt.return_std = sd;
            pt.member_q_loss.assign(L, 0.0);
            if (acc_n > 0) {
                pt.v_loss = acc_v / acc_n;
                pt.q_loss = acc_q / acc_n;
                pt.entropy_estimate = acc_h / acc_n;
                pt.q_psi_loss = acc_psi / acc_n;
                for (int i = 0; i < L; ++i) pt.member_q_loss[i] = acc_member_q[i] / acc_n;
            }
            res.curve.push_back(std::move(pt));
            acc_v = acc_q = acc_h = acc_psi = 0.0;
            std::fill(acc_member_q.begin(), acc_member_q.end(), 0.0);
            acc_n = 0;
        }
    }
    return res;
}

}  // namespace maxent
