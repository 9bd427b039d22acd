#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "maxent/learner.hpp"
#include "test_util.hpp"

using namespace maxent;

namespace {

TrainerConfig small_config(EntropyMeasure measure, double alpha = 0.5) {
    TrainerConfig cfg;
    cfg.entropy = measure;
    cfg.alpha = alpha;
    cfg.hidden = {6, 6};
    cfg.k_samples = 3;
    cfg.batch_size = 4;
    cfg.warmup_steps = 32;
    cfg.eval_episodes = 2;
    return cfg;
}

AgentState small_agent(const TrainerConfig& cfg, std::uint64_t seed, int state_dim = 3,
                       int action_dim = 2) {
    Rng init(seed);
    return make_agent(state_dim, action_dim, cfg, cfg.entropy, init);
}

std::vector<Transition> small_batch(std::uint64_t seed, int n, int state_dim = 3,
                                    int action_dim = 2) {
    Rng rng(seed);
    std::vector<Transition> batch;
    for (int i = 0; i < n; ++i) {
        Transition t;
        t.s.resize(state_dim);
        t.a.resize(action_dim);
        t.s_next.resize(state_dim);
        for (auto& v : t.s) v = rng.uniform(-1, 1);
        for (auto& v : t.a) v = rng.uniform(-0.9, 0.9);
        for (auto& v : t.s_next) v = rng.uniform(-1, 1);
        t.r = rng.uniform(-2, 2);
        t.done = rng.uniform() < 0.2;
        batch.push_back(std::move(t));
    }
    return batch;
}

void set_constant_output(Mlp& net, double value) {
    std::fill(net.params().begin(), net.params().end(), 0.0);
    net.bias(net.num_layers() - 1, 0) = value;
}

}  // namespace

TEST_CASE("replay buffer: FIFO eviction and bounded size") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 5; ++i) {
        Transition t;
        t.r = i;
        buf.push(t);
        CHECK(buf.size() <= 3);
    }
    // 0 and 1 were evicted; oldest remaining is 2.
    CHECK(buf.at(0).r == 2.0);
    CHECK(buf.at(1).r == 3.0);
    CHECK(buf.at(2).r == 4.0);
}

TEST_CASE("replay buffer: sampling with replacement returns exactly the batch") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 5; ++i) {
        Transition t;
        t.r = i;
        buf.push(t);
    }
    Rng rng(3);
    auto batch = buf.sample(100, rng);
    CHECK(batch.size() == 100);
    std::set<double> unique;
    for (const auto& t : batch) unique.insert(t.r);
    CHECK(unique.size() <= buf.size());  // never more unique items than held
    CHECK_THROWS(ReplayBuffer(2).sample(1, rng));
}

TEST_CASE("v_loss: zero nets and alpha 0 give zero loss and gradient") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon(), 0.0);
    AgentState agent = small_agent(cfg, 1);
    std::fill(agent.v_net.params().begin(), agent.v_net.params().end(), 0.0);
    std::fill(agent.q_net.params().begin(), agent.q_net.params().end(), 0.0);
    Rng rng(2);
    auto res = v_loss(small_batch(5, 6), agent, cfg, rng);
    CHECK(res.loss == 0.0);
    for (double g : res.grad) CHECK(g == 0.0);
}

TEST_CASE("v_loss gradient matches finite differences over theta") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainerConfig cfg = small_config(EntropyMeasure::tsallis(2.0), 0.7);
        AgentState agent = small_agent(cfg, seed);
        auto batch = small_batch(seed + 50, 3);

        Rng rng(1234);
        auto res = v_loss(batch, agent, cfg, rng);
        auto fd = test::finite_difference_filtered(
            [&](const Vec& params) {
                AgentState probe = agent;
                probe.v_net.params() = params;
                Rng r(1234);  // same call seed => same sampled targets
                return v_loss(batch, probe, cfg, r).loss;
            },
            agent.v_net.params());
        CHECK(fd.num_valid >= static_cast<int>(0.9 * fd.grad.size()));
        CHECK(test::max_rel_error_filtered(res.grad, fd) <= 1e-4);
    }
}

TEST_CASE("v_loss is invariant under batch permutation") {
    TrainerConfig cfg = small_config(EntropyMeasure::renyi(2.0), 0.4);
    AgentState agent = small_agent(cfg, 7);
    auto batch = small_batch(70, 6);
    auto reversed = batch;
    std::reverse(reversed.begin(), reversed.end());

    Rng r1(9), r2(9);
    const double a = v_loss(batch, agent, cfg, r1).loss;
    const double b = v_loss(reversed, agent, cfg, r2).loss;
    // Per-record streams make the targets identical; only the summation
    // order differs.
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
    CHECK_THROWS(v_loss({}, agent, cfg, r1));
}

TEST_CASE("q_loss: myopic fit is exact when Q outputs the stored reward") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon());
    cfg.gamma = 0.0;
    AgentState agent = small_agent(cfg, 3);
    auto batch = small_batch(31, 4);
    for (auto& t : batch) t.r = 1.25;
    set_constant_output(agent.q_net, 1.25);
    CHECK(q_loss(batch, agent, cfg).loss == doctest::Approx(0.0));
}

TEST_CASE("q_loss: terminal transitions bootstrap from the reward alone") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon());
    cfg.gamma = 0.99;
    AgentState agent = small_agent(cfg, 4);
    // Non-zero target net; a terminal transition must ignore it.
    set_constant_output(agent.v_target, 100.0);
    set_constant_output(agent.q_net, 2.0);
    std::vector<Transition> batch = small_batch(41, 1);
    batch[0].r = 2.0;
    batch[0].done = true;
    CHECK(q_loss(batch, agent, cfg).loss == doctest::Approx(0.0));
    batch[0].done = false;
    CHECK(q_loss(batch, agent, cfg).loss > 1.0);
}

TEST_CASE("q_loss gradient matches finite differences over omega") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainerConfig cfg = small_config(EntropyMeasure::shannon());
        AgentState agent = small_agent(cfg, seed + 10);
        auto batch = small_batch(seed + 90, 4);
        auto res = q_loss(batch, agent, cfg);
        auto fd = test::finite_difference_filtered(
            [&](const Vec& params) {
                AgentState probe = agent;
                probe.q_net.params() = params;
                return q_loss(batch, probe, cfg).loss;
            },
            agent.q_net.params());
        CHECK(fd.num_valid >= static_cast<int>(0.9 * fd.grad.size()));
        CHECK(test::max_rel_error_filtered(res.grad, fd) <= 1e-4);
    }
}

TEST_CASE("actor gradient is exactly zero when A is identically zero") {
    TrainerConfig cfg = small_config(EntropyMeasure::tsallis(2.0), 0.0);
    AgentState agent = small_agent(cfg, 5);
    std::fill(agent.v_net.params().begin(), agent.v_net.params().end(), 0.0);
    std::fill(agent.q_net.params().begin(), agent.q_net.params().end(), 0.0);
    Rng rng(6);
    auto res = actor_grad_tsallis(small_batch(61, 4), agent, cfg, rng);
    for (double g : res.grad) CHECK(g == 0.0);
}

TEST_CASE("actor gradient has zero mean for a constant advantage") {
    // Q = 1 and V = 0 everywhere: the weight is the constant 1, so the
    // expected update is E[score] = 0.
    TrainerConfig cfg = small_config(EntropyMeasure::shannon(), 0.0);
    cfg.k_samples = 4;
    AgentState agent = small_agent(cfg, 8, 2, 1);
    std::fill(agent.v_net.params().begin(), agent.v_net.params().end(), 0.0);
    set_constant_output(agent.q_net, 1.0);
    auto batch = small_batch(81, 1, 2, 1);

    Rng rng(17);
    const std::size_t dim = agent.policy.net.param_count();
    const int calls = 25000;
    Vec sum(dim, 0.0), sum_sq(dim, 0.0);
    for (int c = 0; c < calls; ++c) {
        auto res = actor_grad_shannon(batch, agent, cfg, rng);
        for (std::size_t d = 0; d < dim; ++d) {
            sum[d] += res.grad[d];
            sum_sq[d] += res.grad[d] * res.grad[d];
        }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        const double mean = sum[d] / calls;
        const double var = std::max(0.0, sum_sq[d] / calls - mean * mean);
        const double se = std::sqrt(var / calls);
        CHECK(std::abs(mean) <= std::max(3.5 * se, 1e-12));
    }
}

TEST_CASE("tsallis actor gradient at q -> 1 coincides with the Shannon one") {
    TrainerConfig cfg_t = small_config(EntropyMeasure::tsallis(1.0 + 1e-6), 0.8);
    TrainerConfig cfg_s = small_config(EntropyMeasure::shannon(), 0.8);
    AgentState agent_t = small_agent(cfg_t, 12);
    AgentState agent_s = agent_t;
    agent_t.entropy = cfg_t.entropy;
    agent_s.entropy = cfg_s.entropy;
    auto batch = small_batch(121, 5);

    Rng r1(3), r2(3);  // identical sample streams
    auto gt = actor_grad_tsallis(batch, agent_t, cfg_t, r1);
    auto gs = actor_grad_shannon(batch, agent_s, cfg_s, r2);
    CHECK(test::max_abs_diff(gt.grad, gs.grad) <= 1e-5);
}

TEST_CASE("all actor variants coincide at alpha = 0 on identical streams") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon(), 0.0);
    AgentState base = small_agent(cfg, 14);
    auto batch = small_batch(141, 4);

    AgentState tsallis_agent = base, renyi_agent = base;
    tsallis_agent.entropy = EntropyMeasure::tsallis(2.0);
    renyi_agent.entropy = EntropyMeasure::renyi(1.5);

    Rng r1(5), r2(5), r3(5);
    auto gs = actor_grad_shannon(batch, base, cfg, r1);
    auto gt = actor_grad_tsallis(batch, tsallis_agent, cfg, r2);
    auto gr = actor_grad_renyi(batch, renyi_agent, cfg, r3);
    CHECK(gs.grad == gt.grad);
    CHECK(gs.grad == gr.grad);
    CHECK(gr.skipped_states == 0);
}

TEST_CASE("actor dispatch rejects mismatched kinds") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon());
    AgentState agent = small_agent(cfg, 15);
    auto batch = small_batch(151, 2);
    Rng rng(1);
    CHECK_THROWS(actor_grad_tsallis(batch, agent, cfg, rng));
    CHECK_THROWS(actor_grad_renyi(batch, agent, cfg, rng));
}

// Single state, single sample: the estimator reduces to
// score * (A - alpha q qlog pi), checked against a by-hand recomputation.
TEST_CASE("tsallis actor formula on one state and one sample") {
    TrainerConfig cfg = small_config(EntropyMeasure::tsallis(2.0), 0.6);
    cfg.k_samples = 1;
    AgentState agent = small_agent(cfg, 16);
    auto batch = small_batch(161, 1);
    const Transition& t = batch[0];

    Rng rng(777);
    auto res = actor_grad_tsallis(batch, agent, cfg, rng);

    // Reconstruct the same per-record stream the estimator used.
    const std::uint64_t call_seed = Rng(777).next_u64();
    Rng sub(derive_seed(call_seed, "pi", transition_hash(t)));
    GaussianHead head = policy_head(agent.policy, t.s);
    Vec u(2), a(2);
    for (int j = 0; j < 2; ++j) {
        u[j] = head.dist.mean[j] + std::exp(head.dist.log_std[j]) * sub.normal();
        a[j] = std::clamp(std::tanh(u[j]), -1.0 + 1e-9, 1.0 - 1e-9);
    }
    const double lp = squashed_log_density(head.dist, u);
    Vec sa(t.s);
    sa.insert(sa.end(), a.begin(), a.end());
    const double adv = forward(agent.q_net, sa)[0] - forward(agent.v_net, t.s)[0];
    const double w = adv - cfg.alpha * 2.0 * (std::exp(lp) - 1.0);
    const Vec score = score_grad(agent.policy, t.s, u);
    Vec expected(score.size());
    for (std::size_t i = 0; i < score.size(); ++i) expected[i] = w * score[i];
    CHECK(test::max_abs_diff(res.grad, expected) <= 1e-12);
}

// Frozen 1-D policy: the estimator's mean must match the quadrature gradient
// of J(phi) = E_pi[Q] + alpha H^eta(pi), with H^eta evaluated through the
// squashed-density integral.
TEST_CASE("renyi actor gradient matches a quadrature oracle") {
    TrainerConfig cfg = small_config(EntropyMeasure::renyi(2.0), 0.5);
    cfg.k_samples = 20000;
    AgentState agent = small_agent(cfg, 20, 1, 1);
    Rng policy_init(2020);
    agent.policy.net = Mlp::random({1, 2}, policy_init);  // bare linear head
    agent.policy.action_dim = 1;
    agent.policy_opt = AdamState::for_param_count(agent.policy.net.param_count(),
                                                  cfg.lr_policy, "policy");
    auto batch = small_batch(201, 1, 1, 1);
    const Transition& t = batch[0];
    const double eta = 2.0;

    auto q_of_action = [&](double a) {
        Vec sa(t.s);
        sa.push_back(a);
        return forward(agent.q_net, sa)[0];
    };
    auto objective = [&](const Vec& params) {
        SquashedGaussianPolicy probe = agent.policy;
        probe.net.params() = params;
        GaussianHead head = policy_head(probe, t.s);
        const double eq = test::simpson(
            [&](double u) {
                const double tt = std::tanh(u);
                const double dens = std::exp(gaussian_log_density(head.dist, Vec{u}));
                return dens * q_of_action(std::clamp(tt, -1.0 + 1e-9, 1.0 - 1e-9));
            },
            -10.0, 10.0, 4000);
        const double integral = test::simpson(
            [&](double u) {
                const double tt = std::tanh(u);
                const double log_mu = gaussian_log_density(head.dist, Vec{u});
                return std::exp(eta * log_mu) * std::pow(1.0 - tt * tt, 1.0 - eta);
            },
            -10.0, 10.0, 4000);
        return eq + cfg.alpha * std::log(integral) / (1.0 - eta);
    };
    const Vec true_grad =
        test::finite_difference(objective, agent.policy.net.params(), 1e-5);

    Rng rng(2021);
    const int calls = 60;
    const std::size_t dim = agent.policy.net.param_count();
    Vec sum(dim, 0.0), sum_sq(dim, 0.0);
    for (int c = 0; c < calls; ++c) {
        auto res = actor_grad_renyi(batch, agent, cfg, rng);
        REQUIRE(res.skipped_states == 0);
        for (std::size_t d = 0; d < dim; ++d) {
            sum[d] += res.grad[d];
            sum_sq[d] += res.grad[d] * res.grad[d];
        }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        const double mean = sum[d] / calls;
        const double var = std::max(0.0, sum_sq[d] / calls - mean * mean);
        const double se = std::sqrt(var / calls);
        CHECK(std::abs(mean - true_grad[d]) <= std::max(3.0 * se, 2e-4));
    }
}

// The batched head-upstream trick inside the actor estimator must equal the
// naive sum of per-sample score gradients.
TEST_CASE("actor estimator equals the explicit score-gradient sum") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon(), 0.9);
    cfg.k_samples = 5;
    AgentState agent = small_agent(cfg, 22);
    auto batch = small_batch(221, 1);
    const Transition& t = batch[0];

    Rng rng(31);
    auto res = actor_grad_shannon(batch, agent, cfg, rng);

    const std::uint64_t call_seed = Rng(31).next_u64();
    Rng sub(derive_seed(call_seed, "pi", transition_hash(t)));
    GaussianHead head = policy_head(agent.policy, t.s);
    Vec expected(agent.policy.net.param_count(), 0.0);
    const double v_s = forward(agent.v_net, t.s)[0];
    for (int i = 0; i < cfg.k_samples; ++i) {
        Vec u(2), a(2);
        for (int j = 0; j < 2; ++j) {
            u[j] = head.dist.mean[j] + std::exp(head.dist.log_std[j]) * sub.normal();
            a[j] = std::clamp(std::tanh(u[j]), -1.0 + 1e-9, 1.0 - 1e-9);
        }
        const double lp = squashed_log_density(head.dist, u);
        Vec sa(t.s);
        sa.insert(sa.end(), a.begin(), a.end());
        const double w = forward(agent.q_net, sa)[0] - v_s - cfg.alpha * lp;
        const Vec score = score_grad(agent.policy, t.s, u);
        for (std::size_t d = 0; d < expected.size(); ++d)
            expected[d] += w * score[d] / cfg.k_samples;
    }
    CHECK(test::max_rel_error(res.grad, expected) <= 1e-12);
}

TEST_CASE("zero total steps returns the initial agent and an empty curve") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon());
    cfg.total_steps = 0;
    auto env = make_env("bandit");
    TrainResult res = train(*env, cfg);
    CHECK(res.curve.empty());
    Rng init(derive_seed(agent_stream_seed(cfg.seed, 0), "init"));
    AgentState fresh = make_agent(1, 1, cfg, cfg.entropy, init);
    CHECK(res.agent.policy.net.params() == fresh.policy.net.params());
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    TrainerConfig cfg = small_config(EntropyMeasure::tsallis(2.0), 0.3);
    cfg.total_steps = 120;
    cfg.warmup_steps = 40;
    cfg.eval_interval = 40;
    cfg.batch_size = 8;
    cfg.seed = 99;
    auto env1 = make_env("pointmass2d");
    auto env2 = make_env("pointmass2d");
    TrainResult a = train(*env1, cfg);
    TrainResult b = train(*env2, cfg);
    REQUIRE(a.curve.size() == b.curve.size());
    REQUIRE(a.curve.size() == 3);
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].return_mean == b.curve[i].return_mean);
        CHECK(a.curve[i].v_loss == b.curve[i].v_loss);
    }
    CHECK(a.agent.policy.net.params() == b.agent.policy.net.params());
    CHECK(a.agent.q_net.params() == b.agent.q_net.params());
}

TEST_CASE("sac and tac(q -> 1) produce matching updates on identical streams") {
    TrainerConfig cfg_s = small_config(EntropyMeasure::shannon(), 0.8);
    TrainerConfig cfg_t = small_config(EntropyMeasure::tsallis(1.0 + 1e-6), 0.8);
    AgentState sac_agent = small_agent(cfg_s, 5);
    AgentState tac_agent = sac_agent;
    tac_agent.entropy = cfg_t.entropy;
    auto batch = small_batch(51, 8);

    Rng r1(4), r2(4);
    for (int step = 0; step < 10; ++step) {
        update_agent(sac_agent, batch, cfg_s, r1);
        update_agent(tac_agent, batch, cfg_t, r2);
    }
    CHECK(test::max_abs_diff(sac_agent.policy.net.params(),
                             tac_agent.policy.net.params()) <= 1e-5);
    CHECK(test::max_abs_diff(sac_agent.v_net.params(), tac_agent.v_net.params()) <=
          1e-5);
}

TEST_CASE("diverging training aborts with a diagnostic snapshot") {
    TrainerConfig cfg = small_config(EntropyMeasure::shannon(), 0.5);
    cfg.total_steps = 50;
    cfg.warmup_steps = 5;
    cfg.batch_size = 4;
    cfg.lr_v = cfg.lr_q = cfg.lr_policy = 1e120;  // guaranteed blow-up
    cfg.diagnostics_dir = "divergence_test_out";
    auto env = make_env("bandit");
    CHECK_THROWS_AS(train(*env, cfg), TrainingDiverged);
    CHECK(std::filesystem::exists("divergence_test_out/diverged_snapshot.json"));
    std::filesystem::remove_all("divergence_test_out");
}

TEST_CASE("random baseline summarizes uniform rollouts") {
    auto env = make_env("pointmass2d");
    Rng rng(77);
    Baseline b = random_policy_baseline(*env, 50, rng);
    CHECK(b.mean < 0.0);  // distance cost is always negative
    CHECK(b.stddev > 0.0);
}
