#include "maxent/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace maxent {

void TabularMdp::validate() const {
    check(num_states >= 1 && num_actions >= 1, "mdp: dimensions must be positive");
    check(gamma >= 0.0 && gamma < 1.0, "mdp: gamma must lie in [0,1)");
    check(transitions.size() ==
              static_cast<std::size_t>(num_states) * num_actions * num_states,
          "mdp: transition tensor size mismatch");
    check(rewards.size() == static_cast<std::size_t>(num_states) * num_actions,
          "mdp: reward matrix size mismatch");
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < num_states; ++s2) {
                const double v = p(s, a, s2);
                check(std::isfinite(v) && v >= 0.0, "mdp: invalid transition probability");
                sum += v;
            }
            check(std::abs(sum - 1.0) <= 1e-12, "mdp: transition row does not sum to 1");
        }
    check(all_finite(rewards), "mdp: non-finite reward");
}

TabularMdp TabularMdp::random(int num_states, int num_actions, double gamma, Rng& rng) {
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.gamma = gamma;
    mdp.transitions.resize(static_cast<std::size_t>(num_states) * num_actions * num_states);
    mdp.rewards.resize(static_cast<std::size_t>(num_states) * num_actions);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
            // Dirichlet(1) row via normalized exponentials.
            double sum = 0.0;
            Vec row(num_states);
            for (int s2 = 0; s2 < num_states; ++s2) {
                row[s2] = -std::log(1.0 - rng.uniform());
                sum += row[s2];
            }
            double acc = 0.0;
            for (int s2 = 0; s2 < num_states; ++s2) {
                double v = row[s2] / sum;
                if (s2 == num_states - 1) v = 1.0 - acc;  // exact row sum
                acc += v;
                mdp.transitions[(static_cast<std::size_t>(s) * num_actions + a) * num_states +
                                s2] = v;
            }
            mdp.rewards[static_cast<std::size_t>(s) * num_actions + a] =
                rng.uniform(-1.0, 1.0);
        }
    mdp.validate();
    return mdp;
}

TabularMdp TabularMdp::from_json(const nlohmann::json& j) {
    TabularMdp mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.gamma = j.at("gamma").get<double>();
    mdp.transitions = j.at("transitions").get<std::vector<double>>();
    mdp.rewards = j.at("rewards").get<std::vector<double>>();
    mdp.validate();
    return mdp;
}

nlohmann::json TabularMdp::to_json() const {
    return nlohmann::json{{"num_states", num_states},
                          {"num_actions", num_actions},
                          {"gamma", gamma},
                          {"transitions", transitions},
                          {"rewards", rewards}};
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
    TabularPolicy pi;
    pi.num_states = num_states;
    pi.num_actions = num_actions;
    pi.probs.assign(static_cast<std::size_t>(num_states) * num_actions,
                    1.0 / num_actions);
    return pi;
}

void TabularPolicy::validate() const {
    check(probs.size() == static_cast<std::size_t>(num_states) * num_actions,
          "policy: size mismatch");
    for (int s = 0; s < num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            const double v = p(s, a);
            check(std::isfinite(v) && v >= 0.0, "policy: invalid probability");
            sum += v;
        }
        check(std::abs(sum - 1.0) <= 1e-12, "policy: row does not sum to 1");
    }
}

QTable bellman_backup(const TabularMdp& mdp, const TabularPolicy& policy,
                      const QTable& q, const EntropyMeasure& measure, double alpha) {
    const int S = mdp.num_states, A = mdp.num_actions;
    check(q.size() == static_cast<std::size_t>(S) * A, "bellman_backup: Q size mismatch");
    policy.validate();

    // State value under pi plus the exact entropy bonus, per successor state.
    Vec v(S);
    for (int s = 0; s < S; ++s) {
        double ev = 0.0;
        for (int a = 0; a < A; ++a) ev += policy.p(s, a) * q[static_cast<std::size_t>(s) * A + a];
        v[s] = ev + alpha * discrete_entropy(policy.row(s), measure);
    }

    QTable out(q.size());
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double future = 0.0;
            for (int s2 = 0; s2 < S; ++s2) future += mdp.p(s, a, s2) * v[s2];
            out[static_cast<std::size_t>(s) * A + a] = mdp.r(s, a) + mdp.gamma * future;
        }
    return out;
}

EvaluateResult evaluate(const TabularMdp& mdp, const TabularPolicy& policy,
                        const EntropyMeasure& measure, double alpha, double tol) {
    check(tol > 0.0, "evaluate: tol must be positive");
    EvaluateResult res;
    res.q.assign(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions, 0.0);
    // gamma-contraction: stop once the per-sweep change bounds the distance
    // to the fixed point by tol.
    const double stop =
        mdp.gamma > 0.0 ? tol * (1.0 - mdp.gamma) / mdp.gamma : tol;
    for (int it = 1; it <= 1000000; ++it) {
        QTable next = bellman_backup(mdp, policy, res.q, measure, alpha);
        double diff = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i)
            diff = std::max(diff, std::abs(next[i] - res.q[i]));
        res.q = std::move(next);
        res.iterations = it;
        if (diff <= stop) break;
    }
    return res;
}

namespace {

double simplex_objective(std::span<const double> p, std::span<const double> q_row,
                         const EntropyMeasure& measure, double alpha) {
    double obj = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) obj += p[a] * q_row[a];
    return obj + alpha * discrete_entropy(p, measure);
}

Vec simplex_gradient(std::span<const double> p, std::span<const double> q_row,
                     const EntropyMeasure& measure, double alpha) {
    const std::size_t A = p.size();
    Vec g(A);
    switch (measure.kind) {
        case EntropyKind::Shannon:
            for (std::size_t a = 0; a < A; ++a)
                g[a] = q_row[a] - alpha * (std::log(std::max(p[a], 1e-300)) + 1.0);
            break;
        case EntropyKind::Tsallis: {
            const double q = measure.index;
            for (std::size_t a = 0; a < A; ++a)
                g[a] = q_row[a] +
                       alpha * (1.0 - q * std::pow(p[a], q - 1.0)) / (q - 1.0);
            break;
        }
        case EntropyKind::Renyi: {
            const double eta = measure.index;
            double sum_pow = 0.0;
            for (std::size_t a = 0; a < A; ++a) sum_pow += std::pow(p[a], eta);
            sum_pow = std::max(sum_pow, 1e-300);
            for (std::size_t a = 0; a < A; ++a)
                g[a] = q_row[a] + alpha * eta * std::pow(p[a], eta - 1.0) /
                                      ((1.0 - eta) * sum_pow);
            break;
        }
    }
    return g;
}

}  // namespace

namespace {

// KKT stationarity residual on the simplex: mass-weighted gradient spread
// plus any positive violation g_a > gbar (which a zero-mass action could
// otherwise hide).
double kkt_residual(std::span<const double> p, std::span<const double> g) {
    double gbar = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) gbar += p[a] * g[a];
    double res = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        res = std::max(res, p[a] * std::abs(g[a] - gbar));
        res = std::max(res, g[a] - gbar);
    }
    return res;
}

Vec exp_gradient_step(std::span<const double> p, std::span<const double> g,
                      double step) {
    const std::size_t A = p.size();
    double gmax = g[0];
    for (double v : g) gmax = std::max(gmax, v);
    Vec cand(A);
    double z = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
        cand[a] = p[a] * std::exp(step * (g[a] - gmax));
        z += cand[a];
    }
    for (std::size_t a = 0; a < A; ++a) cand[a] = std::max(cand[a] / z, 1e-300);
    return cand;
}

}  // namespace

Vec max_entropy_distribution(std::span<const double> q_row, const EntropyMeasure& measure,
                             double alpha, double tol, int max_iters,
                             std::span<const double> init) {
    check(tol > 0.0, "max_entropy_distribution: tol must be positive");
    const std::size_t A = q_row.size();
    check(A >= 1, "max_entropy_distribution: empty action set");
    Vec p(A, 1.0 / static_cast<double>(A));
    if (!init.empty()) {
        check(init.size() == A, "max_entropy_distribution: init size mismatch");
        // Lift hard zeros in the warm start; mass recovers from 1e-12 within
        // a few doubling steps, while a 1e-300 floor would take hundreds.
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            p[a] = std::max(init[a], 1e-12);
            z += p[a];
        }
        for (double& v : p) v /= z;
    }
    if (A == 1) return p;

    double f = simplex_objective(p, q_row, measure, alpha);
    Vec g = simplex_gradient(p, q_row, measure, alpha);
    double residual = kkt_residual(p, g);
    int it = 0;

    // Two alternating phases. Armijo ascent is globally monotone in the
    // objective but blind once gains shrink under roundoff; the residual
    // polish reads far below that floor but refuses transients the
    // objective would happily cross. Each round runs both.
    for (int round = 0; round < 4 && it < max_iters && residual > tol; ++round) {
        double step = 1.0;
        int stalled = 0;
        for (; it < max_iters && residual > tol && stalled < 50; ++it) {
            const double f_before = f;
            while (true) {
                Vec cand = exp_gradient_step(p, g, step);
                double predicted = 0.0;
                for (std::size_t a = 0; a < A; ++a) predicted += g[a] * (cand[a] - p[a]);
                const double fc = simplex_objective(cand, q_row, measure, alpha);
                if (fc >= f + 0.1 * predicted - 1e-14 * (1.0 + std::abs(f)) ||
                    step < 1e-12) {
                    p = std::move(cand);
                    f = fc;
                    break;
                }
                step *= 0.5;
            }
            step = std::min(step * 2.0, 1e8);
            g = simplex_gradient(p, q_row, measure, alpha);
            residual = kkt_residual(p, g);
            stalled = f > f_before + 1e-13 * (1.0 + std::abs(f)) ? 0 : stalled + 1;
        }

        // Floored actions with a positive KKT violation belong in the
        // support; lifting them to 1e-9 skips most of the exponential mass
        // climb. A lift past the true optimum is invisible to the residual
        // (contribution p * violation ~ 1e-17) and decays on its own.
        {
            double gbar = 0.0;
            for (std::size_t a = 0; a < A; ++a) gbar += p[a] * g[a];
            bool lifted = false;
            for (std::size_t a = 0; a < A; ++a)
                if (p[a] < 1e-9 && g[a] - gbar > 10.0 * tol) {
                    p[a] = 1e-9;
                    lifted = true;
                }
            if (lifted) {
                double z = 0.0;
                for (double v : p) z += v;
                for (double& v : p) v /= z;
                g = simplex_gradient(p, q_row, measure, alpha);
                residual = kkt_residual(p, g);
            }
        }

        // Residual polish with a watchdog window: one step can reshuffle
        // which term attains the KKT max, so progress is judged over 20
        // fixed-size steps, reverting and halving on a net increase. A
        // plateaued window is kept: that is the exponential mass climb of
        // a floored action, which faster steps shorten.
        step = std::min(step, 1.0);
        constexpr int kWindow = 20;
        while (it < max_iters && residual > tol) {
            const Vec p_start = p;
            const double res_start = residual;
            for (int w = 0; w < kWindow && it < max_iters; ++w, ++it) {
                p = exp_gradient_step(p, g, step);
                g = simplex_gradient(p, q_row, measure, alpha);
                residual = kkt_residual(p, g);
                if (residual <= tol) return p;
            }
            if (residual > res_start * (1.0 + 1e-9)) {
                p = p_start;
                g = simplex_gradient(p, q_row, measure, alpha);
                residual = res_start;
                step *= 0.5;
                if (step < 1e-14) break;
            } else {
                step = std::min(step * 1.5, 1e8);
            }
        }
        f = simplex_objective(p, q_row, measure, alpha);
    }
    if (residual <= tol) return p;

    std::ostringstream msg;
    msg << "max_entropy_distribution: no convergence within " << max_iters
        << " iterations (residual " << residual << ")";
    throw std::runtime_error(msg.str());
}

TabularPolicy improve(const TabularMdp& mdp, const QTable& q,
                      const EntropyMeasure& measure, double alpha, double tol,
                      const TabularPolicy* warm_start) {
    const int S = mdp.num_states, A = mdp.num_actions;
    check(q.size() == static_cast<std::size_t>(S) * A, "improve: Q size mismatch");
    TabularPolicy pi;
    pi.num_states = S;
    pi.num_actions = A;
    pi.probs.resize(q.size());
    for (int s = 0; s < S; ++s) {
        Vec row = max_entropy_distribution(
            {q.data() + static_cast<std::size_t>(s) * A, static_cast<std::size_t>(A)},
            measure, alpha, tol, 10000,
            warm_start ? warm_start->row(s) : std::span<const double>{});
        // Renormalize exactly so downstream simplex validation at 1e-12 holds.
        double sum = 0.0;
        for (double v : row) sum += v;
        double acc = 0.0;
        for (int a = 0; a < A; ++a) {
            double v = row[a] / sum;
            if (a == A - 1) v = 1.0 - acc;
            acc += v;
            pi.probs[static_cast<std::size_t>(s) * A + a] = std::max(v, 0.0);
        }
    }
    return pi;
}

PolicyIterationResult policy_iteration(
    const TabularMdp& mdp, const EntropyMeasure& measure, double alpha, double tol,
    const std::function<void(int, TabularPolicy&)>& test_hook) {
    mdp.validate();
    check(tol > 0.0, "policy_iteration: tol must be positive");

    PolicyIterationResult res;
    res.policy = TabularPolicy::uniform(mdp.num_states, mdp.num_actions);
    res.q = evaluate(mdp, res.policy, measure, alpha, tol * 0.1).q;

    const double fail_tol = 10.0 * tol;
    for (int it = 1; it <= 10000; ++it) {
        // Warm-starting the simplex ascent at the current policy guarantees
        // the improvement inequality behind the audit even when the entropy
        // objective has non-global stationary points.
        TabularPolicy next = improve(mdp, res.q, measure, alpha, tol * 0.1, &res.policy);
        if (test_hook) test_hook(it, next);
        QTable q_next = evaluate(mdp, next, measure, alpha, tol * 0.1).q;

        double sup_change = 0.0;
        double min_improvement = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < q_next.size(); ++i) {
            sup_change = std::max(sup_change, std::abs(q_next[i] - res.q[i]));
            min_improvement = std::min(min_improvement, q_next[i] - res.q[i]);
        }
        res.audit.push_back({it, sup_change, min_improvement});
        res.policy = std::move(next);
        res.q = std::move(q_next);
        res.iterations = it;

        if (min_improvement < -fail_tol) {
            std::ostringstream msg;
            msg << "policy_iteration: monotone improvement violated at iteration " << it
                << " (worst change " << min_improvement << ")";
            throw std::runtime_error(msg.str());
        }
        if (sup_change < tol) return res;
    }
    throw std::runtime_error("policy_iteration: no convergence within 10000 iterations");
}

bool TabularVerifyReport::all_passed() const {
    return std::all_of(properties.begin(), properties.end(),
                       [](const Property& p) { return p.passed; });
}

TabularVerifyReport verify_tabular(const TabularVerifyOptions& opts) {
    TabularVerifyReport report;
    Rng rng(derive_seed(opts.seed, "verify-tabular"));

    const std::vector<EntropyMeasure> measures = {
        EntropyMeasure::shannon(), EntropyMeasure::tsallis(1.5),
        EntropyMeasure::tsallis(2.0), EntropyMeasure::renyi(1.5),
        EntropyMeasure::renyi(2.0)};

    bool contraction_ok = true, monotone_ok = true, convergence_ok = true,
         corollary_ok = true;
    std::string contraction_detail, monotone_detail, convergence_detail,
        corollary_detail;
    double worst_contraction = 0.0, worst_monotone = 0.0, worst_corollary = 0.0;

    for (int trial = 0; trial < opts.num_mdps; ++trial) {
        const int S = 2 + rng.uniform_int(opts.max_states - 1);
        const int A = 2 + rng.uniform_int(opts.max_actions - 1);
        double gamma = rng.uniform(0.5, 0.95);
        if (opts.include_gamma_zero && trial % 10 == 9) gamma = 0.0;
        TabularMdp mdp = TabularMdp::random(S, A, gamma, rng);
        const double alpha = rng.uniform(0.1, 1.0);
        const EntropyMeasure measure = measures[trial % measures.size()];

        // Contraction (random Q pairs through one backup).
        TabularPolicy pi = TabularPolicy::uniform(S, A);
        for (int rep = 0; rep < 10; ++rep) {
            QTable q1(static_cast<std::size_t>(S) * A), q2(q1.size());
            for (auto& v : q1) v = rng.uniform(-5.0, 5.0);
            for (auto& v : q2) v = rng.uniform(-5.0, 5.0);
            const QTable t1 = bellman_backup(mdp, pi, q1, measure, alpha);
            const QTable t2 = bellman_backup(mdp, pi, q2, measure, alpha);
            double dq = 0.0, dt = 0.0;
            for (std::size_t i = 0; i < q1.size(); ++i) {
                dq = std::max(dq, std::abs(q1[i] - q2[i]));
                dt = std::max(dt, std::abs(t1[i] - t2[i]));
            }
            const double excess = dt - mdp.gamma * dq;
            worst_contraction = std::max(worst_contraction, excess);
            if (excess > 1e-12 * (1.0 + dq)) contraction_ok = false;
        }

        // Monotone improvement + convergence through full policy iteration.
        try {
            PolicyIterationResult pit = policy_iteration(mdp, measure, alpha, opts.tol);
            for (const auto& entry : pit.audit) {
                worst_monotone = std::min(worst_monotone, entry.min_improvement);
                if (entry.min_improvement < -opts.monotone_tol) monotone_ok = false;
            }
            if (pit.audit.empty() || pit.audit.back().q_change_sup >= opts.tol)
                convergence_ok = false;
        } catch (const std::exception& e) {
            monotone_ok = convergence_ok = false;
            monotone_detail = e.what();
        }

        // Corollary check: the softmax(Q/alpha) route and the maximization
        // route must induce matching Q functions for Shannon.
        if (measure.kind == EntropyKind::Shannon) {
            TabularPolicy uniform_pi = TabularPolicy::uniform(S, A);
            QTable q0 = evaluate(mdp, uniform_pi, measure, alpha, opts.tol * 0.1).q;
            TabularPolicy via_max = improve(mdp, q0, measure, alpha, opts.tol * 0.1);
            TabularPolicy via_softmax;
            via_softmax.num_states = S;
            via_softmax.num_actions = A;
            via_softmax.probs.resize(q0.size());
            for (int s = 0; s < S; ++s) {
                double zmax = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < A; ++a)
                    zmax = std::max(zmax, q0[static_cast<std::size_t>(s) * A + a] / alpha);
                double z = 0.0;
                for (int a = 0; a < A; ++a)
                    z += std::exp(q0[static_cast<std::size_t>(s) * A + a] / alpha - zmax);
                double acc = 0.0;
                for (int a = 0; a < A; ++a) {
                    double v =
                        std::exp(q0[static_cast<std::size_t>(s) * A + a] / alpha - zmax) / z;
                    if (a == A - 1) v = 1.0 - acc;
                    acc += v;
                    via_softmax.probs[static_cast<std::size_t>(s) * A + a] = v;
                }
            }
            const QTable qa = evaluate(mdp, via_max, measure, alpha, opts.tol * 0.1).q;
            const QTable qb = evaluate(mdp, via_softmax, measure, alpha, opts.tol * 0.1).q;
            double diff = 0.0;
            for (std::size_t i = 0; i < qa.size(); ++i)
                diff = std::max(diff, std::abs(qa[i] - qb[i]));
            worst_corollary = std::max(worst_corollary, diff);
            if (diff > 1e-6) corollary_ok = false;
        }
    }

    {
        std::ostringstream d;
        d << "worst excess over gamma bound: " << worst_contraction;
        report.properties.push_back({"bellman-contraction", contraction_ok, d.str()});
    }
    {
        std::ostringstream d;
        d << "worst per-iteration Q regression: " << worst_monotone;
        if (!monotone_detail.empty()) d << " (" << monotone_detail << ")";
        report.properties.push_back({"monotone-improvement", monotone_ok, d.str()});
    }
    report.properties.push_back(
        {"policy-iteration-convergence", convergence_ok, convergence_detail});
    {
        std::ostringstream d;
        d << "worst softmax-vs-maximization Q gap: " << worst_corollary;
        report.properties.push_back({"shannon-softmax-equivalence", corollary_ok, d.str()});
    }

    if (opts.inject_fault) {
        // Corrupt one improvement step (all mass on the worst action) and
        // require the monotonicity audit to catch it.
        Rng frng(derive_seed(opts.seed, "fault"));
        TabularMdp mdp = TabularMdp::random(5, 3, 0.9, frng);
        bool detected = false;
        try {
            policy_iteration(mdp, EntropyMeasure::shannon(), 0.5, opts.tol,
                             [&](int it, TabularPolicy& pi) {
                                 if (it != 2) return;
                                 QTable q0 = evaluate(mdp, pi, EntropyMeasure::shannon(),
                                                      0.5, opts.tol)
                                                 .q;
                                 for (int s = 0; s < pi.num_states; ++s) {
                                     int worst = 0;
                                     for (int a = 1; a < pi.num_actions; ++a)
                                         if (q0[static_cast<std::size_t>(s) * pi.num_actions +
                                                a] <
                                             q0[static_cast<std::size_t>(s) * pi.num_actions +
                                                worst])
                                             worst = a;
                                     for (int a = 0; a < pi.num_actions; ++a)
                                         pi.probs[static_cast<std::size_t>(s) *
                                                      pi.num_actions +
                                                  a] = (a == worst) ? 1.0 : 0.0;
                                 }
                             });
        } catch (const std::exception&) {
            detected = true;
        }
        report.properties.push_back(
            {"fault-detection", detected,
             detected ? "corrupted improvement step was flagged"
                      : "corruption went unnoticed"});
    }
    return report;
}

}  // namespace maxent
