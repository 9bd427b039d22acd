#include "maxent/policy.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace maxent {

namespace {
constexpr double kTanhMargin = 1e-9;

double squash(double u) {
    return std::clamp(std::tanh(u), -1.0 + kTanhMargin, 1.0 - kTanhMargin);
}
}  // namespace

SquashedGaussianPolicy SquashedGaussianPolicy::make(int state_dim, int action_dim,
                                                    const std::vector<int>& hidden,
                                                    Rng& rng) {
    check(state_dim >= 1 && action_dim >= 1, "policy: dimensions must be positive");
    std::vector<int> sizes;
    sizes.push_back(state_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(2 * action_dim);
    SquashedGaussianPolicy p;
    p.net = Mlp::random(std::move(sizes), rng);
    p.action_dim = action_dim;
    return p;
}

GaussianHead policy_head(const SquashedGaussianPolicy& policy, std::span<const double> s) {
    check(all_finite(s), "policy_head: non-finite state");
    Vec out = forward(policy.net, s);
    check(all_finite(out), "policy_head: non-finite network output");
    const int m = policy.action_dim;
    GaussianHead head;
    head.dist.mean.assign(out.begin(), out.begin() + m);
    head.raw_log_std.assign(out.begin() + m, out.end());
    head.dist.log_std.resize(m);
    for (int j = 0; j < m; ++j)
        head.dist.log_std[j] =
            std::clamp(head.raw_log_std[j], policy.log_std_min, policy.log_std_max);
    return head;
}

double squashed_log_density(const DiagonalGaussian& g, std::span<const double> u) {
    double lp = gaussian_log_density(g, u);
    for (double uj : u) {
        const double a = squash(uj);
        lp -= std::log1p(-a * a);
    }
    return lp;
}

PolicySample sample(const SquashedGaussianPolicy& policy, std::span<const double> s,
                    Rng& rng) {
    GaussianHead head = policy_head(policy, s);
    const int m = policy.action_dim;
    PolicySample out;
    out.internal.resize(m);
    out.action.resize(m);
    for (int j = 0; j < m; ++j) {
        const double sigma = std::exp(head.dist.log_std[j]);
        out.internal[j] = head.dist.mean[j] + sigma * rng.normal();
        out.action[j] = squash(out.internal[j]);
    }
    out.log_prob = squashed_log_density(head.dist, out.internal);
    return out;
}

double log_prob(const SquashedGaussianPolicy& policy, std::span<const double> s,
                std::span<const double> u) {
    check(all_finite(u), "log_prob: non-finite internal action");
    GaussianHead head = policy_head(policy, s);
    return squashed_log_density(head.dist, u);
}

Vec mean_action(const SquashedGaussianPolicy& policy, std::span<const double> s) {
    GaussianHead head = policy_head(policy, s);
    Vec a(policy.action_dim);
    for (int j = 0; j < policy.action_dim; ++j) a[j] = squash(head.dist.mean[j]);
    return a;
}

Vec score_head_upstream(const SquashedGaussianPolicy& policy, const GaussianHead& head,
                        std::span<const double> u) {
    const int m = policy.action_dim;
    check(static_cast<int>(u.size()) == m, "score_head_upstream: dimension mismatch");
    Vec up(2 * m, 0.0);
    for (int j = 0; j < m; ++j) {
        const double sigma = std::exp(head.dist.log_std[j]);
        const double z = (u[j] - head.dist.mean[j]) / sigma;
        up[j] = z / sigma;  // d log N / d mean
        const bool clamped = head.raw_log_std[j] <= policy.log_std_min ||
                             head.raw_log_std[j] >= policy.log_std_max;
        up[m + j] = clamped ? 0.0 : (z * z - 1.0);  // d log N / d log_std
    }
    return up;
}

Vec score_grad(const SquashedGaussianPolicy& policy, std::span<const double> s,
               std::span<const double> u) {
    check(all_finite(u), "score_grad: non-finite internal action");
    GaussianHead head = policy_head(policy, s);
    Vec upstream = score_head_upstream(policy, head, u);
    return backward(policy.net, s, upstream).param_grads;
}

nlohmann::json policy_to_json(const SquashedGaussianPolicy& policy) {
    return nlohmann::json{{"net", mlp_to_json(policy.net)},
                          {"action_dim", policy.action_dim},
                          {"log_std_min", policy.log_std_min},
                          {"log_std_max", policy.log_std_max}};
}

SquashedGaussianPolicy policy_from_json(const nlohmann::json& j) {
    SquashedGaussianPolicy p;
    p.net = mlp_from_json(j.at("net"));
    p.action_dim = j.at("action_dim").get<int>();
    p.log_std_min = j.at("log_std_min").get<double>();
    p.log_std_max = j.at("log_std_max").get<double>();
    check(p.net.output_size() == 2 * p.action_dim, "policy_from_json: head size mismatch");
    return p;
}

}  // namespace maxent
