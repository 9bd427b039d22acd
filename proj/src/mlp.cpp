#include "maxent/mlp.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace maxent {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    check(sizes_.size() >= 2, "Mlp: need at least input and output layer sizes");
    for (int s : sizes_) check(s >= 1, "Mlp: layer sizes must be positive");
    std::size_t total = 0;
    w_off_.resize(num_layers());
    b_off_.resize(num_layers());
    for (int l = 0; l < num_layers(); ++l) {
        w_off_[l] = total;
        total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
        b_off_[l] = total;
        total += sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<int> layer_sizes, Rng& rng) {
    Mlp net(std::move(layer_sizes));
    for (int l = 0; l < net.num_layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
        const std::size_t n = static_cast<std::size_t>(net.sizes_[l + 1]) * net.sizes_[l];
        for (std::size_t i = 0; i < n; ++i)
            net.params_[net.w_off_[l] + i] = rng.uniform(-bound, bound);
        for (int i = 0; i < net.sizes_[l + 1]; ++i)
            net.params_[net.b_off_[l] + i] = rng.uniform(-bound, bound);
    }
    return net;
}

Vec forward(const Mlp& net, std::span<const double> x) {
    check(static_cast<int>(x.size()) == net.input_size(),
          "forward: input size mismatch");
    Vec act(x.begin(), x.end());
    Vec next;
    const auto& sizes = net.layer_sizes();
    const auto& p = net.params();
    for (int l = 0; l < net.num_layers(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double* w = p.data() + net.weight_offset(l);
        const double* b = p.data() + net.bias_offset(l);
        next.assign(out, 0.0);
        for (int i = 0; i < out; ++i) {
            const double* row = w + static_cast<std::size_t>(i) * in;
            double sum = b[i];
            for (int j = 0; j < in; ++j) sum += row[j] * act[j];
            next[i] = sum;
        }
        if (l + 1 < net.num_layers())
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        act.swap(next);
    }
    return act;
}

BackwardResult backward(const Mlp& net, std::span<const double> x,
                        std::span<const double> upstream) {
    check(static_cast<int>(x.size()) == net.input_size(),
          "backward: input size mismatch");
    check(static_cast<int>(upstream.size()) == net.output_size(),
          "backward: upstream size mismatch");

    const auto& sizes = net.layer_sizes();
    const auto& p = net.params();
    const int L = net.num_layers();

    // Forward pass keeping post-activation values per layer; activations[0] = x.
    std::vector<Vec> activations(L + 1);
    activations[0].assign(x.begin(), x.end());
    for (int l = 0; l < L; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double* w = p.data() + net.weight_offset(l);
        const double* b = p.data() + net.bias_offset(l);
        const Vec& a = activations[l];
        Vec z(out);
        for (int i = 0; i < out; ++i) {
            const double* row = w + static_cast<std::size_t>(i) * in;
            double sum = b[i];
            for (int j = 0; j < in; ++j) sum += row[j] * a[j];
            z[i] = sum;
        }
        if (l + 1 < L)
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        activations[l + 1] = std::move(z);
    }

    BackwardResult res;
    res.param_grads.assign(net.param_count(), 0.0);
    Vec delta(upstream.begin(), upstream.end());
    for (int l = L - 1; l >= 0; --l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double* w = p.data() + net.weight_offset(l);
        double* wg = res.param_grads.data() + net.weight_offset(l);
        double* bg = res.param_grads.data() + net.bias_offset(l);
        const Vec& a = activations[l];
        if (l < L - 1) {
            // ReLU mask: post-activation zero means the unit was clipped.
            const Vec& post = activations[l + 1];
            for (int i = 0; i < out; ++i)
                if (post[i] <= 0.0) delta[i] = 0.0;
        }
        for (int i = 0; i < out; ++i) {
            const double d = delta[i];
            bg[i] = d;
            double* wrow = wg + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) wrow[j] = d * a[j];
        }
        Vec prev(in, 0.0);
        for (int i = 0; i < out; ++i) {
            const double d = delta[i];
            const double* row = w + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) prev[j] += d * row[j];
        }
        delta.swap(prev);
    }
    res.input_grad = std::move(delta);
    return res;
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
    check(target.same_architecture(source), "soft_update: architecture mismatch");
    check(tau > 0.0 && tau <= 1.0, "soft_update: tau must lie in (0,1]");
    Vec& t = target.params();
    const Vec& s = source.params();
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = (1.0 - tau) * t[i] + tau * s[i];
}

AdamState AdamState::for_param_count(std::size_t n, double lr, std::string name) {
    AdamState st;
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    st.lr = lr;
    st.name = std::move(name);
    return st;
}

void adam_step(Vec& params, const Vec& grads, AdamState& st) {
    check(params.size() == grads.size(), "adam_step: param/grad size mismatch");
    check(params.size() == st.m.size(), "adam_step: state size mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient in '" + st.name +
                                     "' at parameter index " + std::to_string(i));
    }
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

nlohmann::json mlp_to_json(const Mlp& net) {
    return nlohmann::json{{"layer_sizes", net.layer_sizes()}, {"params", net.params()}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    Mlp net(j.at("layer_sizes").get<std::vector<int>>());
    Vec params = j.at("params").get<Vec>();
    check(params.size() == net.param_count(), "mlp_from_json: parameter count mismatch");
    check(all_finite(params), "mlp_from_json: non-finite parameters");
    net.params() = std::move(params);
    return net;
}

}  // namespace maxent
