#ifndef MAXENT_MLP_HPP
#define MAXENT_MLP_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "maxent/common.hpp"

#include <nlohmann/json_fwd.hpp>

namespace maxent {

/// Dense multilayer perceptron: ReLU on hidden layers, identity output.
/// Parameters live in one flat vector (per layer: row-major weights, then
/// biases), which keeps optimizer updates, target blending, serialization
/// and finite-difference probing uniform.
class Mlp {
public:
    Mlp() = default;

    // Zero-initialized network.
    explicit Mlp(std::vector<int> layer_sizes);

    // Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    static Mlp random(std::vector<int> layer_sizes, Rng& rng);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }

    Vec& params() { return params_; }
    const Vec& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    std::size_t weight_offset(int layer) const { return w_off_[layer]; }
    std::size_t bias_offset(int layer) const { return b_off_[layer]; }

    double& weight(int layer, int row, int col) {
        return params_[w_off_[layer] + static_cast<std::size_t>(row) * sizes_[layer] + col];
    }
    double weight(int layer, int row, int col) const {
        return params_[w_off_[layer] + static_cast<std::size_t>(row) * sizes_[layer] + col];
    }
    double& bias(int layer, int row) { return params_[b_off_[layer] + row]; }
    double bias(int layer, int row) const { return params_[b_off_[layer] + row]; }

    bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> w_off_, b_off_;
    Vec params_;
};

Vec forward(const Mlp& net, std::span<const double> x);

struct BackwardResult {
    Vec param_grads;  // d(upstream . output) / d params, flat layout
    Vec input_grad;   // d(upstream . output) / d x
};

// Exact reverse-mode gradients of upstream . forward(net, x).
BackwardResult backward(const Mlp& net, std::span<const double> x,
                        std::span<const double> upstream);

// target <- (1 - tau) * target + tau * source, elementwise.
void soft_update(Mlp& target, const Mlp& source, double tau);

struct AdamState {
    Vec m, v;
    long long step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::string name;  // reported in error messages

    static AdamState for_param_count(std::size_t n, double lr, std::string name);
};

// Bias-corrected Adam update in place. Throws on non-finite gradients,
// naming the offending state.
void adam_step(Vec& params, const Vec& grads, AdamState& state);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace maxent

#endif
