#include "maxent/entropy.hpp"

#include <cmath>

namespace maxent {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void check_simplex(std::span<const double> p) {
    double sum = 0.0;
    for (double v : p) {
        check(std::isfinite(v) && v >= 0.0, "probability vector has negative or non-finite entry");
        sum += v;
    }
    check(std::abs(sum - 1.0) <= 1e-9, "probability vector does not sum to 1");
}
}  // namespace

EntropyMeasure EntropyMeasure::tsallis(double q) {
    check(std::isfinite(q) && q >= 1.0, "Tsallis entropic index must be >= 1");
    if (q == 1.0) return shannon();
    return {EntropyKind::Tsallis, q};
}

EntropyMeasure EntropyMeasure::renyi(double eta) {
    check(std::isfinite(eta) && eta >= 1.0, "Renyi entropic index must be >= 1");
    if (eta == 1.0) return shannon();
    return {EntropyKind::Renyi, eta};
}

std::string EntropyMeasure::name() const {
    switch (kind) {
        case EntropyKind::Shannon: return "shannon";
        case EntropyKind::Tsallis: return "tsallis";
        case EntropyKind::Renyi: return "renyi";
    }
    return "unknown";
}

EntropyMeasure entropy_measure_from_name(const std::string& name, double index) {
    if (name == "shannon") return EntropyMeasure::shannon();
    if (name == "tsallis") return EntropyMeasure::tsallis(index);
    if (name == "renyi") return EntropyMeasure::renyi(index);
    throw std::invalid_argument("unknown entropy measure: " + name);
}

double q_log(double x, double q) {
    check(x > 0.0, "q_log: x must be positive");
    check(q >= 1.0, "q_log: q must be >= 1");
    if (q == 1.0) return std::log(x);
    return std::expm1((q - 1.0) * std::log(x)) / (q - 1.0);
}

double shannon_discrete(std::span<const double> p) {
    check_simplex(p);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double tsallis_discrete(std::span<const double> p, double q) {
    check_simplex(p);
    check(q >= 1.0, "tsallis_discrete: q must be >= 1");
    if (q == 1.0) return shannon_discrete(p);
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * q_log(v, q);
    return h;
}

double renyi_discrete(std::span<const double> p, double eta) {
    check_simplex(p);
    check(eta >= 1.0, "renyi_discrete: eta must be >= 1");
    if (eta == 1.0) return shannon_discrete(p);
    double s = 0.0;
    for (double v : p)
        if (v > 0.0) s += std::exp(eta * std::log(v));
    s = std::max(s, 1e-300);
    return std::log(s) / (1.0 - eta);
}

double discrete_entropy(std::span<const double> p, const EntropyMeasure& m) {
    switch (m.kind) {
        case EntropyKind::Shannon: return shannon_discrete(p);
        case EntropyKind::Tsallis: return tsallis_discrete(p, m.index);
        case EntropyKind::Renyi: return renyi_discrete(p, m.index);
    }
    throw std::logic_error("discrete_entropy: bad kind");
}

double shannon_estimate(std::span<const double> log_probs) {
    check(!log_probs.empty(), "shannon_estimate: need at least one sample");
    check(all_finite(log_probs), "shannon_estimate: non-finite log probability");
    double s = 0.0;
    for (double lp : log_probs) s += lp;
    return -s / static_cast<double>(log_probs.size());
}

double tsallis_estimate(std::span<const double> log_probs, double q) {
    check(!log_probs.empty(), "tsallis_estimate: need at least one sample");
    check(all_finite(log_probs), "tsallis_estimate: non-finite log probability");
    check(q >= 1.0, "tsallis_estimate: q must be >= 1");
    if (q == 1.0) return shannon_estimate(log_probs);
    double s = 0.0;
    for (double lp : log_probs) s += std::expm1((q - 1.0) * lp) / (q - 1.0);
    return -s / static_cast<double>(log_probs.size());
}

double gaussian_log_density(const DiagonalGaussian& g, std::span<const double> u) {
    check(u.size() == g.mean.size(), "gaussian_log_density: dimension mismatch");
    double lp = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double sigma = std::exp(g.log_std[j]);
        const double z = (u[j] - g.mean[j]) / sigma;
        lp += -0.5 * z * z - g.log_std[j] - 0.5 * kLog2Pi;
    }
    return lp;
}

double gaussian_shannon_entropy(const DiagonalGaussian& g) {
    double h = 0.5 * g.dim() * (kLog2Pi + 1.0);
    for (double ls : g.log_std) h += ls;
    return h;
}

double renyi_gaussian_integral(const DiagonalGaussian& g, double eta) {
    check(eta > 1.0, "renyi_gaussian_integral: eta must be > 1");
    const double m = static_cast<double>(g.dim());
    double log_val = 0.5 * m * (1.0 - eta) * kLog2Pi - 0.5 * m * std::log(eta);
    for (double ls : g.log_std) log_val += (1.0 - eta) * ls;
    return std::exp(log_val);
}

double renyi_gaussian_entropy(const DiagonalGaussian& g, double eta) {
    check(eta > 1.0, "renyi_gaussian_entropy: eta must be > 1");
    const double m = static_cast<double>(g.dim());
    double h = 0.5 * m * kLog2Pi - m / (2.0 * (1.0 - eta)) * std::log(eta);
    for (double ls : g.log_std) h += ls;
    return h;
}

double renyi_squashed_integral_estimate(const DiagonalGaussian& g,
                                        const std::vector<Vec>& u_samples,
                                        double eta) {
    check(eta > 1.0, "renyi_squashed_integral_estimate: eta must be > 1");
    check(!u_samples.empty(), "renyi_squashed_integral_estimate: empty sample set");
    double acc = 0.0;
    for (const Vec& u : u_samples) {
        check(u.size() == g.mean.size(), "renyi_squashed_integral_estimate: dimension mismatch");
        const double log_mu = gaussian_log_density(g, u);
        double log_jac = 0.0;  // log prod_j (1 - tanh^2 u_j)
        for (double uj : u) {
            const double t = std::tanh(uj);
            log_jac += std::log(std::max(1.0 - t * t, 1e-12));
        }
        acc += std::exp((eta - 1.0) * log_mu + (1.0 - eta) * log_jac);
    }
    return acc / static_cast<double>(u_samples.size());
}

}  // namespace maxent
