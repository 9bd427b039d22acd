#include "maxent/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace maxent {

void BoundParams::validate() const {
    check(xi_lo > 0.0 && xi_hi > 0.0 && xi_lo <= xi_hi, "bounds: need 0 < xi_lo <= xi_hi");
    check(zeta_lo > 0.0 && zeta_hi > 0.0 && zeta_lo <= zeta_hi,
          "bounds: need 0 < zeta_lo <= zeta_hi");
    check(sigma_star > 0.0, "bounds: sigma_star must be positive");
    check(alpha >= 0.0, "bounds: alpha must be >= 0");
    check(gamma >= 0.0 && gamma < 1.0, "bounds: gamma must lie in [0,1)");
}

double optimal_sigma_tsallis(double alpha, double q, double xi, double zeta) {
    check(q > 1.0, "optimal_sigma_tsallis: q must be > 1");
    check(alpha > 0.0 && xi > 0.0 && zeta > 0.0,
          "optimal_sigma_tsallis: parameters must be positive");
    const double c = alpha * std::pow(2.0 * M_PI, 0.5 * (1.0 - q)) / std::sqrt(q);
    auto f = [&](double sigma) {
        return c * std::pow(sigma, -q) -
               xi * zeta * sigma / std::pow(xi * xi + sigma * sigma, 1.5);
    };

    double lo = 1e-12;
    check(f(lo) > 0.0, "optimal_sigma_tsallis: no bracket at the lower end");
    double hi = 1e-6;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e12)
            throw std::invalid_argument(
                "optimal_sigma_tsallis: no sign change inside [1e-12, 1e12]");
    }
    lo = hi * 0.5 > lo ? hi * 0.5 : lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= 1e-10) return mid;
        (fm > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Shared Lemma kernel: 1 - xi / sqrt(xi^2 + min{B(xi), sigma*^2}), maximized
// over xi in [xi_lo, xi_hi] and scaled by zeta_hi. B depends on the measure.
template <typename BFn>
double zeta_kernel(const BoundParams& p, BFn&& b_of_xi) {
    auto inner = [&](double xi) {
        const double cap = std::min(b_of_xi(xi), p.sigma_star * p.sigma_star);
        return 1.0 - xi / std::sqrt(xi * xi + cap);
    };
    double best = std::max(inner(p.xi_lo), inner(p.xi_hi));
    if (p.xi_hi > p.xi_lo) {
        // Golden-section scan for an interior maximum.
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = p.xi_lo, b = p.xi_hi;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = inner(c), fd = inner(d);
        for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + b); ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = inner(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = inner(d);
            }
        }
        best = std::max(best, inner(0.5 * (a + b)));
    }
    return p.zeta_hi * best;
}

}  // namespace

double zeta_tsallis(const BoundParams& p) {
    p.validate();
    const double q = p.measure.kind == EntropyKind::Shannon ? 1.0 : p.measure.index;
    check(q >= 1.0, "zeta_tsallis: index must be >= 1");
    if (p.alpha == 0.0) return 0.0;
    return zeta_kernel(p, [&](double xi) {
        const double num = p.alpha * std::pow(2.0 * M_PI, 0.5 * (1.0 - q)) *
                           std::pow(p.sigma_star * p.sigma_star + xi * xi, 1.5);
        const double base = num / (std::sqrt(q) * xi * p.zeta_lo);
        return std::pow(base, 2.0 / (1.0 + q));
    });
}

double zeta_renyi(const BoundParams& p) {
    p.validate();
    if (p.alpha == 0.0) return 0.0;
    return zeta_kernel(p, [&](double xi) {
        return p.alpha * std::pow(p.sigma_star * p.sigma_star + xi * xi, 1.5) /
               (xi * p.zeta_lo);
    });
}

double zeta_bound(const BoundParams& p) {
    switch (p.measure.kind) {
        case EntropyKind::Shannon:
        case EntropyKind::Tsallis:
            return zeta_tsallis(p);
        case EntropyKind::Renyi:
            return zeta_renyi(p);
    }
    throw std::logic_error("zeta_bound: bad kind");
}

double lower_bound(const BoundParams& p, double q_standard) {
    p.validate();
    const double zeta = zeta_bound(p);
    return q_standard - p.gamma / (1.0 - p.gamma) * zeta;
}

namespace {

// Inverse CDF of the negative half-normal with scale sigma:
// F(a) = 2 Phi(a / sigma) for a <= 0, so F^{-1}(p) = sigma Phi^{-1}(p / 2).
// The rational-approximation seed is tightened by bisection to 1e-10.
double neg_half_normal_quantile(double p, double sigma) {
    check(p > 0.0 && p < 1.0, "half-normal quantile: p must lie in (0,1)");
    const double seed = normal_quantile(0.5 * p);
    auto f = [&](double x) { return 2.0 * normal_cdf(x) - p; };
    double lo = seed - 1e-6, hi = seed + 1e-6;
    while (f(lo) > 0.0) lo -= 1e-6;
    while (f(hi) < 0.0) hi += 1e-6;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return sigma * 0.5 * (lo + hi);
}

}  // namespace

ExtremeValueParams extreme_value_params(int L, double sigma_star) {
    check(L >= 2, "extreme_value_params: L must be >= 2");
    check(sigma_star > 0.0, "extreme_value_params: sigma_star must be positive");
    ExtremeValueParams out;
    out.rho = neg_half_normal_quantile(1.0 - 1.0 / static_cast<double>(L), sigma_star);
    out.phi = neg_half_normal_quantile(1.0 - 1.0 / (M_E * static_cast<double>(L)),
                                       sigma_star) -
              out.rho;
    return out;
}

std::vector<DominanceRow> ensemble_dominance_mc(const std::vector<int>& l_values,
                                                double sigma_star, double zeta_s,
                                                double xi_s, double abar_s,
                                                long trials, std::uint64_t seed) {
    check(trials >= 1, "ensemble_dominance_mc: trials must be positive");
    check(sigma_star >= 0.0 && zeta_s > 0.0 && xi_s > 0.0,
          "ensemble_dominance_mc: invalid shape parameters");
    std::vector<DominanceRow> rows;
    rows.reserve(l_values.size());
    for (std::size_t idx = 0; idx < l_values.size(); ++idx) {
        const int L = l_values[idx];
        check(L >= 1, "ensemble_dominance_mc: L must be >= 1");
        Rng rng(derive_seed(seed, "dominance", idx));
        double sum = 0.0, sum_sq = 0.0;
        for (long t = 0; t < trials; ++t) {
            // Q is monotone in |a - abar|, so the argmax is the closest draw.
            double best_dev = std::numeric_limits<double>::infinity();
            for (int i = 0; i < L; ++i) {
                const double a = abar_s + sigma_star * rng.normal();
                best_dev = std::min(best_dev, std::abs(a - abar_s));
            }
            const double qv =
                zeta_s * std::exp(-best_dev * best_dev / (2.0 * xi_s * xi_s));
            sum += qv;
            sum_sq += qv * qv;
        }
        DominanceRow row;
        row.L = L;
        row.expected_q = sum / static_cast<double>(trials);
        row.gap = zeta_s - row.expected_q;
        const double var =
            std::max(0.0, sum_sq / static_cast<double>(trials) -
                              row.expected_q * row.expected_q);
        row.std_error = std::sqrt(var / static_cast<double>(trials));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace maxent
