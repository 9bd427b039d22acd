#ifndef MAXENT_COMMON_HPP
#define MAXENT_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace maxent {

using Vec = std::vector<double>;

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

// 64-bit FNV-1a, used to derive per-record noise streams from content.
inline std::uint64_t fnv1a(const void* data, std::size_t nbytes,
                           std::uint64_t h = 1469598103934665603ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::span<const double> xs,
                           std::uint64_t h = 1469598103934665603ULL) {
    return xs.empty() ? h : fnv1a(xs.data(), xs.size() * sizeof(double), h);
}

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a role tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return mix64(base ^ fnv1a(tag.data(), tag.size()));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index) {
    return mix64(derive_seed(base, tag) ^ mix64(index));
}

double normal_cdf(double x);

// Inverse standard-normal CDF: Acklam's rational approximation followed by one
// Halley correction step; absolute error well below 1e-12 over (0,1).
double normal_quantile(double p);

// Deterministic splitmix64 generator. Sampling never goes through
// <random> distributions, so streams are identical across platforms and
// cheap to fork per record.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via the inverse-CDF transform of a strictly interior uniform
    double normal() {
        double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        return normal_quantile(u);
    }

    // uniform over {0, ..., n-1}
    int uniform_int(int n) {
        int v = static_cast<int>(uniform() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

private:
    std::uint64_t state_;
};

}  // namespace maxent

#endif
