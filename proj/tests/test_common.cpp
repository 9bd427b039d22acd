#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maxent/common.hpp"
#include "test_util.hpp"

using namespace maxent;

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-9, 1e-4, 0.02425, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1 - 1e-9}) {
        const double x = normal_quantile(p);
        CHECK(std::abs(normal_cdf(x) - p) <= 1e-12 * std::max(1.0, std::abs(p)));
    }
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_quantile(0.25) == doctest::Approx(-0.6744897501960817).epsilon(1e-10));
    CHECK_THROWS(normal_quantile(0.0));
    CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("rng streams are deterministic and seed-separated") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double ua = a.uniform();
        CHECK(ua == b.uniform());
        CHECK(ua >= 0.0);
        CHECK(ua < 1.0);
    }
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) any_diff |= (a2.uniform() != c.uniform());
    CHECK(any_diff);
}

TEST_CASE("derived stream seeds differ by tag and index") {
    const std::uint64_t base = 7;
    CHECK(derive_seed(base, "env") != derive_seed(base, "eval"));
    CHECK(derive_seed(base, "agent", 0) != derive_seed(base, "agent", 1));
    CHECK(derive_seed(base, "agent", 0) == derive_seed(base, "agent", 0));
}

TEST_CASE("rng normal moments") {
    Rng rng(1);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform_int covers its range") {
    Rng rng(5);
    std::vector<int> counts(6, 0);
    for (int i = 0; i < 60000; ++i) ++counts[rng.uniform_int(6)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 4 * 100);  // ~4 sigma
}
