#include "memoria/numerics.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"

using namespace memoria;

TEST_CASE("digamma matches known values") {
    CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
    CHECK(digamma(10.0) == doctest::Approx(2.2517525890667210).epsilon(1e-12));
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.05, 40.0);
    for (int i = 0; i < 200; ++i) {
        const double x = unif(rng);
        CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-10));
    }
}

TEST_CASE("trigamma matches known values and recurrence") {
    CHECK(trigamma(1.0) == doctest::Approx(1.6449340668482264).epsilon(1e-12));
    CHECK(trigamma(0.5) == doctest::Approx(4.934802200544679).epsilon(1e-12));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(0.05, 40.0);
    for (int i = 0; i < 200; ++i) {
        const double x = unif(rng);
        CHECK(trigamma(x + 1.0) == doctest::Approx(trigamma(x) - 1.0 / (x * x)).epsilon(1e-9));
    }
}

TEST_CASE("digamma and trigamma reject non-positive arguments") {
    CHECK_THROWS_AS(digamma(0.0), std::domain_error);
    CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
    CHECK_THROWS_AS(trigamma(0.0), std::domain_error);
    CHECK_THROWS_AS(trigamma(-2.0), std::domain_error);
}

TEST_CASE("quantile_sorted interpolates order statistics") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    const std::vector<double> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(quantile_sorted(w, 0.25) == doctest::Approx(2.5));
    CHECK(quantile_sorted(std::vector<double>{42.0}, 0.3) == 42.0);
    CHECK_THROWS_AS(quantile_sorted({}, 0.5), std::invalid_argument);
}

TEST_CASE("splitmix64 matches the reference sequence") {
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64(splitmix64(0) ^ 1) != splitmix64(0));
}

TEST_CASE("uniform_from_bits stays strictly inside (0,1)") {
    CHECK(uniform_from_bits(0) > 0.0);
    CHECK(uniform_from_bits(~0ULL) < 1.0);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform_from_bits(rng());
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("parallel_for covers every index exactly once") {
    constexpr std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (std::size_t i = 0; i < n; ++i)
        CHECK(hits[i].load() == 1);
    parallel_for(0, 4, [&](std::size_t) { FAIL("body called for empty range"); });
}

TEST_CASE("parallel_for rethrows the first worker exception") {
    CHECK_THROWS_AS(
        parallel_for(100, 4,
                     [](std::size_t i) {
                         if (i == 5)
                             throw std::runtime_error("boom");
                     }),
        std::runtime_error);
}

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("", 0) == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a", 1) == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a64("foobar", 6) == 0x85944171F73967E8ULL);
}
