#include "catch_amalgamated.hpp"

#include <random>

#include "gmtlab/exponents.hpp"

using namespace gmtlab;

TEST_CASE("mu_q matches the closed form") {
    ExponentParams p{.n = 2, .m = 1, .d = 1, .k = 1, .alpha = 0.0};
    CHECK(mu_q(p, 2.0) == Catch::Approx(0.0).margin(1e-15));

    // q = m - 1 gives n - m + 1 regardless of smoothness
    ExponentParams p2{.n = 5, .m = 3, .d = 4, .k = 2, .alpha = 0.5};
    CHECK(mu_q(p2, 2.0) == Catch::Approx(5 - 3 + 1));

    // alpha = 0, q = m gives nu
    ExponentParams p3{.n = 4, .m = 2, .d = 3, .k = 2, .alpha = 0.0};
    CHECK(mu_q(p3, 2.0) == Catch::Approx(nu(p3)));
}

TEST_CASE("q_circle examples") {
    CHECK(q_circle({.n = 2, .m = 2, .d = 2, .k = 1, .alpha = 0.0}) == Catch::Approx(2.0));
    CHECK(q_circle({.n = 3, .m = 1, .d = 1, .k = 3, .alpha = 0.0}) == Catch::Approx(1.0));
    CHECK(q_circle({.n = 2, .m = 1, .d = 1, .k = 1, .alpha = 0.5}) == Catch::Approx(4.0 / 3.0));
}

TEST_CASE("nu examples") {
    CHECK(nu({.n = 3, .m = 1, .d = 1, .k = 3}) == 0.0);
    CHECK(nu({.n = 5, .m = 2, .d = 2, .k = 1}) == 3.0);
    CHECK(nu({.n = 2, .m = 2, .d = 2, .k = 2}) == -1.0);
}

TEST_CASE("tau_star examples") {
    CHECK(tau_star({.n = 4, .m = 1, .d = 1, .k = 2, .alpha = 0.0, .p = 2.0}) == Catch::Approx(2.0));
    CHECK(tau_star({.n = 2, .m = 1, .d = 1, .k = 2, .alpha = 0.0, .p = 1.0}) == Catch::Approx(1.0));
    CHECK(tau_star({.n = 3, .m = 1, .d = 1, .k = 1, .alpha = 0.5, .p = 6.0}) ==
          Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("parameter domain errors") {
    CHECK_THROWS_AS(mu_q({.n = 2, .m = 3, .d = 3}, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(mu_q({.n = 2, .m = 1, .d = 1, .k = 0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(q_circle({.n = 2, .m = 1, .d = 1, .k = 1, .alpha = 1.5}),
                    std::invalid_argument);
    ExponentParams no_p{.n = 2, .m = 1, .d = 1, .k = 1};
    CHECK_THROWS_AS(tau_star(no_p), std::invalid_argument);
    ExponentParams bad_q{.n = 2, .m = 2, .d = 2, .k = 1, .alpha = 0.0, .p = {}, .q = 0.5};
    CHECK_THROWS_AS(mu_q(bad_q), std::invalid_argument);
}

TEST_CASE("fuzzed identities") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 8), ord(1, 5);
    std::uniform_real_distribution<double> alph(0.0, 1.0), dq(0.0, 4.0);

    for (int t = 0; t < 10000; ++t) {
        ExponentParams p;
        p.n = dim(rng);
        p.d = dim(rng);
        p.m = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(p.n, p.d)));
        p.k = ord(rng);
        p.alpha = alph(rng);

        // mu vanishes exactly at q_circle
        CHECK(std::abs(mu_q(p, q_circle(p))) < 1e-12);

        // affine in q with slope -(k+alpha)
        const double q0 = p.m - 1 + 0.25, q1 = q0 + dq(rng) + 0.5;
        const double slope = (mu_q(p, q1) - mu_q(p, q0)) / (q1 - q0);
        CHECK(slope == Catch::Approx(-(p.k + p.alpha)).epsilon(1e-10));
        CHECK(mu_q(p, q1) < mu_q(p, q0));  // strictly decreasing

        // integer tuples: mu at q = m with alpha = 0 is nu exactly
        ExponentParams pi = p;
        pi.alpha = 0.0;
        CHECK(mu_q(pi, static_cast<double>(pi.m)) == nu(pi));
    }
}
