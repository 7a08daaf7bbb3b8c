#include "catch_amalgamated.hpp"

#include <random>

#include "gmtlab/smallmat.hpp"
#include "oracles.hpp"

using namespace gmtlab;

namespace {

SmallMatrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    SmallMatrix m(r, c);
    for (double& x : m.a) x = g(rng);
    return m;
}

} // namespace

TEST_CASE("singular values of simple matrices") {
    SmallMatrix id3(3, 3);
    for (int i = 0; i < 3; ++i) id3(i, i) = 1;
    auto s = singular_values(id3);
    REQUIRE(s.size() == 3);
    for (double v : s.values) CHECK(v == Catch::Approx(1.0));

    SmallMatrix diag(2, 2);
    diag(0, 0) = 3;
    auto s2 = singular_values(diag);
    CHECK(s2[0] == Catch::Approx(3.0));
    CHECK(s2[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("agreement with the bisection eigen-oracle") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        const int r = 1 + static_cast<int>(rng() % 6), c = 1 + static_cast<int>(rng() % 6);
        SmallMatrix m = random_matrix(rng, r, c);
        auto s = singular_values(m);

        // oracle: eigenvalues of the smaller Gram matrix by a different path
        const int g = std::min(r, c);
        std::vector<double> gram(static_cast<size_t>(g) * g, 0.0);
        if (r <= c) {
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) {
                    double acc = 0;
                    for (int k = 0; k < c; ++k) acc += m(i, k) * m(j, k);
                    gram[static_cast<size_t>(i) * g + j] = acc;
                }
        } else {
            for (int i = 0; i < c; ++i)
                for (int j = 0; j < c; ++j) {
                    double acc = 0;
                    for (int k = 0; k < r; ++k) acc += m(k, i) * m(k, j);
                    gram[static_cast<size_t>(i) * g + j] = acc;
                }
        }
        auto ev = oracles::sym_eigen_bisect(gram, g);
        REQUIRE(static_cast<int>(ev.size()) == g);
        for (int i = 0; i < g; ++i) {
            const double expect = std::sqrt(std::max(ev[static_cast<size_t>(g - 1 - i)], 0.0));
            CHECK(std::abs(s[static_cast<size_t>(i)] - expect) < 1e-8 * (1 + expect));
        }
    }
}

TEST_CASE("rank_eps thresholds") {
    SingularSpectrum s{{1.0, 1.0, 1.0}};
    CHECK(rank_eps(s, 1e-9) == 3);
    SingularSpectrum s2{{3.0, 0.0}};
    CHECK(rank_eps(s2, 1e-9) == 1);
    SingularSpectrum s3{{1.0, 1e-7, 0.0}};
    CHECK(rank_eps(s3, 1e-6) == 1);
    CHECK_THROWS_AS(rank_eps(s3, -1.0), std::invalid_argument);
}

TEST_CASE("m-Jacobian") {
    SingularSpectrum id{{1.0, 1.0}};
    CHECK(jm(id, 2) == Catch::Approx(1.0));
    SingularSpectrum def{{3.0, 0.0}};
    CHECK(jm(def, 2) == 0.0);
    SingularSpectrum s{{2.0, 0.5}};
    CHECK(jm(s, 2) == Catch::Approx(1.0));
    CHECK_THROWS_AS(jm(s, 3), std::invalid_argument);
    CHECK_THROWS_AS(jm(s, 0), std::invalid_argument);
}

TEST_CASE("non-finite input is rejected") {
    SmallMatrix m(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(singular_values(m), std::invalid_argument);
}

TEST_CASE("perturbation inequality (fuzzed)") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 500; ++t) {
        const int r = 2 + static_cast<int>(rng() % 4), c = 2 + static_cast<int>(rng() % 4);
        SmallMatrix a = random_matrix(rng, r, c);
        SmallMatrix b = random_matrix(rng, r, c, 0.5);
        SmallMatrix sum(r, c);
        for (size_t i = 0; i < sum.a.size(); ++i) sum.a[i] = a.a[i] + b.a[i];
        auto sa = singular_values(a), ss = singular_values(sum);
        const double bnorm = operator_norm(b);
        for (size_t l = 0; l < ss.size(); ++l)
            CHECK(ss[l] <= sa[l] + bnorm + 1e-10);
    }
}

TEST_CASE("scaling and monotonicity properties") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> cdist(-3.0, 3.0);
    for (int t = 0; t < 200; ++t) {
        SmallMatrix a = random_matrix(rng, 3, 4);
        const double c = cdist(rng);
        SmallMatrix ca = a;
        for (double& x : ca.a) x *= c;
        auto sa = singular_values(a), sca = singular_values(ca);
        for (size_t l = 0; l < sa.size(); ++l)
            CHECK(sca[l] == Catch::Approx(std::abs(c) * sa[l]).margin(1e-10));

        // jm nonincreasing in m when all singular values <= 1
        SmallMatrix small = a;
        const double norm = operator_norm(a);
        for (double& x : small.a) x /= (norm + 1.0);
        auto ssm = singular_values(small);
        double prev = 1.0 + 1e-12;
        for (int m = 1; m <= static_cast<int>(ssm.size()); ++m) {
            const double v = jm(ssm, m);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }

    // jm vanishes exactly when lambda_m does
    SingularSpectrum z{{2.0, 1.0, 0.0}};
    CHECK(jm(z, 3) == 0.0);
    CHECK(jm(z, 2) > 0.0);
}
