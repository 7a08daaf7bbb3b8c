#include "catch_amalgamated.hpp"

#include <random>

#include "gmtlab/geometry.hpp"

using namespace gmtlab;

TEST_CASE("cube diameter") {
    CHECK(Cube::unit(1).diam() == Catch::Approx(1.0));
    CHECK(Cube::unit(2).diam() == Catch::Approx(std::sqrt(2.0)));
    CHECK(Cube(Point(4, 0.0), 0.5).diam() == Catch::Approx(1.0));
    CHECK_THROWS_AS(Cube(Point{0.0}, -1.0), std::invalid_argument);
}

TEST_CASE("dyadic children tile the parent") {
    DyadicCell root;
    root.index = {0, 0};
    auto kids = children(root);
    REQUIRE(kids.size() == 4);
    const Cube rc = root.cube(Cube::unit(2));
    double vol = 0;
    for (const auto& k : kids) {
        const Cube c = k.cube(Cube::unit(2));
        CHECK(c.side == Catch::Approx(rc.side / 2));
        CHECK(c.diam() == Catch::Approx(rc.diam() / 2));
        vol += c.volume();
        CHECK(k.parent() == root);
    }
    CHECK(vol == Catch::Approx(rc.volume()));

    DyadicCell cube3;
    cube3.index = {0, 0, 0};
    CHECK(children(cube3).size() == 8);
}

TEST_CASE("child volumes sum to the parent volume for random cells") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        DyadicCell c;
        c.level = static_cast<int>(rng() % 6);
        const int n = 1 + static_cast<int>(rng() % 3);
        c.index.resize(static_cast<size_t>(n));
        for (auto& i : c.index) i = static_cast<std::int64_t>(rng() % (1ull << c.level));
        const Cube root = Cube::unit(n);
        double vol = 0;
        for (const auto& k : children(c)) vol += k.cube(root).volume();
        CHECK(vol == Catch::Approx(c.cube(root).volume()));
    }
}

TEST_CASE("refining a dyadic cover never loses points") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng() % 3);
        Point x(static_cast<size_t>(n));
        for (double& xi : x) xi = u(rng) * 0.999;
        DyadicCell cell;
        cell.index.assign(static_cast<size_t>(n), 0);
        const Cube root = Cube::unit(n);
        for (int level = 0; level < 8; ++level) {
            CHECK(cell.cube(root).contains(x));
            // descend into the child containing x
            bool found = false;
            for (const auto& k : children(cell)) {
                if (k.cube(root).contains(x)) {
                    cell = k;
                    found = true;
                    break;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("lattice sampling") {
    auto identity = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
    GridField g = sample_field(Cube::unit(1), 3, 1, identity);
    CHECK(g.values == std::vector<double>{0.0, 0.5, 1.0});

    auto constant = [](std::span<const double>, std::span<double> out) { out[0] = 7.25; };
    GridField c = sample_field(Cube::unit(2), 4, 1, constant);
    for (std::int64_t i = 0; i < c.node_count(); ++i) CHECK(c.value(i)[0] == 7.25);

    auto square = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
    GridField s = sample_field(Cube::unit(1), 5, 1, square);
    CHECK(s.values == std::vector<double>{0.0, 1.0 / 16, 0.25, 9.0 / 16, 1.0});
}

TEST_CASE("grid quadrature weights integrate polynomials") {
    // Simpson on odd resolutions: exact for cubics
    auto cubic = [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * x[0] * x[0] - 2 * x[0] + 1;
    };
    GridField g = sample_field(Cube::unit(1), 9, 1, cubic);
    const auto aw = g.axis_weights();
    double integral = 0;
    for_each_lattice(1, g.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        integral += g.node_weight(idx, aw) * g.value(flat)[0];
    });
    CHECK(integral == Catch::Approx(0.25 - 1.0 + 1.0));
}
