#include "catch_amalgamated.hpp"

#include <random>

#include "gmtlab/funczoo.hpp"
#include "gmtlab/polyapprox.hpp"

using namespace gmtlab;

namespace {

MultiPoly conformal_poly() {
    // (x^2 - y^2, 2xy)
    MultiPoly p(2, 2, 2);
    p.set_coeff({2, 0}, {1.0, 0.0});
    p.set_coeff({0, 2}, {-1.0, 0.0});
    p.set_coeff({1, 1}, {0.0, 2.0});
    return p;
}

} // namespace

TEST_CASE("polynomial evaluation and gradient") {
    MultiPoly p = conformal_poly();
    auto v = p.eval(Point{1.0, 1.0});
    CHECK(v[0] == Catch::Approx(0.0));
    CHECK(v[1] == Catch::Approx(2.0));

    SmallMatrix j = p.grad(Point{1.0, 1.0});
    CHECK(j(0, 0) == Catch::Approx(2.0));
    CHECK(j(0, 1) == Catch::Approx(-2.0));
    CHECK(j(1, 0) == Catch::Approx(2.0));
    CHECK(j(1, 1) == Catch::Approx(2.0));

    MultiPoly zero(2, 1, 3);
    CHECK(zero.eval(Point{0.4, -0.7})[0] == 0.0);
    CHECK_THROWS_AS(p.eval(Point{1.0}), std::invalid_argument);
}

TEST_CASE("taylor polynomial of sin") {
    MapSpec m = parse_map("(sin(x0))");
    MultiPoly t = taylor_poly(m, Point{0.0}, 3);
    // x - x^3/6
    CHECK(t.coeffs.at({1})[0] == Catch::Approx(1.0));
    CHECK(t.coeffs.at({3})[0] == Catch::Approx(-1.0 / 6.0));
    CHECK(std::abs(t.coeffs.at({0})[0]) < 1e-12);
    CHECK(std::abs(t.coeffs.at({2})[0]) < 1e-12);
}

TEST_CASE("taylor is idempotent on polynomials and constants") {
    MapSpec m = parse_map("(1 + 2*x0 + 3*x0^2 - x1^2)");
    MultiPoly t = taylor_poly(m, Point{0.3, -0.2}, 2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        Point x{u(rng), u(rng)};
        CHECK(t.eval(x)[0] == Catch::Approx(m.eval(x)[0]).margin(1e-10));
    }

    MapSpec c = parse_map("(4.25)", DslOptions{.declared_n = 2});
    MultiPoly tc = taylor_poly(c, Point{0.1, 0.1}, 2);
    CHECK(tc.eval(Point{0.9, -0.9})[0] == Catch::Approx(4.25));
}

TEST_CASE("moment projection solves the hand cases") {
    // u(x) = x^2 on [-1,1], degree 1: the odd moment kills the slope,
    // P = 1/3
    auto sq = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
    GridField u = sample_field(Cube(Point{-1.0}, 2.0), 129, 1, sq);
    MultiPoly p = moment_projection(u, 1);
    CHECK(p.eval(Point{0.25})[0] == Catch::Approx(1.0 / 3.0).margin(1e-8));
    CHECK(p.eval(Point{-0.7})[0] == Catch::Approx(1.0 / 3.0).margin(1e-8));

    // discrete moments of the residual vanish
    const auto aw = u.axis_weights();
    double m0 = 0, m1 = 0, unorm = 0;
    for_each_lattice(1, u.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        const Point x = u.node(idx);
        const double w = u.node_weight(idx, aw);
        const double r = u.value(flat)[0] - p.eval(x)[0];
        m0 += w * r;
        m1 += w * x[0] * r;
        unorm += w * std::abs(u.value(flat)[0]);
    });
    CHECK(std::abs(m0) < 1e-8 * unorm);
    CHECK(std::abs(m1) < 1e-8 * unorm);

    // constant stays put
    auto cst = [](std::span<const double>, std::span<double> out) { out[0] = -2.5; };
    GridField uc = sample_field(Cube::unit(2), 9, 1, cst);
    MultiPoly pc = moment_projection(uc, 1);
    CHECK(pc.eval(Point{0.2, 0.8})[0] == Catch::Approx(-2.5));
}

TEST_CASE("moment projection fixes polynomials and is idempotent") {
    auto poly = [](std::span<const double> x, std::span<double> out) {
        out[0] = 1.0 + 0.5 * x[0] - 2.0 * x[1] + x[0] * x[1];
    };
    GridField u = sample_field(Cube::unit(2), 17, 1, poly);
    MultiPoly p = moment_projection(u, 2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uu(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        Point x{uu(rng), uu(rng)};
        double expect;
        {
            double out[1];
            poly(x, out);
            expect = out[0];
        }
        CHECK(p.eval(x)[0] == Catch::Approx(expect).margin(1e-8));
    }

    // applying the projection to its own sampled output changes nothing
    GridField up = sample_field(Cube::unit(2), 17, 1,
                                [&](std::span<const double> x, std::span<double> out) {
                                    out[0] = p.eval(x)[0];
                                });
    MultiPoly p2 = moment_projection(up, 2);
    for (const auto& [gamma, c] : p.coeffs)
        CHECK(p2.coeffs.at(gamma)[0] == Catch::Approx(c[0]).margin(1e-8));

    // too-low resolution for the requested degree must fail loudly
    GridField tiny = sample_field(Cube::unit(2), 2, 1, poly);
    CHECK_THROWS(moment_projection(tiny, 4));
}

TEST_CASE("remainder gradient bound") {
    // linear map: Taylor is exact
    DslOptions lin;
    lin.declared_n = 1;
    lin.smooth = Smoothness{1, 1.0, 0.0};
    lin.lipschitz = 3.0;
    MapSpec l = parse_map("(3*x0)", lin);
    auto rb = remainder_gradient_bound(l, Cube(Point{0.2}, 0.5), 1, 1.0);
    CHECK(rb.certified == Catch::Approx(0.0));
    CHECK(rb.empirical <= 1e-12);

    // v = x^2 on a side-r interval: bound 2r, empirical r
    DslOptions sq;
    sq.declared_n = 1;
    sq.smooth = Smoothness{1, 1.0, 2.0};
    sq.lipschitz = 2.0;
    sq.domain = Cube(Point{-1.0}, 2.0);
    MapSpec s = parse_map("(x0^2)", sq);
    for (double r : {1.0, 0.5, 0.25}) {
        auto b = remainder_gradient_bound(s, Cube(Point{0.1}, r), 1, 1.0);
        CHECK(b.certified == Catch::Approx(2 * r));
        CHECK(b.empirical <= b.certified + 1e-12);
        CHECK(b.empirical == Catch::Approx(r).epsilon(0.01));
    }

    // sin(x+y), k = 2: empirical below the certified bound across scales
    DslOptions sn;
    sn.declared_n = 2;
    sn.smooth = Smoothness{2, 1.0, 2.0 * std::numbers::sqrt2};
    sn.domain = Cube(Point{-1.0, -1.0}, 2.0);
    MapSpec w = parse_map("(sin(x0 + x1))", sn);
    double prev_emp = 1e9;
    for (double r : {1.0, 0.5, 0.25}) {
        auto b = remainder_gradient_bound(w, Cube(Point{0.05, -0.1}, r), 2, 1.0);
        CHECK(b.empirical <= b.certified);
        CHECK(b.empirical < prev_emp);
        prev_emp = b.empirical;
    }

    MapSpec bare = parse_map("(x0^2)");
    CHECK_THROWS_AS(remainder_gradient_bound(bare, Cube::unit(1), 1, 1.0),
                    std::invalid_argument);
}

TEST_CASE("taylor remainder decays at order k+alpha-1 on zoo maps") {
    struct Case {
        MapSpec map;
        Point center;
    };
    std::vector<Case> cases;
    cases.push_back({paraboloid(), Point{0.1, -0.05}});
    cases.push_back({conformal_square(), Point{-0.08, 0.12}});
    for (auto& cs : cases) {
        const int k = cs.map.smooth->k;
        const double alpha = cs.map.smooth->alpha;
        std::vector<double> logr, logs;
        for (double r : {0.8, 0.4, 0.2, 0.1}) {
            Point corner = cs.center;
            for (double& c : corner) c -= r / 2;
            auto b = remainder_gradient_bound(cs.map, Cube(corner, r), k, alpha);
            if (b.empirical <= 0) continue;
            logr.push_back(std::log(r));
            logs.push_back(std::log(b.empirical));
        }
        REQUIRE(logr.size() >= 3);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < logr.size(); ++i) {
            sx += logr[i];
            sy += logs[i];
            sxx += logr[i] * logr[i];
            sxy += logr[i] * logs[i];
        }
        const double nn = static_cast<double>(logr.size());
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        CHECK(slope >= (k + alpha - 1) - 0.1);
    }
}

TEST_CASE("near-critical lattice sets") {
    // full-slope 1-D polynomial: nothing is near-critical at eps = 0.1
    MultiPoly line(1, 1, 1);
    line.set_coeff({1}, {1.0});
    CHECK(near_critical_set(line, Cube::unit(1), 0.1, 1, 33).empty());

    // constants: everything is
    MultiPoly cst(2, 1, 0);
    cst.set_coeff({0, 0}, {0.7});
    CHECK(near_critical_set(cst, Cube::unit(2), 0.1, 1, 9).size() == 81);

    // conformal square, m = 2, eps = 0.2: both singular values are
    // 2 sqrt(x^2+y^2), so the set is the disk of radius 0.1
    MultiPoly p = conformal_poly();
    const Cube q(Point{-1.0, -1.0}, 2.0);
    auto pts = near_critical_set(p, q, 0.2, 2, 201);
    CHECK(!pts.empty());
    for (const auto& x : pts)
        CHECK(x[0] * x[0] + x[1] * x[1] <= 0.01 + 1e-12);
    // and every lattice point in the disk is found
    std::size_t expected = 0;
    const double h = 2.0 / 200;
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
            const double x = -1 + i * h, y = -1 + j * h;
            if (x * x + y * y <= 0.01) ++expected;
        }
    CHECK(pts.size() == expected);

    CHECK_THROWS_AS(near_critical_set(p, q, -0.5, 2, 9), std::invalid_argument);
    CHECK_THROWS_AS(near_critical_set(p, q, 0.1, 3, 9), std::invalid_argument);
}

TEST_CASE("yomdin covers") {
    // constant polynomial: single ball
    MultiPoly cst(2, 2, 0);
    cst.set_coeff({0, 0}, {0.3, -0.8});
    auto c1 = yomdin_cover(cst, Cube::unit(2), 0.25, 1, 17);
    CHECK(c1.count() == 1);

    // slope-1 line: empty near-critical set, zero balls
    MultiPoly line(1, 1, 1);
    line.set_coeff({1}, {1.0});
    CHECK(yomdin_cover(line, Cube::unit(1), 0.1, 1, 33).count() == 0);

    // conformal square on [-1,1]^2 at eps 0.2: the image of the eps/2-disk
    // is a disk of radius eps^2/4, far below the ball radius eps * ell(Q)
    MultiPoly p = conformal_poly();
    auto c3 = yomdin_cover(p, Cube(Point{-1.0, -1.0}, 2.0), 0.2, 2, 201);
    CHECK(c3.count() == 1);
    CHECK(c3.balls[0].second == Catch::Approx(0.4));
}
