#include "catch_amalgamated.hpp"

#include <random>

#include "gmtlab/expr.hpp"

using namespace gmtlab;

TEST_CASE("parse polynomial maps") {
    auto parts = parse_map_exprs("(x0^2 - x1^2, 2*x0*x1)");
    REQUIRE(parts.size() == 2);
    CHECK(max_var_index(*parts[0]) == 1);
    const double x[2] = {1.0, 1.0};
    CHECK(eval(*parts[0], x) == Catch::Approx(0.0));
    CHECK(eval(*parts[1], x) == Catch::Approx(2.0));
}

TEST_CASE("parse analytic map") {
    auto parts = parse_map_exprs("(sin(x0 + x1))");
    REQUIRE(parts.size() == 1);
    CHECK(max_var_index(*parts[0]) == 1);
    const double x[2] = {0.25, 0.5};
    CHECK(eval(*parts[0], x) == Catch::Approx(std::sin(0.75)));
}

TEST_CASE("parse errors carry position") {
    try {
        parse_map_exprs("(x0 +");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.column == 6);
        CHECK(e.line == 1);
    }
    CHECK_THROWS_AS(parse_map_exprs("(foo(x0))"), ParseError);
    CHECK_THROWS_AS(parse_map_exprs("(x0 ^ x1)"), ParseError);       // non-literal exponent
    CHECK_THROWS_AS(parse_map_exprs("(x0 / x1)"), ParseError);       // no division
    CHECK_THROWS_AS(parse_map_exprs("(sin x0)"), ParseError);        // missing parens
}

TEST_CASE("precedence and unary minus") {
    auto e = parse_expr("-x0^2");
    const double x[1] = {3.0};
    CHECK(eval(*e, x) == Catch::Approx(-9.0));  // ^ binds tighter than unary -

    auto e2 = parse_expr("2 + 3 * x0^2");
    CHECK(eval(*e2, x) == Catch::Approx(29.0));

    auto e3 = parse_expr("(2 + 3) * x0");
    CHECK(eval(*e3, x) == Catch::Approx(15.0));
}

TEST_CASE("symbolic differentiation basics") {
    auto e = parse_expr("x0^2 * x1");
    auto dx0 = differentiate(e, 0);
    const double x[2] = {2.0, 5.0};
    CHECK(eval(*dx0, x) == Catch::Approx(2 * 2.0 * 5.0));

    auto s = parse_expr("sin(x0)");
    auto ds_dx1 = differentiate(s, 1);
    CHECK(eval(*ds_dx1, x) == 0.0);

    auto c = parse_expr("cos(x0^2)");
    auto dc = differentiate(c, 0);
    CHECK(eval(*dc, x) == Catch::Approx(-std::sin(4.0) * 4.0));

    auto ex = parse_expr("exp(2*x0)");
    auto dex = differentiate(ex, 0);
    CHECK(eval(*dex, x) == Catch::Approx(2 * std::exp(4.0)));
}

TEST_CASE("symbolic gradient matches central differences on random polynomials") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), pt(-1.0, 1.0);
    const double h = 1e-5;

    for (int trial = 0; trial < 10; ++trial) {
        // random degree-3 polynomial in two variables, written as DSL text
        std::string text = "(";
        bool first = true;
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j) {
                const double c = coef(rng);
                if (!first) text += " + ";
                first = false;
                text += std::to_string(c) + " * x0^" + std::to_string(i) + " * x1^" +
                        std::to_string(j);
            }
        text += ")";
        auto e = parse_map_exprs(text)[0];
        auto d0 = differentiate(e, 0);
        auto d1 = differentiate(e, 1);

        for (int p = 0; p < 10; ++p) {
            double x[2] = {pt(rng), pt(rng)};
            double xp[2] = {x[0] + h, x[1]}, xm[2] = {x[0] - h, x[1]};
            const double fd0 = (eval(*e, xp) - eval(*e, xm)) / (2 * h);
            CHECK(std::abs(eval(*d0, x) - fd0) < 1e-6 * (1 + std::abs(fd0)));
            double yp[2] = {x[0], x[1] + h}, ym[2] = {x[0], x[1] - h};
            const double fd1 = (eval(*e, yp) - eval(*e, ym)) / (2 * h);
            CHECK(std::abs(eval(*d1, x) - fd1) < 1e-6 * (1 + std::abs(fd1)));
        }
    }
}
