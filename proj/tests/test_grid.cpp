#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "grunwald/grid.hpp"

using namespace grunwald;

TEST_CASE("cell width and spec examples") {
    Grid g(3);
    CHECK(g.h == doctest::Approx(0.5).epsilon(1e-16));
    auto p = grid_index(g, 0.3);
    CHECK(p.iota == 3);
    CHECK(p.lambda == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(grid_index(g, 1.0).iota == 4);
    CHECK(grid_index(g, 1.0).lambda == 1.0);
    CHECK(grid_index(g, -1.0).iota == 1);
    CHECK(grid_index(g, -1.0).lambda == 0.0);
}

TEST_CASE("round trip reconstruction") {
    Grid g(15);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 20000; ++k) {
        double x = u(rng);
        auto p = grid_index(g, x);
        CHECK(p.iota >= 1);
        CHECK(p.iota <= g.n + 1);
        CHECK(p.lambda >= 0);
        CHECK(p.lambda < 1);
        CHECK(std::fabs(-1 + (p.iota - 1 + p.lambda) * g.h - x) <= 1e-15);
    }
}

TEST_CASE("boundary snapping") {
    Grid g(7);
    for (int m = 0; m <= g.n + 1; ++m) {
        double edge = -1 + m * g.h;
        for (double eps : {0.0, 1e-13 * g.h, -1e-13 * g.h, 0.5e-12 * g.h, -0.5e-12 * g.h}) {
            double x = edge + eps;
            if (x < -1 || x > 1) continue;
            auto p = grid_index(g, x);
            if (m == g.n + 1) {
                CHECK(p.iota == g.n + 1);
                CHECK(p.lambda == 1.0);
            } else {
                CHECK(p.iota == m + 1);
                CHECK(p.lambda == 0.0);
            }
            CHECK(std::fabs(-1 + (p.iota - 1 + p.lambda) * g.h - x) <= 1.5e-12 * g.h);
        }
        // just past the tolerance band the point stays unsnapped
        if (m <= g.n) {
            auto q = grid_index(g, edge + 5e-12 * g.h);
            CHECK(q.iota == m + 1);
            CHECK(q.lambda > 0);
            CHECK(q.lambda < 1e-11);
        }
    }
}

TEST_CASE("iota is a right-continuous step in x") {
    Grid g(7);
    int prev = 1;
    for (double x = -1; x <= 1; x += 1e-4) {
        int i = grid_index(g, x).iota;
        CHECK(i >= prev);
        prev = i;
    }
    for (int m = 1; m <= g.n; ++m) {
        double edge = -1 + m * g.h;
        CHECK(grid_index(g, edge).iota == grid_index(g, edge + 1e-9).iota);
        CHECK(grid_index(g, edge - 1e-9).iota == m);
    }
}

TEST_CASE("projection samples the lambda fiber") {
    Grid g(7);
    auto ones = project(g, [](double) { return 1.0; }, 0.37);
    CHECK(ones.size() == 8);
    for (double v : ones) CHECK(v == 1.0);

    auto ident = project(g, [](double x) { return x; }, 0.0);
    for (int j = 1; j <= g.n + 1; ++j)
        CHECK(ident[j - 1] == doctest::Approx(-1 + (j - 1) * g.h).epsilon(1e-15));

    auto top = project(g, [](double x) { return x; }, 1.0);
    CHECK(top.back() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("embed inverts project along each fiber") {
    Grid g(31);
    auto f = [](double x) { return std::sin(3 * x) + 0.25 * x * x; };
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 5000; ++k) {
        double x = u(rng);
        auto p = grid_index(g, x);
        auto v = project(g, f, p.lambda);
        CHECK(embed(g, v, x) == doctest::Approx(f(x)).epsilon(1e-12));
    }
    auto v1 = project(g, f, 1.0);
    CHECK(embed(g, v1, 1.0) == doctest::Approx(f(1.0)).epsilon(1e-12));
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(Grid(2), std::invalid_argument);
    Grid g(3);
    CHECK_THROWS_AS(grid_index(g, 1.0001), std::domain_error);
    CHECK_THROWS_AS(grid_index(g, -1.0001), std::domain_error);
    std::vector<double> bad(3);
    CHECK_THROWS_AS(embed(g, bad, 0.0), std::invalid_argument);
}
