#include <doctest.h>

#include <random>

#include "mtsp/fit.hpp"
#include "mtsp/lp.hpp"
#include "oracles.hpp"

using namespace mtsp;

namespace {

std::vector<oracle::Edge> to_oracle(const std::vector<WEdge>& g) {
    std::vector<oracle::Edge> out;
    for (auto& e : g) out.push_back({e.u, e.v, e.w});
    return out;
}

}  // namespace

TEST_CASE("symmetric targets give uniform weights") {
    std::vector<WEdge> k3{{0, 1, 2.0 / 3}, {1, 2, 2.0 / 3}, {0, 2, 2.0 / 3}};
    auto f = fit_lambda(3, k3, 1e-8);
    auto l = f.lambda();
    CHECK(l[1] / l[0] == doctest::Approx(1.0));
    CHECK(l[2] / l[0] == doctest::Approx(1.0));
    CHECK(f.max_rel_err <= 1e-12);

    std::vector<WEdge> c4{{0, 1, 0.75}, {1, 2, 0.75}, {2, 3, 0.75}, {3, 0, 0.75}};
    auto g = fit_lambda(4, c4, 1e-8);
    for (double x : g.lambda()) CHECK(x / g.lambda()[0] == doctest::Approx(1.0));
}

TEST_CASE("triangle (0.6, 0.6, 0.8) inverts to weights (1, 1, 2)") {
    std::vector<WEdge> tri{{0, 1, 0.6}, {1, 2, 0.6}, {0, 2, 0.8}};
    auto f = fit_lambda(3, tri, 1e-8);
    auto l = f.lambda();
    CHECK(std::abs(l[1] / l[0] - 1.0) <= 1e-6);
    CHECK(std::abs(l[2] / l[0] - 2.0) <= 1e-6);
}

TEST_CASE("round trip from known weights") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> w(0.3, 3.0);
    for (int it = 0; it < 15; ++it) {
        int n = 4 + it % 4;
        std::vector<oracle::Edge> g;
        for (int v = 1; v < n; ++v) g.push_back({static_cast<int>(rng() % v), v, w(rng)});
        for (int k = 0; k < n; ++k) {
            int a = rng() % n, b = rng() % n;
            if (a != b) g.push_back({a, b, w(rng)});
        }
        auto p = oracle::marginals(n, g);
        std::vector<WEdge> x;
        for (std::size_t e = 0; e < g.size(); ++e) x.push_back({g[e].u, g[e].v, p[e]});
        auto f = fit_lambda(n, x, 1e-8);
        auto q = oracle::marginals(n, to_oracle(f.edges));
        for (std::size_t e = 0; e < g.size(); ++e) CHECK(std::abs(q[e] - p[e]) <= 1e-6 * p[e]);
    }
}

TEST_CASE("faces of the polytope") {
    // Path with x = 1 everywhere: a single tree, every edge contracted.
    std::vector<WEdge> path{{0, 1, 1}, {1, 2, 1}, {2, 3, 1}};
    auto f = fit_lambda(4, path);
    CHECK(f.contracted.size() == 3);
    CHECK(f.max_rel_err == 0.0);

    // Zero edges are deleted; a tight triangle is represented by a tree set.
    std::vector<WEdge> x{{0, 1, 2.0 / 3}, {1, 2, 2.0 / 3}, {0, 2, 2.0 / 3}, {2, 3, 1.0}, {0, 3, 0.0}};
    auto g = fit_lambda(4, x, 1e-8);
    CHECK(g.deleted == std::vector<int>{4});
    CHECK(g.max_rel_err <= 1e-8);
    auto q = oracle::marginals(4, to_oracle(g.edges));
    for (int e = 0; e < 4; ++e) CHECK(q[e] == doctest::Approx(x[e].w));
}

TEST_CASE("fit on held-karp solutions") {
    for (int seed = 1; seed <= 6; ++seed) {
        auto sp = split_root(solve_held_karp(random_euclidean(10, seed)));
        auto f = fit_lambda(sp, 1e-4);
        CHECK(f.max_rel_err <= 1e-4);
    }
}

TEST_CASE("tight family and excess") {
    std::vector<WEdge> x{{0, 1, 1}, {1, 2, 0.5}, {2, 3, 1}, {3, 1, 0.5}};
    auto fam = tight_family(4, x);
    bool has_pair = false;
    for (auto& s : fam)
        if (s == std::vector<int>{0, 1} || s == std::vector<int>{2, 3}) has_pair = true;
    CHECK(has_pair);
    auto [excess, witness] = max_polytope_excess(4, x);
    CHECK(excess == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<WEdge> over{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}};
    CHECK(max_polytope_excess(4, over).first == doctest::Approx(1.0));
}

TEST_CASE("fit errors") {
    std::vector<WEdge> wrong_total{{0, 1, 0.5}, {1, 2, 0.5}};
    CHECK_THROWS_AS(fit_lambda(3, wrong_total), std::invalid_argument);
    std::vector<WEdge> outside{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {2, 3, 0}};
    CHECK_THROWS_AS(fit_lambda(4, outside), std::invalid_argument);
    std::vector<WEdge> tri{{0, 1, 0.6}, {1, 2, 0.6}, {0, 2, 0.8}};
    CHECK_THROWS_AS(fit_lambda(3, tri, 1e-8, 1), NonConvergence);
    try {
        fit_lambda(3, tri, 1e-8, 1);
    } catch (const NonConvergence& e) {
        CHECK(e.best.max_rel_err > 1e-8);
    }
}
