#include <doctest.h>

#include <random>

#include "mtsp/fit.hpp"
#include "mtsp/probe.hpp"
#include "mtsp/trees.hpp"
#include "oracles.hpp"

using namespace mtsp;

namespace {

WeightedGraph graph(int n, const std::vector<WEdge>& e) { return WeightedGraph{n, e, {}}; }

WeightedGraph complete(int n) {
    std::vector<WEdge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.push_back({i, j, 1.0});
    return graph(n, e);
}

std::vector<oracle::Edge> to_oracle(const WeightedGraph& g) {
    std::vector<oracle::Edge> out;
    for (auto& e : g.edges) out.push_back({e.u, e.v, e.w});
    return out;
}

WeightedGraph random_graph(int n, int extra, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> w(0.2, 3.0);
    std::vector<WEdge> e;
    for (int v = 1; v < n; ++v) e.push_back({static_cast<int>(rng() % v), v, w(rng)});
    for (int k = 0; k < extra; ++k) {
        int a = rng() % n, b = rng() % n;
        if (a != b) e.push_back({a, b, w(rng)});
    }
    return graph(n, e);
}

std::vector<int> edges_of(const EdgeMask& m, int count) {
    std::vector<int> out;
    for (int e = 0; e < count; ++e)
        if (m[e]) out.push_back(e);
    return out;
}

}  // namespace

TEST_CASE("marginals of small graphs") {
    for (double p : marginals(complete(3))) CHECK(p == doctest::Approx(2.0 / 3.0));
    for (double p : marginals(complete(4))) CHECK(p == doctest::Approx(0.5));
    auto tri = graph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 2}});
    auto p = marginals(tri);
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.6));
    CHECK(p[2] == doctest::Approx(0.8));
}

TEST_CASE("marginals and tree counts against enumeration") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 30; ++it) {
        int n = 3 + it % 5;
        auto g = random_graph(n, 2 + it % 6, rng);
        auto ref = oracle::marginals(n, to_oracle(g));
        auto p = marginals(g);
        for (std::size_t e = 0; e < p.size(); ++e) CHECK(p[e] == doctest::Approx(ref[e]).epsilon(1e-10));
    }
    CHECK(tree_count(complete(4)) == doctest::Approx(16));
    CHECK(tree_count(complete(5)) == doctest::Approx(125));
    CHECK(tree_count(complete(6)) == doctest::Approx(1296));
}

TEST_CASE("exact enumeration") {
    auto k3 = enumerate_trees(complete(3));
    REQUIRE(k3.trees.size() == 3);
    for (double p : k3.prob) CHECK(p == doctest::Approx(1.0 / 3.0));

    auto tri = enumerate_trees(graph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 2}}));
    std::map<std::vector<int>, double> got;
    for (std::size_t t = 0; t < tri.trees.size(); ++t) got[edges_of(tri.trees[t], 3)] = tri.prob[t];
    CHECK(got[{0, 1}] == doctest::Approx(0.2));
    CHECK(got[{0, 2}] == doctest::Approx(0.4));
    CHECK(got[{1, 2}] == doctest::Approx(0.4));

    auto c4 = enumerate_trees(graph(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}}));
    REQUIRE(c4.trees.size() == 4);
    for (double p : c4.prob) CHECK(p == doctest::Approx(0.25));

    std::mt19937_64 rng(9);
    for (int it = 0; it < 20; ++it) {
        int n = 3 + it % 5;
        auto g = random_graph(n, 3 + it % 5, rng);
        auto ref = oracle::trees(n, to_oracle(g));
        auto d = enumerate_trees(g);
        REQUIRE(d.trees.size() == ref.size());
        CHECK(d.total() == doctest::Approx(1.0));
        for (std::size_t t = 0; t < d.trees.size(); ++t)
            CHECK(d.prob[t] == doctest::Approx(ref.at(edges_of(d.trees[t], d.edge_count()))).epsilon(1e-10));
    }
    CHECK_THROWS_AS(enumerate_trees(complete(8), 1000), BudgetExceeded);
    CHECK_THROWS_AS(enumerate_trees(graph(4, {{0, 1, 1}, {2, 3, 1}})), DisconnectedGraph);
}

TEST_CASE("tree sets condition the distribution") {
    auto g = complete(5);
    g.tree_sets = {{0, 1, 2}};
    auto d = enumerate_trees(g);
    // Reference: trees of K5 whose restriction to {0,1,2} has two edges, renormalized.
    auto ref = oracle::trees(5, to_oracle(complete(5)));
    std::map<std::vector<int>, double> kept;
    double z = 0.0;
    for (auto& [t, p] : ref) {
        int inside = 0;
        for (int e : t)
            if (g.edges[e].u <= 2 && g.edges[e].v <= 2) ++inside;
        if (inside == 2) {
            kept[t] = p;
            z += p;
        }
    }
    REQUIRE(d.trees.size() == kept.size());
    for (std::size_t t = 0; t < d.trees.size(); ++t)
        CHECK(d.prob[t] == doctest::Approx(kept.at(edges_of(d.trees[t], d.edge_count())) / z));
    auto p = marginals(g);
    for (std::size_t e = 0; e < p.size(); ++e) CHECK(p[e] == doctest::Approx(d.marginals[e]));
}

TEST_CASE("conditioning") {
    auto d = enumerate_trees(complete(3));
    auto in = condition(d, EdgeIn{0});
    CHECK(in.marginals[0] == doctest::Approx(1.0));
    CHECK(in.marginals[1] == doctest::Approx(0.5));
    CHECK(in.marginals[2] == doctest::Approx(0.5));
    auto out = condition(d, EdgeOut{0});
    REQUIRE(out.trees.size() == 1);
    CHECK(edges_of(out.trees[0], 3) == std::vector<int>{1, 2});
}

TEST_CASE("tree on {a,b} makes inside and outside independent") {
    auto fx = fixture_two_triangles();
    auto fit = fit_lambda(fx.split, 1e-8);
    auto d = enumerate_trees(fit.graph());
    VertexSet s(fx.split.n, 0);
    s[1] = s[2] = 1;
    auto c = condition(d, SetIsTree{s});
    CHECK(c.total() == doctest::Approx(1.0));
    for (std::size_t t = 0; t < c.trees.size(); ++t) CHECK(spans_as_tree(c, c.trees[t], s));
    CHECK(product_form_gap(c, s) <= 1e-12);
}

TEST_CASE("rank sequences") {
    auto d = enumerate_trees(complete(4));
    EdgeMask all;
    for (int e = 0; e < 6; ++e) all.set(e);
    auto seq = rank_sequence(d, all);
    REQUIRE(seq.size() >= 4);
    CHECK(seq[3] == doctest::Approx(1.0));
    for (int k = 0; k < 3; ++k) CHECK(seq[k] == 0.0);

    EdgeMask star;
    for (int e = 0; e < 6; ++e)
        if (d.endpoints[e].first == 0 || d.endpoints[e].second == 0) star.set(e);
    auto deg = rank_sequence(d, star);
    double total = oracle::trees_with_degree(4, 1) + oracle::trees_with_degree(4, 2) + oracle::trees_with_degree(4, 3);
    CHECK(total == 16.0);
    CHECK(deg[0] == 0.0);
    for (int k = 1; k <= 3; ++k) CHECK(deg[k] == doctest::Approx(oracle::trees_with_degree(4, k) / 16.0));
    CHECK(deg[1] == doctest::Approx(9.0 / 16));
    CHECK(deg[2] == doctest::Approx(6.0 / 16));
    CHECK(deg[3] == doctest::Approx(1.0 / 16));

    auto one = rank_sequence(d, mask_of({2}));
    CHECK(one[0] == doctest::Approx(1 - d.marginals[2]));
    CHECK(one[1] == doctest::Approx(d.marginals[2]));

    auto props = rank_properties(deg);
    CHECK(props.log_concave);
    CHECK(props.no_internal_zeros);
    CHECK(props.mode_near_mean);
    CHECK(props.mode == 1);
    CHECK(props.mean == doctest::Approx(1.5));

    auto gap = rank_properties({0.5, 0.0, 0.5});
    CHECK_FALSE(gap.no_internal_zeros);
    CHECK_FALSE(gap.log_concave);
}
