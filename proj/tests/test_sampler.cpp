#include <doctest.h>

#include <cmath>
#include <map>

#include "mtsp/fit.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/sampler.hpp"
#include "oracles.hpp"

using namespace mtsp;

namespace {

WeightedGraph complete(int n) {
    WeightedGraph g{n, {}, {}};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
    return g;
}

WeightedGraph cycle(int n) {
    WeightedGraph g{n, {}, {}};
    for (int i = 0; i < n; ++i) g.edges.push_back({i, (i + 1) % n, 1.0});
    return g;
}

std::vector<oracle::Edge> to_oracle(const WeightedGraph& g) {
    std::vector<oracle::Edge> out;
    for (auto& e : g.edges) out.push_back({e.u, e.v, e.w});
    return out;
}

// Frequencies of sampled trees within 3 sigma of the enumerated probabilities.
void check_frequencies(const WeightedGraph& g, int samples, std::uint64_t seed) {
    auto ref = oracle::trees(g.n, to_oracle(g));
    std::map<std::vector<int>, int> seen;
    auto batch = sample_batch(g, samples, seed);
    for (auto& t : batch.trees) ++seen[t.edges];
    for (auto& [t, c] : seen) CHECK(ref.count(t) == 1);
    for (auto& [t, p] : ref) {
        double sigma = std::sqrt(p * (1 - p) / samples);
        CHECK(std::abs(seen[t] / double(samples) - p) <= 3 * sigma);
    }
}

}  // namespace

TEST_CASE("a tree is its own sample") {
    WeightedGraph g{5, {{0, 1, 1}, {1, 2, 3}, {1, 3, 0.5}, {3, 4, 2}}, {}};
    auto rng = stream_rng(1, 0);
    for (int i = 0; i < 20; ++i) CHECK(sample_tree(g, rng).edges == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("sample frequencies") {
    check_frequencies(complete(3), 30000, 1);
    check_frequencies(WeightedGraph{3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 2}}, {}}, 100000, 2);
}

TEST_CASE("chi-square against enumeration") {
    CHECK(chi_square_check(complete(4), 100000, 3).p_value > 0.01);
    CHECK(chi_square_check(cycle(4), 10000, 4).p_value > 0.01);
    auto k4 = complete(4);
    CHECK(chi_square_check(k4, 100000, 5, biased_sampler(k4)).p_value < 1e-6);
    auto cond = [&k4](std::mt19937_64& rng) { return sample_tree_conditional(k4, rng); };
    CHECK(chi_square_check(k4, 50000, 6, cond).p_value > 0.01);
}

TEST_CASE("tree sets are respected by the sampler") {
    auto g = complete(5);
    g.tree_sets = {{0, 1, 2}};
    auto batch = sample_batch(g, 2000, 7);
    for (auto& t : batch.trees) {
        int inside = 0;
        for (int e : t.edges)
            if (g.edges[e].u <= 2 && g.edges[e].v <= 2) ++inside;
        CHECK(inside == 2);
        CHECK(t.edges.size() == 4);
    }
    CHECK(chi_square_check(g, 50000, 8).p_value > 0.01);
}

TEST_CASE("batches do not depend on the thread count") {
    auto g = complete(6);
    auto a = sample_batch(g, 500, 11, 1), b = sample_batch(g, 500, 11, 4);
    for (int i = 0; i < 500; ++i) CHECK(a.trees[i].edges == b.trees[i].edges);
    auto c = sample_batch(g, 500, 12, 1);
    int same = 0;
    for (int i = 0; i < 500; ++i) same += a.trees[i].edges == c.trees[i].edges;
    CHECK(same < 100);
}

TEST_CASE("chi-square tail") {
    CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
    // dof 2: survival function is exp(-x/2).
    CHECK(chi_square_sf(4.0, 2) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("expected tree cost") {
    auto path = make_split_solution(4, {{0, 1, 1, 2.0}, {1, 2, 1, 3.0}, {2, 3, 1, 5.0}}, 0, 3);
    auto f = fit_lambda(path);
    auto c = expected_cost_check(path, f, 100, 1);
    CHECK(c.mean == c.c_x);
    CHECK(c.se == 0.0);
    CHECK(c.pass);

    LpSolution k4;
    k4.n = 4;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) k4.edges.push_back({i, j, 2.0 / 3, 1.0});
    auto s = split_root(k4);
    auto fk = fit_lambda(s, 1e-6);
    auto ck = expected_cost_check(s, fk, 10000, 2);
    // Every tree of the split graph has n - 1 = 4 unit edges, and x(E) = 4.
    CHECK(ck.c_x == doctest::Approx(4.0));
    CHECK(ck.mean == doctest::Approx(4.0));
    CHECK(ck.pass);
}
