#include <doctest.h>

#include <random>

#include "mtsp/fit.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/matching.hpp"
#include "mtsp/sampler.hpp"
#include "oracles.hpp"

using namespace mtsp;

namespace {

MetricInstance points(const std::vector<std::pair<double, double>>& p) {
    MetricInstance inst;
    inst.n = static_cast<int>(p.size());
    inst.cost.resize(inst.n, inst.n);
    for (int i = 0; i < inst.n; ++i)
        for (int j = 0; j < inst.n; ++j)
            inst.cost(i, j) = std::hypot(p[i].first - p[j].first, p[i].second - p[j].second);
    return inst;
}

bool perfect_on(const Matching& m, const OddSet& odd) {
    std::vector<int> seen;
    for (auto [a, b] : m.pairs) {
        seen.push_back(a);
        seen.push_back(b);
    }
    std::sort(seen.begin(), seen.end());
    auto o = odd;
    std::sort(o.begin(), o.end());
    return seen == o;
}

}  // namespace

TEST_CASE("odd vertices") {
    CHECK(odd_vertices(4, {{0, 1}, {1, 2}, {2, 3}}) == OddSet{0, 3});
    CHECK(odd_vertices(4, {{0, 1}, {0, 2}, {0, 3}}) == OddSet{0, 1, 2, 3});
    std::mt19937_64 rng(3);
    for (int it = 0; it < 50; ++it) {
        int n = 2 + it % 10;
        Multigraph t;
        for (int v = 1; v < n; ++v) t.emplace_back(rng() % v, v);
        CHECK(odd_vertices(n, t).size() % 2 == 0);
    }
}

TEST_CASE("minimum matching") {
    auto inst = random_euclidean(6, 1);
    auto two = min_matching(inst, {1, 4});
    REQUIRE(two.pairs.size() == 1);
    CHECK(two.cost == inst(1, 4));

    auto line = points({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
    auto m = min_matching(line, {0, 1, 2, 3});
    CHECK(m.cost == doctest::Approx(2.0));
    std::sort(m.pairs.begin(), m.pairs.end());
    CHECK(m.pairs == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});

    for (int seed = 1; seed <= 10; ++seed) {
        auto r = random_euclidean(14, seed);
        OddSet odd{0, 1, 2, 3, 5, 6, 8, 9, 11, 13};
        auto got = min_matching(r, odd);
        CHECK(perfect_on(got, odd));
        CHECK(got.cost == doctest::Approx(oracle::matching(r.cost, odd)).epsilon(1e-12));
        CHECK(brute_force_matching(r.cost, odd).cost == doctest::Approx(got.cost).epsilon(1e-12));
    }
    CHECK_THROWS_AS(min_matching(inst, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("maximum weight matching on sparse graphs") {
    std::mt19937_64 rng(8);
    for (int it = 0; it < 100; ++it) {
        int n = 2 + it % 9;
        std::vector<std::tuple<int, int, std::int64_t>> e;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (rng() % 3) e.emplace_back(a, b, static_cast<std::int64_t>(rng() % 50));
        auto mate = max_weight_matching(n, e, false);
        std::int64_t got = 0;
        for (auto& [a, b, w] : e)
            if (mate[a] == b) {
                CHECK(mate[b] == a);
                got += w;
            }
        // Exhaustive: best weight over all matchings by subset DP.
        std::vector<std::int64_t> best(1u << n, 0);
        for (std::uint32_t s = 1; s < (1u << n); ++s) {
            int a = __builtin_ctz(s);
            std::uint32_t r = s & ~(1u << a);
            best[s] = best[r];
            for (auto& [u, v, w] : e) {
                int other = u == a ? v : v == a ? u : -1;
                if (other >= 0 && ((r >> other) & 1u)) best[s] = std::max(best[s], w + best[r & ~(1u << other)]);
            }
        }
        CHECK(got == best[(1u << n) - 1]);
    }
}

TEST_CASE("O-join feasibility") {
    for (int seed = 1; seed <= 4; ++seed) {
        auto lp = solve_held_karp(random_euclidean(10, seed));
        std::vector<WEdge> y;
        for (auto& e : lp.edges) y.push_back({e.u, e.v, e.x / 2});
        std::mt19937_64 rng(seed);
        for (int k = 0; k < 10; ++k) {
            OddSet odd;
            for (int v = 0; v < 10; ++v)
                if (rng() % 2) odd.push_back(v);
            if (odd.size() % 2) odd.pop_back();
            CHECK_FALSE(ojoin_feasible(10, y, odd));
        }
    }
    auto w = ojoin_feasible(5, {}, {1, 3});
    REQUIRE(w);
    int size = 0;
    for (char c : *w) size += c;
    CHECK(size == 1);
    CHECK(((*w)[1] || (*w)[3]));

    // Half of a tour, with O the odd vertices of a spanning path.
    std::vector<WEdge> half;
    for (int i = 0; i < 8; ++i) half.push_back({i, (i + 1) % 8, 0.5});
    CHECK_FALSE(ojoin_feasible(8, half, {0, 7}));
    CHECK_FALSE(ojoin_feasible(8, half, {0, 1, 2, 5}));
}

TEST_CASE("eulerian shortcut") {
    auto inst = random_euclidean(6, 2);
    Multigraph cyc{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}};
    auto t = eulerian_shortcut(inst, cyc);
    CHECK(t.cost == doctest::Approx(tour_cost(inst, {0, 1, 2, 3, 4, 5})));

    auto tri = random_euclidean(3, 1);
    auto u = eulerian_shortcut(tri, {{0, 1}, {1, 2}, {2, 0}, {0, 1}, {0, 1}});
    CHECK(is_permutation(u.order, 3));
    CHECK_THROWS_AS(eulerian_shortcut(tri, {{0, 1}}), std::invalid_argument);
}

TEST_CASE("christofides") {
    MetricInstance tri;
    tri.n = 3;
    tri.cost = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    CHECK(christofides_baseline(tri).cost == doctest::Approx(3.0));
    auto sq = points({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK(christofides_baseline(sq).cost == doctest::Approx(4.0));
    auto r = random_euclidean(12, 5);
    auto t = christofides_baseline(r);
    CHECK(is_permutation(t.order, 12));
    CHECK(t.cost <= 1.5 * exact_opt(r).cost + 1e-9);
}

TEST_CASE("tour from a sampled tree") {
    auto inst = random_euclidean(8, 3);
    auto split = split_root(solve_held_karp(inst));
    auto fit = fit_lambda(split, 1e-6);
    auto batch = sample_batch(fit.graph(), 50, 1);
    for (auto& tree : batch.trees) {
        auto s = tour_from_tree(inst, split, tree);
        CHECK(is_permutation(s.tour.order, 8));
        CHECK(s.tour.cost <= s.tree_cost + s.matching_cost + 1e-9);
        CHECK(s.odd % 2 == 0);
        auto merged = merged_tree(split, tree);
        CHECK(merged.size() == 8);  // a spanning tree of the split graph merges into a 1-tree
    }
}
