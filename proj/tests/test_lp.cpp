#include <doctest.h>

#include <cmath>

#include "mtsp/lp.hpp"
#include "oracles.hpp"

using namespace mtsp;

namespace {

MetricInstance unit_complete(int n) {
    MetricInstance inst;
    inst.n = n;
    inst.cost = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    return inst;
}

MetricInstance square() {
    MetricInstance inst;
    inst.n = 4;
    inst.cost.resize(4, 4);
    double xs[] = {0, 1, 1, 0}, ys[] = {0, 0, 1, 1};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) inst.cost(i, j) = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
    return inst;
}

LpSolution from_edges(int n, const std::vector<LpEdge>& e) {
    LpSolution s;
    s.n = n;
    s.edges = e;
    return s;
}

std::vector<oracle::Edge> to_oracle(const std::vector<WEdge>& g) {
    std::vector<oracle::Edge> out;
    for (auto& e : g) out.push_back({e.u, e.v, e.w});
    return out;
}

// max over S of x(E(S)) - |S| + 1, |S| >= 2.
double polytope_excess(int n, const std::vector<WEdge>& x) {
    double worst = -1e9;
    for (std::uint32_t s = 1; s < (1u << n); ++s) {
        if (__builtin_popcount(s) < 2) continue;
        double in = 0.0;
        for (auto& e : x)
            if (((s >> e.u) & 1u) && ((s >> e.v) & 1u)) in += e.w;
        worst = std::max(worst, in - __builtin_popcount(s) + 1);
    }
    return worst;
}

}  // namespace

TEST_CASE("held-karp on unit K4") {
    auto lp = solve_held_karp(unit_complete(4));
    CHECK(lp.objective == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("held-karp on the unit square") {
    auto inst = square();
    auto lp = solve_held_karp(inst);
    CHECK(lp.objective == doctest::Approx(4.0).epsilon(1e-9));
    for (auto& e : lp.edges) {
        bool side = std::abs(inst(e.u, e.v) - 1.0) < 1e-12;
        if (side) CHECK(e.x == doctest::Approx(1.0));
        else CHECK(e.x == doctest::Approx(0.0));
    }
    CHECK(lp.objective <= oracle::tsp(inst.cost) + 1e-9);
}

TEST_CASE("held-karp on random instances is feasible and below OPT") {
    for (int seed = 1; seed <= 6; ++seed) {
        auto inst = random_euclidean(9, seed);
        auto lp = solve_held_karp(inst);
        for (int v = 0; v < 9; ++v) CHECK(lp.degree(v) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(oracle::min_cut(9, to_oracle(lp.support())) >= 2.0 - 1e-8);
        double obj = 0.0;
        for (auto& e : lp.edges) obj += e.x * inst(e.u, e.v);
        CHECK(obj == doctest::Approx(lp.objective));
        CHECK(lp.objective <= oracle::tsp(inst.cost) + 1e-7);
        CHECK_FALSE(separate_subtour(lp));
        for (std::size_t i = 1; i < lp.objective_history.size(); ++i)
            CHECK(lp.objective_history[i] >= lp.objective_history[i - 1] - 1e-7);
    }
}

TEST_CASE("held-karp on berlin52 within the integrality gap") {
    auto lp = solve_held_karp(load_tsplib_file(std::string(MTSP_DATA_DIR) + "/berlin52.tsp"));
    CHECK(lp.objective <= 7542.0 + 1e-6);
    CHECK(lp.objective >= 2.0 / 3.0 * 7542.0);
}

TEST_CASE("subtour separation") {
    auto two = from_edges(6, {{0, 1, 1, 1}, {1, 2, 1, 1}, {0, 2, 1, 1}, {3, 4, 1, 1}, {4, 5, 1, 1}, {3, 5, 1, 1}});
    auto v = separate_subtour(two);
    REQUIRE(v);
    CHECK(v->weight == doctest::Approx(0.0));
    int k = 0;
    for (char c : v->vertex_set) k += c;
    CHECK(k == 3);

    auto cyc = from_edges(5, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 3, 1, 1}, {3, 4, 1, 1}, {4, 0, 1, 1}});
    CHECK_FALSE(separate_subtour(cyc));

    std::vector<LpEdge> k4;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) k4.push_back({i, j, 2.0 / 3.0, 1});
    auto sol = from_edges(4, k4);
    CHECK_FALSE(separate_subtour(sol));
    CHECK(oracle::min_cut(4, to_oracle(sol.support())) == doctest::Approx(2.0));
}

TEST_CASE("root split") {
    auto c4 = split_root(from_edges(4, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 3, 1, 1}, {3, 0, 1, 1}}));
    CHECK(c4.n == 5);
    CHECK(c4.u0 == 0);
    CHECK(c4.v0 == 4);
    CHECK(c4.degree(c4.u0) == doctest::Approx(2.0));
    CHECK(c4.edges[c4.root_edge].x == 1.0);
    CHECK(c4.degree(c4.v0) == doctest::Approx(2.0));
    CHECK_THROWS(split_root(c4));

    std::vector<LpEdge> k4;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) k4.push_back({i, j, 2.0 / 3.0, 1});
    auto s = split_root(from_edges(4, k4));
    double incident = 0.0;
    for (int i : s.restricted_index())
        if (s.edges[i].u == s.u0 || s.edges[i].v == s.u0) incident += s.edges[i].x;
    CHECK(incident == doctest::Approx(1.0));
    CHECK(s.degree(s.u0) == doctest::Approx(2.0));
}

TEST_CASE("spanning tree polytope check") {
    auto c4 = split_root(from_edges(4, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 3, 1, 1}, {3, 0, 1, 1}}));
    double total = 0.0;
    for (auto& e : c4.restricted()) total += e.w;
    CHECK(total == doctest::Approx(4.0));
    CHECK_FALSE(check_spanning_tree_polytope(c4));

    std::vector<LpEdge> k4;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) k4.push_back({i, j, 2.0 / 3.0, 1});
    auto s = split_root(from_edges(4, k4));
    CHECK(polytope_excess(s.n, s.restricted()) <= 1e-12);
    CHECK_FALSE(check_spanning_tree_polytope(s));

    for (int seed = 1; seed <= 5; ++seed) {
        auto sp = split_root(solve_held_karp(random_euclidean(9, seed)));
        CHECK(polytope_excess(sp.n, sp.restricted()) <= 1e-7);
        CHECK_FALSE(check_spanning_tree_polytope(sp));
    }

    // A triangle carrying x(E(S)) = |S| on {1,2,3}, balanced elsewhere so x(E) = n - 1.
    auto bad = make_split_solution(5, {{1, 2, 1, 1}, {2, 3, 1, 1}, {1, 3, 1, 1}, {0, 1, 0.5, 1}, {0, 3, 0.5, 1}}, 0, 4);
    auto v = check_spanning_tree_polytope(bad);
    REQUIRE(v);
    CHECK(v->vertex_set[1] + v->vertex_set[2] + v->vertex_set[3] == 3);
}

TEST_CASE("json round trip") {
    auto lp = solve_held_karp(random_euclidean(8, 2));
    auto back = lp_from_json(to_json(lp));
    REQUIRE(back.edges.size() == lp.edges.size());
    for (std::size_t i = 0; i < lp.edges.size(); ++i) CHECK(back.edges[i].x == lp.edges[i].x);
    CHECK(back.objective == lp.objective);
}
