#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsp/graph.hpp"
#include "mtsp/instance.hpp"

namespace mtsp {

struct LpEdge {
    int u;
    int v;
    double x;
    double cost;
};

struct CutViolation {
    VertexSet vertex_set;
    double weight;
};

struct LpSolution {
    int n = 0;
    std::vector<LpEdge> edges;
    int root_edge = -1;  // e0 after split_root, -1 before
    double objective = 0.0;
    int split_origin = -1;
    int u0 = -1;
    int v0 = -1;
    // Solver bookkeeping.
    int rounds = 0;
    long simplex_iterations = 0;
    long bland_pivots = 0;
    int cuts_added = 0;
    double final_min_cut = 0.0;
    std::vector<double> objective_history;
    int pruned_edges = 0;

    std::vector<WEdge> support() const;
    // Support restricted to E, i.e. without the root edge.
    std::vector<WEdge> restricted() const;
    // Indices into edges that are not the root edge.
    std::vector<int> restricted_index() const;
    double degree(int v) const;
};

LpSolution solve_held_karp(const MetricInstance& inst, double tol = 1e-9);
std::optional<CutViolation> separate_subtour(const LpSolution& sol, double tol = 1e-9);
LpSolution split_root(const LpSolution& sol);

// Returns the witness set of a violated x(E(S)) <= |S|-1 constraint, or nothing.
std::optional<CutViolation> check_spanning_tree_polytope(const LpSolution& sol, double tol = 1e-8);

// Builds a post-split solution directly from an edge list; used for hand-made fixtures.
LpSolution make_split_solution(int n, const std::vector<LpEdge>& edges, int u0, int v0);

nlohmann::json to_json(const LpSolution& sol);
LpSolution lp_from_json(const nlohmann::json& j);

}  // namespace mtsp
