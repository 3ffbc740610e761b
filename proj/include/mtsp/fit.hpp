#pragma once

#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mtsp/lp.hpp"
#include "mtsp/trees.hpp"

namespace mtsp {

struct FitResult {
    int n = 0;
    std::vector<WEdge> edges;      // w = lambda, aligned with the fitted x edges
    std::vector<double> target;    // x
    std::vector<std::vector<int>> tree_sets;
    double max_rel_err = 0.0;
    double eps = 0.0;
    long iterations = 0;
    std::vector<int> contracted;   // x_e >= 1 - 1e-9, marginal exactly 1
    std::vector<int> deleted;      // x_e <= 1e-9, lambda 0

    std::vector<double> lambda() const;
    WeightedGraph graph() const { return WeightedGraph{n, edges, tree_sets}; }
};

struct NonConvergence : std::runtime_error {
    NonConvergence(const std::string& what, FitResult best) : std::runtime_error(what), best(std::move(best)) {}
    FitResult best;
};

double max_relative_error(const std::vector<double>& p, const std::vector<double>& x);

// Vertex sets S with x(E(S)) = |S| - 1 forming a maximal laminar family; every tight
// constraint of the spanning-tree polytope at x is implied by them.
std::vector<std::vector<int>> tight_family(int n, const std::vector<WEdge>& x, double tol = 1e-9);

// Largest x(E(S)) - |S| + 1 over S, with a witness (for the polytope precondition).
std::pair<double, std::vector<int>> max_polytope_excess(int n, const std::vector<WEdge>& x);

FitResult fit_lambda(int n, const std::vector<WEdge>& x, double eps = 1e-4, long budget = -1);
// Fits the restricted support E of a split solution.
FitResult fit_lambda(const LpSolution& sol, double eps = 1e-4, long budget = -1);

nlohmann::json to_json(const FitResult& f);

}  // namespace mtsp
