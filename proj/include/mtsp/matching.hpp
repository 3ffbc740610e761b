#pragma once

#include <cstdint>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mtsp/graph.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/sampler.hpp"

namespace mtsp {

using OddSet = std::vector<int>;
using Multigraph = std::vector<std::pair<int, int>>;

OddSet odd_vertices(int n, const Multigraph& edges);

// Maximum-weight matching on a general graph (primal-dual with blossom shrinking, O(n^3)).
// Returns mate[v] or -1. With max_cardinality, the maximum weight among maximum-cardinality
// matchings is returned.
std::vector<int> max_weight_matching(int n, const std::vector<std::tuple<int, int, std::int64_t>>& edges,
                                     bool max_cardinality);

struct Matching {
    std::vector<std::pair<int, int>> pairs;
    double cost = 0.0;
};

Matching min_matching(const Eigen::MatrixXd& cost, const OddSet& odd);
Matching min_matching(const MetricInstance& inst, const OddSet& odd);
// Exhaustive subset DP; |odd| <= 24.
Matching brute_force_matching(const Eigen::MatrixXd& cost, const OddSet& odd);

// Checks y(delta(S)) >= 1 - tol for every S with |S ∩ odd| odd. Uses full enumeration for
// n <= 14, the given family when supplied, and Gomory-Hu fundamental cuts otherwise.
// Returns a violated S, or nothing.
std::optional<VertexSet> ojoin_feasible(int n, const std::vector<WEdge>& y, const OddSet& odd, double tol = 1e-9,
                                        const std::vector<VertexSet>* family = nullptr);

// Euler circuit from vertex 0, later visits skipped.
Tour eulerian_shortcut(const MetricInstance& inst, const Multigraph& edges);

std::vector<std::pair<int, int>> minimum_spanning_tree(const MetricInstance& inst);
Tour christofides_baseline(const MetricInstance& inst);

struct SampledTour {
    Tour tour;
    double tree_cost = 0.0;      // c(T), e0 costs nothing
    double matching_cost = 0.0;  // c(M)
    int odd = 0;
};

// T is indexed into split.restricted(); v0 is merged back into u0.
Multigraph merged_tree(const LpSolution& split, const SpanningTree& t);
SampledTour tour_from_tree(const MetricInstance& inst, const LpSolution& split, const SpanningTree& t);

nlohmann::json to_json(const Tour& t);

}  // namespace mtsp
