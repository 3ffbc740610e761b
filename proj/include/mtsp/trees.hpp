#pragma once

#include <bitset>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mtsp/graph.hpp"

namespace mtsp {

struct DisconnectedGraph : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExceeded : std::runtime_error {
    BudgetExceeded(const std::string& what, double count) : std::runtime_error(what), count(count) {}
    double count;
};
struct EmptySupport : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// lambda-uniform spanning trees of a multigraph (edge weight w = lambda).
// tree_sets is an optional laminar family of vertex sets the distribution is conditioned
// to span as trees; this is the limit of scaling lambda on E(S) to infinity and lets
// faces of the spanning-tree polytope be represented with finite weights.
struct WeightedGraph {
    int n = 0;
    std::vector<WEdge> edges;
    std::vector<std::vector<int>> tree_sets;
};

// One factor of the product decomposition induced by tree_sets.
struct Block {
    std::vector<int> vertices;   // original vertices of the set (or all of V)
    std::vector<int> node_of;    // original vertex -> block node, -1 outside
    int nodes = 0;
    std::vector<int> edges;      // global edge indices whose minimal containing set is this one
};
std::vector<Block> blocks(const WeightedGraph& g);

std::vector<double> marginals(const WeightedGraph& g);
// Number of spanning trees (respecting tree_sets) from the matrix-tree theorem.
double tree_count(const WeightedGraph& g);

constexpr int kMaxExactEdges = 128;
using EdgeMask = std::bitset<kMaxExactEdges>;

struct ExactTreeDistribution {
    int n = 0;
    std::vector<std::pair<int, int>> endpoints;
    std::vector<EdgeMask> trees;
    std::vector<double> prob;
    std::vector<double> marginals;

    int edge_count() const { return static_cast<int>(endpoints.size()); }
    void recompute_marginals();
    double total() const;
};

ExactTreeDistribution enumerate_trees(const WeightedGraph& g, double limit = 1e6);

struct EdgeIn {
    int e;
};
struct EdgeOut {
    int e;
};
struct SetIsTree {
    VertexSet s;
};
using Constraint = std::variant<EdgeIn, EdgeOut, SetIsTree>;

ExactTreeDistribution condition(const ExactTreeDistribution& d, const Constraint& c);
bool spans_as_tree(const ExactTreeDistribution& d, const EdgeMask& t, const VertexSet& s);
// Largest |P[inner, outer] - P[inner] P[outer]| over the inner (E(S)) and outer tree parts.
double product_form_gap(const ExactTreeDistribution& d, const VertexSet& s);

EdgeMask mask_of(const std::vector<int>& edges);
std::vector<double> rank_sequence(const ExactTreeDistribution& d, const EdgeMask& a);

struct RankProperties {
    bool log_concave;
    bool no_internal_zeros;
    bool mode_near_mean;
    double mean;
    int mode;
    double worst_log_concavity;  // min over k of a_k^2 - a_{k-1} a_{k+1}
};
RankProperties rank_properties(const std::vector<double>& seq, double tol = 1e-12);

double prob_where(const ExactTreeDistribution& d, const std::function<bool(const EdgeMask&)>& pred);
int count_in(const EdgeMask& t, const EdgeMask& a);

nlohmann::json to_json(const ExactTreeDistribution& d, int max_trees = 64);

}  // namespace mtsp
