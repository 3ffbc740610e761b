#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mtsp/graph.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/lp.hpp"

namespace mtsp {

struct InconsistentInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalInconsistency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NearMinCut {
    VertexSet side;
    std::vector<int> vertices;
    double weight = 0.0;
    std::optional<std::pair<int, int>> interval;  // first and last position along the tour
};

enum class CutMethod { Auto, Bitmask, BranchAndBound };

// All S with w(delta(S)) <= 2 + eta. With a root pair, S avoids both root vertices;
// otherwise each bipartition is reported once by its smaller side (ties: side without 0).
// Sorted by (size, vertices).
std::vector<NearMinCut> enumerate_near_min_cuts(int n, const std::vector<WEdge>& g, double eta,
                                                std::optional<std::pair<int, int>> root_pair = std::nullopt,
                                                CutMethod method = CutMethod::Auto);

// Tour positions: pos[v] is the index of v along the cycle.
void assign_intervals(std::vector<NearMinCut>& cuts, const std::vector<int>& pos);

enum class CrossTag { Uncrossed, LeftOnly, RightOnly, Both };
const char* to_string(CrossTag t);

struct Crossings {
    std::vector<CrossTag> tags;
    std::vector<std::pair<int, int>> pairs;  // (a, b): a crosses b on the left
    std::vector<std::vector<int>> components; // among cuts crossed on at most one side
    std::vector<int> both_sided;
    std::vector<int> non_interval;
};

Crossings classify_crossings(const std::vector<NearMinCut>& cuts);

struct Polygon {
    std::vector<int> cuts;                  // indices into the cut list
    std::vector<std::vector<int>> atoms;    // atoms[0] is the root atom, then left to right
    std::vector<int> atom_of;               // vertex -> atom
    std::vector<std::pair<int, int>> arcs;  // (l, r) per member cut
    std::vector<int> left, right;           // members open on the left / right (positions in cuts)
    std::vector<int> strict_parent;         // per member, position in cuts or -1
    VertexSet union_set;
    bool atoms_are_intervals = true;
    bool left_laminar = true;
    bool right_laminar = true;

    int m() const { return static_cast<int>(atoms.size()); }
};

// Returns nothing for components of a single cut.
std::optional<Polygon> polygon_of(const std::vector<NearMinCut>& cuts, const std::vector<int>& component, int n,
                                  const std::vector<int>& pos);

struct Check {
    std::string name;
    std::string ref;
    double value;
    double bound;
    bool upper;  // value <= bound when true, value >= bound otherwise
    double margin() const { return upper ? bound - value : value - bound; }
    bool pass(double tol = 1e-9) const { return margin() >= -tol; }
};

struct PolygonReport {
    std::vector<Check> checks;
    int violations = 0;
};

PolygonReport verify_polygon_structure(const Polygon& p, const std::vector<WEdge>& x, double eta);

enum class NodeKind { Degree, Polygon };

struct HierarchyNode {
    std::vector<int> vertices;
    VertexSet set;
    int parent = -1;
    std::vector<int> children;
    NodeKind kind = NodeKind::Degree;
    bool triangle = false;
    bool ambiguous = false;      // qualifies by both the component rule and the two-children rule
    int polygon = -1;            // index into Atlas::polygons when built from a component
    std::vector<int> atom_nodes; // u_1..u_{m-1} for polygon cuts
    std::vector<int> A, B, C;    // edge indices into CutHierarchy::x
    double weight = 0.0;         // x(delta(S))
};

struct Bundle {
    int u = -1;  // node index, or -1 for u0 and -2 for v0 (root pseudo-bundles); unused for bottom bundles
    int v = -1;
    int parent = -1;
    std::vector<int> edges;
    double x = 0.0;
    bool pseudo = false;
};

struct CutHierarchy {
    int n = 0;
    int u0 = -1;
    int v0 = -1;
    std::vector<WEdge> x;          // restricted support (no e0)
    std::vector<HierarchyNode> nodes;
    int root = -1;
    std::vector<int> edge_parent;  // lowest node containing both endpoints, -1 if none
    std::vector<Bundle> top;
    std::vector<Bundle> bottom;

    std::vector<int> delta(int node) const;
    bool is_descendant(int a, int b) const;  // a inside b (or equal)
};

struct DegreePartition {
    std::vector<int> A, B, C;
    int a = -1, b = -1;  // the minimal qualifying nodes, -1 when absent
    std::string branch;  // "two", "one" or "none"
    double xA = 0, xB = 0, xC = 0;
    std::vector<Check> checks;
};

DegreePartition degree_partition(const CutHierarchy& h, int node, double eps_oneone, double eps_eta);

struct Atlas {
    double eta = 0.0;
    bool heuristic_opt = false;
    std::vector<int> opt_order;  // post-split tour, u0 first, v0 last
    std::vector<WEdge> z;
    std::vector<NearMinCut> cuts;
    Crossings crossings;
    std::vector<Polygon> polygons;
    std::vector<PolygonReport> polygon_reports;
    CutHierarchy hierarchy;
    std::vector<Check> hierarchy_checks;
    std::vector<std::string> notes;

    int violations() const;
};

// Rotates a tour of the unsplit instance so it starts at the split vertex and appends v0.
std::vector<int> split_tour_order(const LpSolution& split, const std::vector<int>& tour);

Atlas build_atlas(const LpSolution& split, const std::vector<int>& opt_order, double eta,
                  CutMethod method = CutMethod::Auto);

// The hierarchy part of build_atlas.
CutHierarchy build_hierarchy(const LpSolution& split, const std::vector<int>& opt_order, double eta,
                             CutMethod method = CutMethod::Auto);

nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const Atlas& a);

}  // namespace mtsp
