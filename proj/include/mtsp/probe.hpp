#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsp/cut_atlas.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/trees.hpp"

namespace mtsp {

struct InputMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateEvent : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};
struct StructuralError : std::logic_error {
    using std::logic_error::logic_error;
};

struct AnalysisConstants {
    double eta;
    double eps_eta;
    double eps_half;
    double eps_oneone;
    double p;
    double eps_M;
    double beta;
    double tau;
    double eps_P;

    explicit AnalysisConstants(double eta = 1e-3, double eps_half = 0.0002);
};

nlohmann::json to_json(const AnalysisConstants& c);

struct ProbeReport {
    std::vector<Check> checks;
    std::vector<std::string> notes;

    int violations(double tol = 1e-9) const;
    void add(std::string name, std::string ref, double value, double bound, bool upper) {
        checks.push_back({std::move(name), std::move(ref), value, bound, upper});
    }
    void merge(const ProbeReport& o);
};

nlohmann::json to_json(const ProbeReport& r, bool only_failures = false);

// ---- Bernoulli sums ----

// Law of a sum of independent Bernoullis, by convolution.
std::vector<double> bernoulli_sum_pmf(const std::vector<double>& p);
double poisson_pmf(double rate, int k);
double poisson_tail_at_least(double rate, int k);
// Lower bound on P[X = k] for X a Bernoulli sum with mean q, k-1 < q < k+1.
double exact_value_bound(double q, int k);
// Lower bound on P[X >= ceil(q)].
double at_least_ceiling_bound(double q);

struct BernoulliGrid {
    std::vector<double> q;             // means for the parity bound, in (0, 1.2]
    std::vector<double> mean;          // means for the two Poisson bounds
    std::vector<int> n;                // trial counts, <= 30
    int random_vectors = 20;           // random probability vectors per (mean, n)
    std::uint64_t seed = 1;

    static BernoulliGrid standard();
};

ProbeReport bernoulli_facts(const BernoulliGrid& grid);

// ---- exact tree distributions ----

struct WeightedCut {
    VertexSet side;
    double eps;  // x(delta(S)) - 2
};

// x is aligned with d's edges. Cuts must avoid u0 and v0.
ProbeReport verify_tree_conditioning(const ExactTreeDistribution& d, const std::vector<double>& x,
                                     const std::vector<WeightedCut>& cuts,
                                     const std::vector<std::vector<int>>& edge_sets = {}, double tol = 1e-6);

// Negative association on all disjoint pairs, rank sequence shape and stochastic
// dominance under truncation for each probed set.
ProbeReport verify_sr_properties(const ExactTreeDistribution& d, const std::vector<std::vector<int>>& sets);

struct GurvitsResult {
    double eps = 0.0;
    double f = 0.0;
    double all_exact = 0.0;  // P[A_i = n_i for all i]
    double sum_exact = 0.0;  // P[sum A_i = sum n_i]
    Check check;
};

GurvitsResult gurvits_bound_check(const ExactTreeDistribution& d, const std::vector<std::vector<int>>& sets,
                                  const std::vector<int>& n);

// Event sub-distribution: per-tree mass with 0 <= mass <= prob.
struct EventSubdistribution {
    std::vector<double> mass;
    double probability = 0.0;
    double p_ab = 0.0;        // P[A_T = B_T = 1]
    double beta = 0.0;
    double flow = 0.0;
    double flow_bound = 0.0;  // beta (1 - zeta/3 - eps)
    double zeta = 0.0;
    double eps = 0.0;
    bool asserted = true;     // false in exploratory mode
    std::vector<double> cond_a, cond_b;  // P[e | event] on A and B
    double tv_a = 0.0, tv_b = 0.0;
    ProbeReport report;

    std::vector<double> conditional_marginals(const ExactTreeDistribution& d) const;
};

EventSubdistribution construct_maxflow_event(const ExactTreeDistribution& d, const std::vector<int>& A,
                                             const std::vector<int>& B, double zeta, double eps);

struct BundleClass {
    int bundle = -1;       // index into h.top
    int u = -1, v = -1;    // node indices, -1 = u0, -2 = v0
    int parent = -1;
    double x = 0.0;
    bool half = false;
    bool good = true;
    double p22 = 0.0;      // P[delta(u)=delta(v)=2 | u, v trees]
    std::optional<double> p211_u, p211_v;
    std::vector<Check> bad_conditions;  // only for bad bundles
};

struct PairClass {
    int e = -1, f = -1;  // indices into h.top, sharing node v
    int v = -1;
    double p222 = 0.0;
    bool good = false;
};

struct Classification {
    std::vector<BundleClass> bundles;
    std::vector<PairClass> pairs;
    std::vector<int> bottom;     // bottom bundles, good by definition
    bool bad_theorem_applies = false;
    ProbeReport report;
};

// d must be the tree distribution on h.x (same edge order); u0's degree counts the root edge.
Classification classify_edges(const CutHierarchy& h, const ExactTreeDistribution& d, const AnalysisConstants& c);

nlohmann::json to_json(const EventSubdistribution& e);
nlohmann::json to_json(const Classification& c);

// ---- fixtures ----

struct Fixture {
    std::string name;
    LpSolution split;            // post-split, includes the root edge
    std::vector<int> opt_order;  // u0 first, v0 last
    bool heuristic_opt = false;
};

Fixture fixture_two_triangles();
Fixture fixture_half_ladder();
Fixture fixture_three_blocks(double eps = 5e-6);
std::vector<Fixture> fixture_library();

struct FixtureProbe {
    std::string name;
    std::size_t trees = 0;
    double fit_error = 0.0;
    ProbeReport conditioning;
    ProbeReport sr;
    ProbeReport gurvits;
    std::vector<EventSubdistribution> events;
    std::optional<Classification> classification;
    std::string error;

    int violations() const;
};

// Fits, enumerates and runs every exact check on one fixture. zetas are the
// max-flow parameters tried on each valid (A, B) pair.
FixtureProbe probe_fixture(const Fixture& fx, const AnalysisConstants& c, const std::vector<double>& zetas,
                           double tree_limit = 1e6);

// (A, B) pairs with x(A) = x(B) = 1: triangle and polygon partitions and unit splits of vertex stars.
std::vector<std::pair<std::vector<int>, std::vector<int>>> unit_pairs(const Atlas& atlas, const std::vector<double>& x,
                                                                      double tol = 1e-7);

nlohmann::json to_json(const FixtureProbe& p, bool only_failures = false);

}  // namespace mtsp
