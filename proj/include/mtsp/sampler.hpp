#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <json.hpp>

#include "mtsp/fit.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/trees.hpp"

namespace mtsp {

struct SpanningTree {
    std::vector<int> edges;  // sorted edge indices into the sampled graph
};

// Per-stream generator: the stream key is mixed with the seed, so sample i of a batch
// gets the same state regardless of how the batch is split across threads.
std::uint64_t mix64(std::uint64_t x);
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

SpanningTree sample_tree(const WeightedGraph& g, std::mt19937_64& rng);
// Sequential conditional sampler (one factorization per edge decision); cross-check path.
SpanningTree sample_tree_conditional(const WeightedGraph& g, std::mt19937_64& rng);

int default_threads();

struct SampleBatch {
    std::uint64_t seed = 0;
    std::vector<SpanningTree> trees;
    std::vector<double> frequency;  // per edge
    double mean_cost = 0.0;
    double cost_se = 0.0;
};

SampleBatch sample_batch(const WeightedGraph& g, int count, std::uint64_t seed, int threads = 1,
                         const std::vector<double>& edge_cost = {});

using Sampler = std::function<SpanningTree(std::mt19937_64&)>;

struct ChiSquare {
    double statistic;
    int dof;
    double p_value;
    int trees;
    int samples;
};
double chi_square_sf(double statistic, int dof);
ChiSquare chi_square_check(const WeightedGraph& g, int samples, std::uint64_t seed);
ChiSquare chi_square_check(const WeightedGraph& g, int samples, std::uint64_t seed, const Sampler& sampler);
// Deliberately wrong sampler: minimum spanning tree under i.i.d. uniform edge weights.
Sampler biased_sampler(const WeightedGraph& g);

struct CostCheck {
    double mean;
    double se;
    double c_x;
    double bias_bound;  // eps * c(x)
    double deviation;
    bool pass;
    int samples;
};
CostCheck expected_cost_check(const LpSolution& sol, const FitResult& fit, int samples, std::uint64_t seed,
                              int threads = 1);

nlohmann::json to_json(const ChiSquare& c);
nlohmann::json to_json(const CostCheck& c);

}  // namespace mtsp
