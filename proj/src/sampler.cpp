#include "mtsp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

namespace mtsp {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t a = mix64(seed ^ mix64(stream));
    std::uint64_t b = mix64(a ^ 0x243f6a8885a308d3ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

namespace {

double uniform01(std::mt19937_64& rng) { return std::generate_canonical<double, 64>(rng); }

struct Adjacency {
    std::vector<std::vector<int>> edge;   // incident block edges per node
    std::vector<std::vector<double>> cum; // cumulative weights
};

Adjacency adjacency(const WeightedGraph& g, const Block& b) {
    Adjacency a;
    a.edge.resize(b.nodes);
    a.cum.resize(b.nodes);
    for (int e : b.edges) {
        if (g.edges[e].w <= 0) continue;
        int p = b.node_of[g.edges[e].u], q = b.node_of[g.edges[e].v];
        for (int x : {p, q}) {
            a.edge[x].push_back(e);
            a.cum[x].push_back((a.cum[x].empty() ? 0.0 : a.cum[x].back()) + g.edges[e].w);
        }
    }
    return a;
}

void wilson_block(const WeightedGraph& g, const Block& b, std::mt19937_64& rng, std::vector<int>& out) {
    if (b.nodes <= 1) return;
    auto adj = adjacency(g, b);
    for (int v = 0; v < b.nodes; ++v)
        if (adj.edge[v].empty()) throw DisconnectedGraph("sample_tree: support is disconnected");
    std::vector<char> in_tree(b.nodes, 0);
    std::vector<int> next_edge(b.nodes, -1);
    in_tree[0] = 1;
    for (int start = 1; start < b.nodes; ++start) {
        int v = start;
        while (!in_tree[v]) {
            const auto& cum = adj.cum[v];
            double r = uniform01(rng) * cum.back();
            int k = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
            k = std::min(k, static_cast<int>(cum.size()) - 1);
            int e = adj.edge[v][k];
            next_edge[v] = e;
            int p = b.node_of[g.edges[e].u], q = b.node_of[g.edges[e].v];
            v = p == v ? q : p;
        }
        v = start;
        while (!in_tree[v]) {
            in_tree[v] = 1;
            int e = next_edge[v];
            out.push_back(e);
            int p = b.node_of[g.edges[e].u], q = b.node_of[g.edges[e].v];
            v = p == v ? q : p;
        }
    }
}

void check_connected(const WeightedGraph& g) {
    UnionFind uf(g.n);
    int joined = 0;
    for (auto& e : g.edges)
        if (e.w > 0) joined += uf.unite(e.u, e.v);
    if (joined != g.n - 1) throw DisconnectedGraph("sample_tree: support is disconnected");
}

}  // namespace

SpanningTree sample_tree(const WeightedGraph& g, std::mt19937_64& rng) {
    check_connected(g);
    SpanningTree t;
    for (const auto& b : blocks(g)) wilson_block(g, b, rng, t.edges);
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

SpanningTree sample_tree_conditional(const WeightedGraph& g, std::mt19937_64& rng) {
    check_connected(g);
    SpanningTree t;
    for (const auto& b : blocks(g)) {
        // Work on the block alone: decide edges in order, contracting kept ones.
        WeightedGraph h;
        h.n = b.nodes;
        for (int e : b.edges) h.edges.push_back({b.node_of[g.edges[e].u], b.node_of[g.edges[e].v], g.edges[e].w});
        UnionFind uf(h.n);
        std::vector<int> label(h.n);
        for (std::size_t i = 0; i < b.edges.size(); ++i) {
            // Current graph: kept edges contracted, rejected edges removed.
            for (int v = 0; v < h.n; ++v) label[v] = -1;
            int k = 0;
            std::vector<int> rep(h.n);
            for (int v = 0; v < h.n; ++v) {
                int r = uf.find(v);
                if (label[r] < 0) label[r] = k++;
                rep[v] = label[r];
            }
            const auto& e = h.edges[i];
            if (e.w <= 0 || rep[e.u] == rep[e.v]) continue;
            WeightedGraph cur;
            cur.n = k;
            int self = -1;
            for (std::size_t j = i; j < h.edges.size(); ++j) {
                const auto& f = h.edges[j];
                if (f.w <= 0 || rep[f.u] == rep[f.v]) continue;
                if (j == i) self = static_cast<int>(cur.edges.size());
                cur.edges.push_back({rep[f.u], rep[f.v], f.w});
            }
            double p = marginals(cur)[self];
            if (uniform01(rng) < p) {
                uf.unite(e.u, e.v);
                t.edges.push_back(b.edges[i]);
            } else {
                h.edges[i].w = 0.0;
            }
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

int default_threads() {
    if (const char* env = std::getenv("MAXENT_TSP_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

SampleBatch sample_batch(const WeightedGraph& g, int count, std::uint64_t seed, int threads,
                         const std::vector<double>& edge_cost) {
    SampleBatch batch;
    batch.seed = seed;
    batch.trees.resize(count);
    check_connected(g);
    auto bl = blocks(g);
    auto work = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            auto rng = stream_rng(seed, static_cast<std::uint64_t>(i));
            SpanningTree t;
            for (const auto& b : bl) wilson_block(g, b, rng, t.edges);
            std::sort(t.edges.begin(), t.edges.end());
            batch.trees[i] = std::move(t);
        }
    };
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        work(0, count);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(work, count * k / threads, count * (k + 1) / threads);
        for (auto& th : pool) th.join();
    }
    batch.frequency.assign(g.edges.size(), 0.0);
    std::vector<double> costs;
    for (auto& t : batch.trees) {
        double c = 0.0;
        for (int e : t.edges) {
            batch.frequency[e] += 1.0;
            if (!edge_cost.empty()) c += edge_cost[e];
        }
        costs.push_back(c);
    }
    for (auto& f : batch.frequency) f /= std::max(count, 1);
    if (count > 0) {
        double s = 0.0, s2 = 0.0;
        for (double c : costs) s += c;
        batch.mean_cost = s / count;
        for (double c : costs) s2 += (c - batch.mean_cost) * (c - batch.mean_cost);
        batch.cost_se = count > 1 ? std::sqrt(s2 / (count - 1) / count) : 0.0;
    }
    return batch;
}

double chi_square_sf(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquare chi_square_check(const WeightedGraph& g, int samples, std::uint64_t seed, const Sampler& sampler) {
    auto d = enumerate_trees(g);
    std::map<std::string, int> index;
    for (std::size_t t = 0; t < d.trees.size(); ++t) index[d.trees[t].to_string()] = static_cast<int>(t);
    std::vector<double> observed(d.trees.size(), 0.0);
    for (int i = 0; i < samples; ++i) {
        auto rng = stream_rng(seed, static_cast<std::uint64_t>(i));
        auto t = sampler(rng);
        auto it = index.find(mask_of(t.edges).to_string());
        if (it == index.end()) throw std::logic_error("sampler produced a non-spanning-tree edge set");
        observed[it->second] += 1.0;
    }
    ChiSquare c{0.0, static_cast<int>(d.trees.size()) - 1, 1.0, static_cast<int>(d.trees.size()), samples};
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        double expect = d.prob[t] * samples;
        if (expect > 0) c.statistic += (observed[t] - expect) * (observed[t] - expect) / expect;
    }
    c.p_value = chi_square_sf(c.statistic, c.dof);
    return c;
}

ChiSquare chi_square_check(const WeightedGraph& g, int samples, std::uint64_t seed) {
    return chi_square_check(g, samples, seed, [&g](std::mt19937_64& rng) { return sample_tree(g, rng); });
}

Sampler biased_sampler(const WeightedGraph& g) {
    return [g](std::mt19937_64& rng) {
        std::vector<std::pair<double, int>> order;
        for (int e = 0; e < static_cast<int>(g.edges.size()); ++e)
            if (g.edges[e].w > 0) order.emplace_back(uniform01(rng), e);
        std::sort(order.begin(), order.end());
        UnionFind uf(g.n);
        SpanningTree t;
        for (auto [w, e] : order)
            if (uf.unite(g.edges[e].u, g.edges[e].v)) t.edges.push_back(e);
        std::sort(t.edges.begin(), t.edges.end());
        return t;
    };
}

CostCheck expected_cost_check(const LpSolution& sol, const FitResult& fit, int samples, std::uint64_t seed,
                              int threads) {
    auto idx = sol.restricted_index();
    std::vector<double> cost;
    double cx = 0.0;
    for (int i : idx) {
        cost.push_back(sol.edges[i].cost);
        cx += sol.edges[i].x * sol.edges[i].cost;
    }
    auto batch = sample_batch(fit.graph(), samples, seed, threads, cost);
    CostCheck c;
    c.samples = samples;
    c.mean = batch.mean_cost;  // c(e0) = 0, so c(T + e0) = c(T)
    c.se = batch.cost_se;
    c.c_x = cx;
    c.bias_bound = fit.eps * cx;
    c.deviation = std::abs(c.mean - cx);
    c.pass = c.deviation <= c.bias_bound + 3.0 * c.se + 1e-9 * std::max(1.0, cx);
    return c;
}

nlohmann::json to_json(const ChiSquare& c) {
    return {{"statistic", c.statistic}, {"dof", c.dof}, {"p_value", c.p_value}, {"trees", c.trees}, {"samples", c.samples}};
}

nlohmann::json to_json(const CostCheck& c) {
    return {{"mean", c.mean}, {"se", c.se},   {"c_x", c.c_x},           {"bias_bound", c.bias_bound},
            {"deviation", c.deviation}, {"pass", c.pass}, {"samples", c.samples}};
}

}  // namespace mtsp
