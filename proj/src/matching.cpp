#include "mtsp/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mtsp {

OddSet odd_vertices(int n, const Multigraph& edges) {
    std::vector<int> deg(n, 0);
    for (auto [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    OddSet out;
    for (int v = 0; v < n; ++v)
        if (deg[v] & 1) out.push_back(v);
    return out;
}

Matching min_matching(const Eigen::MatrixXd& cost, const OddSet& odd) {
    const int k = static_cast<int>(odd.size());
    if (k % 2) throw std::invalid_argument("min_matching: odd set has odd cardinality " + std::to_string(k));
    Matching m;
    if (k == 0) return m;
    double maxc = 0.0;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) maxc = std::max(maxc, cost(odd[a], odd[b]));
    // Integer grid: 1e-9 resolution unless that would overflow the dual arithmetic.
    const double scale = std::min(1e9, 1e15 / std::max(maxc, 1.0));
    std::vector<std::int64_t> q;
    std::int64_t qmax = 0;
    std::vector<std::tuple<int, int, std::int64_t>> edges;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            std::int64_t c = std::llround(cost(odd[a], odd[b]) * scale);
            qmax = std::max(qmax, c);
            edges.emplace_back(a, b, c);
        }
    for (auto& [a, b, w] : edges) w = qmax + 1 - w;
    auto mate = max_weight_matching(k, edges, true);
    for (int a = 0; a < k; ++a) {
        if (mate[a] < 0) throw std::logic_error("min_matching: no perfect matching found");
        if (a < mate[a]) {
            m.pairs.emplace_back(odd[a], odd[mate[a]]);
            m.cost += cost(odd[a], odd[mate[a]]);
        }
    }
    return m;
}

Matching min_matching(const MetricInstance& inst, const OddSet& odd) { return min_matching(inst.cost, odd); }

Matching brute_force_matching(const Eigen::MatrixXd& cost, const OddSet& odd) {
    const int k = static_cast<int>(odd.size());
    if (k % 2) throw std::invalid_argument("brute_force_matching: odd cardinality");
    if (k > 24) throw std::length_error("brute_force_matching: too many vertices");
    const std::uint32_t full = (1u << k) - 1;
    std::vector<double> dp(full + 1, std::numeric_limits<double>::infinity());
    std::vector<int> choice(full + 1, -1);
    dp[0] = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (__builtin_popcount(mask) & 1) continue;
        int a = __builtin_ctz(mask);
        for (int b = a + 1; b < k; ++b) {
            if (!(mask >> b & 1)) continue;
            std::uint32_t rest = mask & ~(1u << a) & ~(1u << b);
            double c = dp[rest] + cost(odd[a], odd[b]);
            if (c < dp[mask]) {
                dp[mask] = c;
                choice[mask] = b;
            }
        }
    }
    Matching m;
    m.cost = dp[full];
    for (std::uint32_t mask = full; mask;) {
        int a = __builtin_ctz(mask), b = choice[mask];
        m.pairs.emplace_back(odd[a], odd[b]);
        mask &= ~(1u << a) & ~(1u << b);
    }
    return m;
}

namespace {

bool odd_side(const VertexSet& s, const OddSet& odd) {
    int c = 0;
    for (int v : odd) c += s[v];
    return c & 1;
}

// Gusfield's Gomory-Hu tree: parent and flow value for every non-root vertex.
std::pair<std::vector<int>, std::vector<double>> gomory_hu(int n, const std::vector<WEdge>& y) {
    std::vector<int> parent(n, 0);
    std::vector<double> value(n, 0.0);
    for (int s = 1; s < n; ++s) {
        MaxFlow<double> f(n);
        for (auto& e : y)
            if (e.w > 0) f.add_edge(e.u, e.v, e.w, e.w);
        int t = parent[s];
        value[s] = f.run(s, t, 1e-13);
        auto side = f.source_side(s);
        for (int v = s + 1; v < n; ++v)
            if (side[v] && parent[v] == t) parent[v] = s;
    }
    return {parent, value};
}

}  // namespace

std::optional<VertexSet> ojoin_feasible(int n, const std::vector<WEdge>& y, const OddSet& odd, double tol,
                                        const std::vector<VertexSet>* family) {
    for (auto& e : y)
        if (e.w < 0) throw std::invalid_argument("ojoin_feasible: y must be nonnegative");
    if (odd.size() % 2) throw std::invalid_argument("ojoin_feasible: odd set has odd cardinality");
    auto violated = [&](const VertexSet& s) { return odd_side(s, odd) && cut_weight(y, s) < 1.0 - tol; };
    if (family) {
        for (auto& s : *family)
            if (violated(s)) return s;
        return std::nullopt;
    }
    if (n <= 14) {
        for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
            VertexSet s(n, 0);
            for (int v = 0; v < n; ++v) s[v] = mask >> v & 1;
            if (violated(s)) return s;
        }
        return std::nullopt;
    }
    // The minimum odd cut is a fundamental cut of the Gomory-Hu tree.
    auto [parent, value] = gomory_hu(n, y);
    std::vector<std::vector<int>> kids(n);
    for (int v = 1; v < n; ++v) kids[parent[v]].push_back(v);
    for (int v = 1; v < n; ++v) {
        VertexSet s(n, 0);
        std::vector<int> stack{v};
        while (!stack.empty()) {
            int a = stack.back();
            stack.pop_back();
            s[a] = 1;
            for (int c : kids[a]) stack.push_back(c);
        }
        if (violated(s)) return s;
    }
    return std::nullopt;
}

Tour eulerian_shortcut(const MetricInstance& inst, const Multigraph& edges) {
    const int n = inst.n;
    std::vector<std::vector<std::pair<int, int>>> adj(n);
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
        auto [u, v] = edges[i];
        adj[u].push_back({v, i});
        adj[v].push_back({u, i});
    }
    for (int v = 0; v < n; ++v)
        if (adj[v].size() % 2) throw std::invalid_argument("eulerian_shortcut: vertex " + std::to_string(v) + " has odd degree");
    std::vector<char> used(edges.size(), 0);
    std::vector<std::size_t> ptr(n, 0);
    std::vector<int> stack{0}, circuit;
    while (!stack.empty()) {
        int v = stack.back();
        while (ptr[v] < adj[v].size() && used[adj[v][ptr[v]].second]) ++ptr[v];
        if (ptr[v] == adj[v].size()) {
            circuit.push_back(v);
            stack.pop_back();
        } else {
            auto [w, i] = adj[v][ptr[v]];
            used[i] = 1;
            stack.push_back(w);
        }
    }
    std::reverse(circuit.begin(), circuit.end());
    std::vector<char> seen(n, 0);
    std::vector<int> order;
    for (int v : circuit)
        if (!seen[v]) {
            seen[v] = 1;
            order.push_back(v);
        }
    if (static_cast<int>(order.size()) != n) throw std::invalid_argument("eulerian_shortcut: multigraph is disconnected");
    return make_tour(inst, order);
}

std::vector<std::pair<int, int>> minimum_spanning_tree(const MetricInstance& inst) {
    const int n = inst.n;
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<int> from(n, -1);
    std::vector<char> in(n, 0);
    std::vector<std::pair<int, int>> tree;
    best[0] = 0.0;
    for (int it = 0; it < n; ++it) {
        int v = -1;
        for (int u = 0; u < n; ++u)
            if (!in[u] && (v < 0 || best[u] < best[v])) v = u;
        in[v] = 1;
        if (from[v] >= 0) tree.emplace_back(from[v], v);
        for (int u = 0; u < n; ++u)
            if (!in[u] && inst(v, u) < best[u]) {
                best[u] = inst(v, u);
                from[u] = v;
            }
    }
    return tree;
}

Tour christofides_baseline(const MetricInstance& inst) {
    auto tree = minimum_spanning_tree(inst);
    auto m = min_matching(inst, odd_vertices(inst.n, tree));
    Multigraph g = tree;
    g.insert(g.end(), m.pairs.begin(), m.pairs.end());
    return eulerian_shortcut(inst, g);
}

Multigraph merged_tree(const LpSolution& split, const SpanningTree& t) {
    if (split.root_edge < 0) throw std::invalid_argument("merged_tree: solution is not split");
    auto idx = split.restricted_index();
    Multigraph g;
    auto merge = [&](int v) {
        if (v == split.v0) return split.u0;
        return v > split.v0 ? v - 1 : v;
    };
    for (int e : t.edges) {
        const auto& le = split.edges[idx[e]];
        g.emplace_back(merge(le.u), merge(le.v));
    }
    return g;
}

SampledTour tour_from_tree(const MetricInstance& inst, const LpSolution& split, const SpanningTree& t) {
    auto tree = merged_tree(split, t);
    SampledTour out;
    auto idx = split.restricted_index();
    for (int e : t.edges) out.tree_cost += split.edges[idx[e]].cost;
    auto odd = odd_vertices(inst.n, tree);
    out.odd = static_cast<int>(odd.size());
    auto m = min_matching(inst, odd);
    out.matching_cost = m.cost;
    tree.insert(tree.end(), m.pairs.begin(), m.pairs.end());
    out.tour = eulerian_shortcut(inst, tree);
    return out;
}

nlohmann::json to_json(const Tour& t) { return {{"order", t.order}, {"cost", t.cost}}; }

}  // namespace mtsp
