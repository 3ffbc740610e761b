#include "mtsp/graph.hpp"

namespace mtsp {

double cut_weight(const std::vector<WEdge>& edges, const VertexSet& side) {
    double s = 0.0;
    for (auto& e : edges)
        if (side[e.u] != side[e.v]) s += e.w;
    return s;
}

std::vector<int> cut_edges(const std::vector<WEdge>& edges, const VertexSet& side) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        if (side[edges[i].u] != side[edges[i].v]) out.push_back(i);
    return out;
}

std::vector<int> inner_edges(const std::vector<WEdge>& edges, const VertexSet& side) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        if (side[edges[i].u] && side[edges[i].v]) out.push_back(i);
    return out;
}

std::vector<int> components(int n, const std::vector<WEdge>& edges, double min_weight) {
    UnionFind uf(n);
    for (auto& e : edges)
        if (e.w > min_weight) uf.unite(e.u, e.v);
    std::vector<int> label(n, -1), comp(n);
    int k = 0;
    for (int v = 0; v < n; ++v) {
        int r = uf.find(v);
        if (label[r] < 0) label[r] = k++;
        comp[v] = label[r];
    }
    return comp;
}

StoerWagnerResult stoer_wagner(const Eigen::MatrixXd& w0) {
    const int n = static_cast<int>(w0.rows());
    Eigen::MatrixXd w = w0;
    std::vector<std::vector<int>> members(n);
    for (int i = 0; i < n; ++i) members[i] = {i};
    std::vector<int> alive(n);
    std::iota(alive.begin(), alive.end(), 0);
    StoerWagnerResult res;
    res.best.weight = std::numeric_limits<double>::infinity();
    while (alive.size() > 1) {
        const int k = static_cast<int>(alive.size());
        std::vector<double> key(k, 0.0);
        std::vector<char> added(k, 0);
        int prev = -1, last = -1;
        for (int step = 0; step < k; ++step) {
            int sel = -1;
            for (int i = 0; i < k; ++i)
                if (!added[i] && (sel < 0 || key[i] > key[sel])) sel = i;
            added[sel] = 1;
            prev = last;
            last = sel;
            for (int i = 0; i < k; ++i)
                if (!added[i]) key[i] += w(alive[sel], alive[i]);
        }
        MinCut phase;
        phase.weight = key[last];
        phase.side.assign(n, 0);
        for (int v : members[alive[last]]) phase.side[v] = 1;
        if (phase.weight < res.best.weight) res.best = phase;
        res.phases.push_back(std::move(phase));
        int a = alive[prev], b = alive[last];
        for (int i = 0; i < n; ++i) {
            w(a, i) += w(b, i);
            w(i, a) = w(a, i);
        }
        w(a, a) = 0.0;
        members[a].insert(members[a].end(), members[b].begin(), members[b].end());
        alive.erase(alive.begin() + last);
    }
    if (n == 1) res.best = {0.0, VertexSet(1, 1)};
    return res;
}

MinCut min_st_cut(int n, const std::vector<WEdge>& edges, const std::vector<int>& sources,
                  const std::vector<int>& sinks) {
    MaxFlow<double> f(n + 2);
    const int s = n, t = n + 1;
    const double big = 1e18;
    for (auto& e : edges)
        if (e.w > 0) f.add_edge(e.u, e.v, e.w, e.w);
    for (int v : sources) f.add_edge(s, v, big);
    for (int v : sinks) f.add_edge(v, t, big);
    MinCut c;
    c.weight = f.run(s, t, 1e-13);
    auto side = f.source_side(s);
    c.side.assign(side.begin(), side.begin() + n);
    return c;
}

}  // namespace mtsp
