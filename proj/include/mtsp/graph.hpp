#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Dense>

namespace mtsp {

struct WEdge {
    int u;
    int v;
    double w;
};

class UnionFind {
public:
    explicit UnionFind(int n) : p_(n), r_(n, 0) { std::iota(p_.begin(), p_.end(), 0); }
    int find(int x) {
        while (p_[x] != x) x = p_[x] = p_[p_[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (r_[a] < r_[b]) std::swap(a, b);
        p_[b] = a;
        if (r_[a] == r_[b]) ++r_[a];
        return true;
    }

private:
    std::vector<int> p_;
    std::vector<int> r_;
};

// Vertex set as a membership mask of length n.
using VertexSet = std::vector<char>;

double cut_weight(const std::vector<WEdge>& edges, const VertexSet& side);
// Edges with exactly one endpoint in side.
std::vector<int> cut_edges(const std::vector<WEdge>& edges, const VertexSet& side);
// Edges with both endpoints in side.
std::vector<int> inner_edges(const std::vector<WEdge>& edges, const VertexSet& side);
std::vector<int> components(int n, const std::vector<WEdge>& edges, double min_weight = 0.0);

struct MinCut {
    double weight;
    VertexSet side;
};

// Deterministic Stoer–Wagner on the dense weight matrix; also returns every cut-of-the-phase.
struct StoerWagnerResult {
    MinCut best;
    std::vector<MinCut> phases;
};
StoerWagnerResult stoer_wagner(const Eigen::MatrixXd& w);

// Dinic max flow over any ordered capacity type (double, integers, exact rationals).
template <class Cap>
class MaxFlow {
public:
    explicit MaxFlow(int n) : g_(n), level_(n), it_(n) {}

    int add_edge(int a, int b, Cap c, Cap rc = Cap(0)) {
        g_[a].push_back({b, static_cast<int>(g_[b].size()), c});
        g_[b].push_back({a, static_cast<int>(g_[a].size()) - 1, rc});
        return static_cast<int>(g_[a].size()) - 1;
    }

    Cap run(int s, int t, Cap eps = Cap(0)) {
        eps_ = eps;
        Cap total(0);
        while (bfs(s, t)) {
            std::fill(it_.begin(), it_.end(), 0);
            while (true) {
                Cap f = dfs(s, t, Cap(-1));
                if (!(f > eps_)) break;
                total = total + f;
            }
        }
        return total;
    }

    // Vertices reachable from s in the residual graph (the minimal source side).
    VertexSet source_side(int s) const {
        VertexSet seen(g_.size(), 0);
        std::vector<int> st{s};
        seen[s] = 1;
        while (!st.empty()) {
            int a = st.back();
            st.pop_back();
            for (auto& e : g_[a])
                if (e.cap > eps_ && !seen[e.to]) {
                    seen[e.to] = 1;
                    st.push_back(e.to);
                }
        }
        return seen;
    }

    Cap residual(int a, int idx) const { return g_[a][idx].cap; }

private:
    struct Arc {
        int to;
        int rev;
        Cap cap;
    };

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<int> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int a = q.front();
            q.pop();
            for (auto& e : g_[a])
                if (e.cap > eps_ && level_[e.to] < 0) {
                    level_[e.to] = level_[a] + 1;
                    q.push(e.to);
                }
        }
        return level_[t] >= 0;
    }

    // limit < 0 means unbounded.
    Cap dfs(int a, int t, Cap limit) {
        if (a == t) return limit;
        for (int& i = it_[a]; i < static_cast<int>(g_[a].size()); ++i) {
            Arc& e = g_[a][i];
            if (!(e.cap > eps_) || level_[e.to] != level_[a] + 1) continue;
            Cap push = (limit < Cap(0) || e.cap < limit) ? e.cap : limit;
            Cap f = dfs(e.to, t, push);
            if (f > eps_) {
                e.cap = e.cap - f;
                g_[e.to][e.rev].cap = g_[e.to][e.rev].cap + f;
                return f;
            }
        }
        return Cap(0);
    }

    std::vector<std::vector<Arc>> g_;
    std::vector<int> level_;
    std::vector<int> it_;
    Cap eps_{0};
};

// Minimum cut separating sources from sinks on an undirected weighted graph;
// side is the inclusion-minimal source side.
MinCut min_st_cut(int n, const std::vector<WEdge>& edges, const std::vector<int>& sources,
                  const std::vector<int>& sinks);

}  // namespace mtsp
