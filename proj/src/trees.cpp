#include "mtsp/trees.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace mtsp {

namespace {

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::vector<Block> blocks(const WeightedGraph& g) {
    std::vector<std::vector<int>> sets;
    for (auto s : g.tree_sets) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (s.size() >= 2 && static_cast<int>(s.size()) < g.n) sets.push_back(s);
    }
    std::sort(sets.begin(), sets.end(), [](auto& a, auto& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    std::vector<int> all(g.n);
    for (int i = 0; i < g.n; ++i) all[i] = i;
    sets.push_back(all);
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            std::vector<int> common;
            std::set_intersection(sets[i].begin(), sets[i].end(), sets[j].begin(), sets[j].end(),
                                  std::back_inserter(common));
            if (!common.empty() && common.size() != sets[i].size())
                throw std::invalid_argument("tree_sets must be laminar");
        }
    // Smallest containing set for every vertex and edge; sets are ordered by size.
    const int k = static_cast<int>(sets.size());
    std::vector<Block> out(k);
    std::vector<int> parent(k, -1);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (is_subset(sets[i], sets[j])) {
                parent[i] = j;
                break;
            }
    for (int i = 0; i < k; ++i) {
        Block& b = out[i];
        b.vertices = sets[i];
        b.node_of.assign(g.n, -1);
        for (int c = 0; c < i; ++c)
            if (parent[c] == i) {
                for (int v : sets[c]) b.node_of[v] = b.nodes;
                ++b.nodes;
            }
        for (int v : sets[i])
            if (b.node_of[v] < 0) b.node_of[v] = b.nodes++;
    }
    std::vector<int> owner(g.n, -1);
    for (int i = k - 1; i >= 0; --i)
        for (int v : sets[i]) owner[v] = i;
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
        int a = g.edges[e].u, c = g.edges[e].v;
        if (a == c) throw std::invalid_argument("self-loop in weighted graph");
        int s = owner[a];
        while (!std::binary_search(sets[s].begin(), sets[s].end(), c)) s = parent[s];
        out[s].edges.push_back(e);
    }
    return out;
}

namespace {

// Inverse of the reduced Laplacian (node 0 grounded) of one block, weights scaled to max 1.
struct BlockSolve {
    Eigen::MatrixXd inv;
    std::vector<double> scaled;  // per block edge, 0 when deleted
};

BlockSolve solve_block(const WeightedGraph& g, const Block& b) {
    BlockSolve out;
    double mx = 0.0;
    for (int e : b.edges) mx = std::max(mx, g.edges[e].w);
    out.scaled.assign(b.edges.size(), 0.0);
    if (b.nodes <= 1) return out;
    if (mx <= 0.0) throw DisconnectedGraph("block has no positive-weight edges");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(b.nodes, b.nodes);
    for (std::size_t i = 0; i < b.edges.size(); ++i) {
        const auto& e = g.edges[b.edges[i]];
        double w = e.w / mx;
        if (w < 1e-12) continue;
        out.scaled[i] = w;
        int p = b.node_of[e.u], q = b.node_of[e.v];
        L(p, p) += w;
        L(q, q) += w;
        L(p, q) -= w;
        L(q, p) -= w;
    }
    const int m = b.nodes - 1;
    Eigen::MatrixXd red = L.bottomRightCorner(m, m);
    Eigen::LLT<Eigen::MatrixXd> llt(red);
    if (llt.info() != Eigen::Success) throw DisconnectedGraph("reduced Laplacian is singular: support is disconnected");
    out.inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
    double mind = red.diagonal().minCoeff();
    if (!(mind > 0) || !out.inv.allFinite()) throw DisconnectedGraph("reduced Laplacian is singular: support is disconnected");
    // LLT succeeds on nearly singular matrices; detect disconnection combinatorially.
    UnionFind uf(b.nodes);
    int joined = 0;
    for (std::size_t i = 0; i < b.edges.size(); ++i)
        if (out.scaled[i] > 0) joined += uf.unite(b.node_of[g.edges[b.edges[i]].u], b.node_of[g.edges[b.edges[i]].v]);
    if (joined != b.nodes - 1) throw DisconnectedGraph("support is disconnected");
    return out;
}

double resistance(const Eigen::MatrixXd& inv, int p, int q) {
    auto at = [&](int a, int c) { return (a == 0 || c == 0) ? 0.0 : inv(a - 1, c - 1); };
    return at(p, p) + at(q, q) - 2.0 * at(p, q);
}

}  // namespace

std::vector<double> marginals(const WeightedGraph& g) {
    std::vector<double> p(g.edges.size(), 0.0);
    for (const auto& b : blocks(g)) {
        auto s = solve_block(g, b);
        for (std::size_t i = 0; i < b.edges.size(); ++i) {
            if (s.scaled[i] <= 0) continue;
            const auto& e = g.edges[b.edges[i]];
            double r = resistance(s.inv, b.node_of[e.u], b.node_of[e.v]);
            p[b.edges[i]] = std::clamp(s.scaled[i] * r, 0.0, 1.0);
        }
    }
    return p;
}

double tree_count(const WeightedGraph& g) {
    double total = 1.0;
    for (const auto& b : blocks(g)) {
        if (b.nodes <= 1) continue;
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(b.nodes, b.nodes);
        for (int e : b.edges) {
            if (g.edges[e].w <= 0) continue;
            int p = b.node_of[g.edges[e].u], q = b.node_of[g.edges[e].v];
            L(p, p) += 1;
            L(q, q) += 1;
            L(p, q) -= 1;
            L(q, p) -= 1;
        }
        total *= std::round(L.bottomRightCorner(b.nodes - 1, b.nodes - 1).determinant());
    }
    return total;
}

void ExactTreeDistribution::recompute_marginals() {
    marginals.assign(endpoints.size(), 0.0);
    for (std::size_t t = 0; t < trees.size(); ++t)
        for (int e = 0; e < edge_count(); ++e)
            if (trees[t][e]) marginals[e] += prob[t];
}

double ExactTreeDistribution::total() const {
    double s = 0.0;
    for (double p : prob) s += p;
    return s;
}

namespace {

// Spanning trees of one block multigraph, as lists of global edge indices.
void block_trees(const WeightedGraph& g, const Block& b, std::vector<std::vector<int>>& out) {
    std::vector<int> es;
    for (int e : b.edges)
        if (g.edges[e].w > 0) es.push_back(e);
    const int k = b.nodes;
    if (k <= 1) {
        out.push_back({});
        return;
    }
    std::vector<int> chosen;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (static_cast<int>(chosen.size()) == k - 1) {
            out.push_back(chosen);
            return;
        }
        if (i == es.size()) return;
        // Include es[i] if it closes no cycle.
        {
            UnionFind uf(k);
            for (int c : chosen) uf.unite(b.node_of[g.edges[c].u], b.node_of[g.edges[c].v]);
            if (uf.unite(b.node_of[g.edges[es[i]].u], b.node_of[g.edges[es[i]].v])) {
                chosen.push_back(es[i]);
                rec(i + 1);
                chosen.pop_back();
            }
        }
        // Exclude es[i] if the remaining edges can still span.
        UnionFind uf(k);
        int joined = 0;
        for (int c : chosen) joined += uf.unite(b.node_of[g.edges[c].u], b.node_of[g.edges[c].v]);
        for (std::size_t j = i + 1; j < es.size(); ++j)
            joined += uf.unite(b.node_of[g.edges[es[j]].u], b.node_of[g.edges[es[j]].v]);
        if (joined == k - 1) rec(i + 1);
    };
    rec(0);
}

}  // namespace

ExactTreeDistribution enumerate_trees(const WeightedGraph& g, double limit) {
    if (static_cast<int>(g.edges.size()) > kMaxExactEdges)
        throw BudgetExceeded("enumerate_trees: more than " + std::to_string(kMaxExactEdges) + " edges", 0);
    double count = tree_count(g);
    if (count > limit)
        throw BudgetExceeded("enumerate_trees: " + std::to_string(static_cast<long long>(count)) +
                                 " spanning trees exceed the limit",
                             count);
    if (count < 0.5) throw DisconnectedGraph("enumerate_trees: no spanning tree");
    ExactTreeDistribution d;
    d.n = g.n;
    for (auto& e : g.edges) d.endpoints.emplace_back(e.u, e.v);
    std::vector<EdgeMask> partial{EdgeMask{}};
    std::vector<double> weight{1.0};
    double mx = 0.0;
    for (auto& e : g.edges) mx = std::max(mx, e.w);
    for (const auto& b : blocks(g)) {
        std::vector<std::vector<int>> ts;
        block_trees(g, b, ts);
        if (ts.empty()) throw DisconnectedGraph("enumerate_trees: block without spanning tree");
        std::vector<EdgeMask> np;
        std::vector<double> nw;
        np.reserve(partial.size() * ts.size());
        for (std::size_t i = 0; i < partial.size(); ++i)
            for (auto& t : ts) {
                EdgeMask m = partial[i];
                double w = weight[i];
                for (int e : t) {
                    m.set(e);
                    w *= g.edges[e].w / mx;
                }
                np.push_back(m);
                nw.push_back(w);
            }
        partial.swap(np);
        weight.swap(nw);
    }
    double z = 0.0;
    for (double w : weight) z += w;
    d.trees = std::move(partial);
    d.prob.resize(weight.size());
    for (std::size_t i = 0; i < weight.size(); ++i) d.prob[i] = weight[i] / z;
    d.recompute_marginals();
    return d;
}

bool spans_as_tree(const ExactTreeDistribution& d, const EdgeMask& t, const VertexSet& s) {
    int size = 0;
    for (char c : s) size += c;
    if (size <= 1) return true;
    UnionFind uf(d.n);
    int inside = 0;
    for (int e = 0; e < d.edge_count(); ++e) {
        if (!t[e]) continue;
        auto [a, b] = d.endpoints[e];
        if (s[a] && s[b]) {
            ++inside;
            uf.unite(a, b);
        }
    }
    if (inside != size - 1) return false;
    int root = -1;
    for (int v = 0; v < d.n; ++v)
        if (s[v]) {
            if (root < 0) root = uf.find(v);
            else if (uf.find(v) != root) return false;
        }
    return true;
}

ExactTreeDistribution condition(const ExactTreeDistribution& d, const Constraint& c) {
    ExactTreeDistribution out;
    out.n = d.n;
    out.endpoints = d.endpoints;
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        bool keep = std::visit(
            [&](auto&& k) -> bool {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, EdgeIn>) return d.trees[t][k.e];
                else if constexpr (std::is_same_v<K, EdgeOut>) return !d.trees[t][k.e];
                else return spans_as_tree(d, d.trees[t], k.s);
            },
            c);
        if (keep && d.prob[t] > 0) {
            out.trees.push_back(d.trees[t]);
            out.prob.push_back(d.prob[t]);
        }
    }
    double z = out.total();
    if (out.trees.empty() || z <= 0) throw EmptySupport("condition: constraint has probability zero");
    for (double& p : out.prob) p /= z;
    out.recompute_marginals();
    return out;
}

double product_form_gap(const ExactTreeDistribution& d, const VertexSet& s) {
    EdgeMask inner;
    for (int e = 0; e < d.edge_count(); ++e)
        if (s[d.endpoints[e].first] && s[d.endpoints[e].second]) inner.set(e);
    std::map<std::string, double> pa, pb;
    std::map<std::pair<std::string, std::string>, double> pab;
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        auto a = (d.trees[t] & inner).to_string();
        auto b = (d.trees[t] & ~inner).to_string();
        pa[a] += d.prob[t];
        pb[b] += d.prob[t];
        pab[{a, b}] += d.prob[t];
    }
    double gap = 0.0;
    for (auto& [a, p] : pa)
        for (auto& [b, q] : pb) {
            auto it = pab.find({a, b});
            double joint = it == pab.end() ? 0.0 : it->second;
            gap = std::max(gap, std::abs(joint - p * q));
        }
    return gap;
}

EdgeMask mask_of(const std::vector<int>& edges) {
    EdgeMask m;
    for (int e : edges) m.set(e);
    return m;
}

int count_in(const EdgeMask& t, const EdgeMask& a) { return static_cast<int>((t & a).count()); }

std::vector<double> rank_sequence(const ExactTreeDistribution& d, const EdgeMask& a) {
    std::vector<double> seq(a.count() + 1, 0.0);
    for (std::size_t t = 0; t < d.trees.size(); ++t) seq[count_in(d.trees[t], a)] += d.prob[t];
    return seq;
}

RankProperties rank_properties(const std::vector<double>& seq, double tol) {
    RankProperties r{true, true, true, 0.0, 0, 1.0};
    const int k = static_cast<int>(seq.size());
    for (int i = 0; i < k; ++i) {
        r.mean += i * seq[i];
        if (seq[i] > seq[r.mode]) r.mode = i;
    }
    for (int i = 1; i + 1 < k; ++i) {
        double lc = seq[i] * seq[i] - seq[i - 1] * seq[i + 1];
        r.worst_log_concavity = std::min(r.worst_log_concavity, lc);
        if (lc < -tol) r.log_concave = false;
    }
    int first = -1, last = -1;
    for (int i = 0; i < k; ++i)
        if (seq[i] > tol) {
            if (first < 0) first = i;
            last = i;
        }
    for (int i = first; i >= 0 && i <= last; ++i)
        if (seq[i] <= tol) r.no_internal_zeros = false;
    r.mode_near_mean = std::abs(r.mode - r.mean) <= 1.0 + tol;
    return r;
}

double prob_where(const ExactTreeDistribution& d, const std::function<bool(const EdgeMask&)>& pred) {
    double s = 0.0;
    for (std::size_t t = 0; t < d.trees.size(); ++t)
        if (pred(d.trees[t])) s += d.prob[t];
    return s;
}

nlohmann::json to_json(const ExactTreeDistribution& d, int max_trees) {
    nlohmann::json j;
    j["n"] = d.n;
    j["edges"] = nlohmann::json::array();
    for (auto [a, b] : d.endpoints) j["edges"].push_back({a, b});
    j["tree_count"] = d.trees.size();
    j["marginals"] = d.marginals;
    j["trees"] = nlohmann::json::array();
    for (std::size_t t = 0; t < d.trees.size() && static_cast<int>(t) < max_trees; ++t) {
        std::vector<int> es;
        for (int e = 0; e < d.edge_count(); ++e)
            if (d.trees[t][e]) es.push_back(e);
        j["trees"].push_back({{"edges", es}, {"p", d.prob[t]}});
    }
    return j;
}

}  // namespace mtsp
