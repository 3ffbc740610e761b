#include "mtsp/cut_atlas.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace mtsp {

namespace {

constexpr double kTol = 1e-9;

NearMinCut make_cut(const VertexSet& side, const std::vector<WEdge>& g) {
    NearMinCut c;
    c.side = side;
    for (int v = 0; v < static_cast<int>(side.size()); ++v)
        if (side[v]) c.vertices.push_back(v);
    c.weight = cut_weight(g, side);
    return c;
}

void sort_cuts(std::vector<NearMinCut>& cuts) {
    std::sort(cuts.begin(), cuts.end(), [](const NearMinCut& a, const NearMinCut& b) {
        if (a.vertices.size() != b.vertices.size()) return a.vertices.size() < b.vertices.size();
        return a.vertices < b.vertices;
    });
}

VertexSet canonical_side(VertexSet s) {
    int k = 0;
    for (char c : s) k += c;
    int n = static_cast<int>(s.size());
    if (2 * k > n || (2 * k == n && s[0]))
        for (auto& c : s) c = !c;
    return s;
}

double global_min_cut(int n, const std::vector<WEdge>& g) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (auto& e : g) {
        w(e.u, e.v) += e.w;
        w(e.v, e.u) += e.w;
    }
    return stoer_wagner(w).best.weight;
}

std::vector<VertexSet> bitmask_cuts(int n, const std::vector<WEdge>& g, double bound, const std::vector<int>& forbidden) {
    if (n > 24) throw std::length_error("bitmask cut enumeration: n too large");
    std::uint32_t forbid = 0;
    for (int v : forbidden) forbid |= 1u << v;
    std::vector<VertexSet> out;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        if (mask & forbid) continue;
        double w = 0.0;
        for (auto& e : g)
            if (((mask >> e.u) ^ (mask >> e.v)) & 1) w += e.w;
        if (w <= bound) {
            VertexSet s(n, 0);
            for (int v = 0; v < n; ++v) s[v] = mask >> v & 1;
            out.push_back(s);
        }
    }
    return out;
}

// Lawler-style partition search: fix the first source vertex, then decide the remaining
// vertices one at a time, pruning whenever the constrained minimum cut exceeds the bound.
std::vector<VertexSet> branch_and_bound_cuts(int n, const std::vector<WEdge>& g, double bound,
                                             const std::vector<int>& forbidden) {
    std::vector<char> forced_out(n, 0);
    for (int v : forbidden) forced_out[v] = 1;
    std::vector<VertexSet> out;
    std::vector<int> state(n, 0);  // 1 in S, -1 outside, 0 undecided
    std::function<void()> recurse = [&]() {
        std::vector<int> src, snk;
        for (int v = 0; v < n; ++v) {
            if (state[v] == 1) src.push_back(v);
            if (state[v] == -1) snk.push_back(v);
        }
        auto c = min_st_cut(n, g, src, snk);
        if (c.weight > bound + 1e-7) return;
        int v = -1;
        for (int u = 0; u < n && v < 0; ++u)
            if (state[u] == 0) v = u;
        if (v < 0) {
            VertexSet s(n, 0);
            for (int u = 0; u < n; ++u) s[u] = state[u] == 1;
            out.push_back(s);
            return;
        }
        state[v] = 1;
        recurse();
        state[v] = -1;
        recurse();
        state[v] = 0;
    };
    for (int i = 0; i < n; ++i) {
        if (forced_out[i]) continue;
        std::fill(state.begin(), state.end(), 0);
        for (int v = 0; v < n; ++v)
            if (forced_out[v] || v < i) state[v] = -1;
        state[i] = 1;
        recurse();
    }
    return out;
}

}  // namespace

std::vector<NearMinCut> enumerate_near_min_cuts(int n, const std::vector<WEdge>& g, double eta,
                                                std::optional<std::pair<int, int>> root_pair, CutMethod method) {
    if (eta < 0) throw std::invalid_argument("enumerate_near_min_cuts: eta must be nonnegative");
    double mc = global_min_cut(n, g);
    if (mc < 2.0 - 1e-6)
        throw InconsistentInput("enumerate_near_min_cuts: minimum cut " + std::to_string(mc) + " is below 2");
    const double bound = 2.0 + eta + kTol;
    std::vector<int> forbidden;
    if (root_pair) {
        forbidden = {root_pair->first, root_pair->second};
    } else {
        forbidden = {0};
    }
    if (method == CutMethod::Auto) method = n <= 14 ? CutMethod::Bitmask : CutMethod::BranchAndBound;
    auto sides = method == CutMethod::Bitmask ? bitmask_cuts(n, g, bound, forbidden)
                                              : branch_and_bound_cuts(n, g, bound, forbidden);
    std::vector<NearMinCut> out;
    for (auto& s : sides) {
        auto c = make_cut(root_pair ? s : canonical_side(s), g);
        if (c.weight <= bound && !c.vertices.empty()) out.push_back(std::move(c));
    }
    sort_cuts(out);
    return out;
}

void assign_intervals(std::vector<NearMinCut>& cuts, const std::vector<int>& pos) {
    for (auto& c : cuts) {
        int lo = 1 << 30, hi = -1;
        for (int v : c.vertices) {
            lo = std::min(lo, pos[v]);
            hi = std::max(hi, pos[v]);
        }
        if (hi - lo + 1 == static_cast<int>(c.vertices.size()))
            c.interval = std::pair<int, int>{lo, hi};
        else
            c.interval.reset();
    }
}

const char* to_string(CrossTag t) {
    switch (t) {
        case CrossTag::Uncrossed: return "uncrossed";
        case CrossTag::LeftOnly: return "left-only";
        case CrossTag::RightOnly: return "right-only";
        case CrossTag::Both: return "both";
    }
    return "?";
}

namespace {

bool crossing(const NearMinCut& a, const NearMinCut& b) {
    bool inter = false, a_only = false, b_only = false;
    for (std::size_t v = 0; v < a.side.size(); ++v) {
        if (a.side[v] && b.side[v]) inter = true;
        if (a.side[v] && !b.side[v]) a_only = true;
        if (!a.side[v] && b.side[v]) b_only = true;
    }
    return inter && a_only && b_only;
}

std::vector<std::vector<int>> components_of(int k, const std::vector<std::pair<int, int>>& edges,
                                            const std::vector<int>& members) {
    UnionFind uf(k);
    for (auto [a, b] : edges) uf.unite(a, b);
    std::map<int, std::vector<int>> groups;
    for (int i : members) groups[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [r, g] : groups) out.push_back(g);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Crossings classify_crossings(const std::vector<NearMinCut>& cuts) {
    const int k = static_cast<int>(cuts.size());
    Crossings c;
    std::vector<char> left(k, 0), right(k, 0);
    for (int i = 0; i < k; ++i)
        if (!cuts[i].interval) c.non_interval.push_back(i);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            if (!cuts[i].interval || !cuts[j].interval || !crossing(cuts[i], cuts[j])) continue;
            int a = i, b = j;
            if (cuts[b].interval->first < cuts[a].interval->first) std::swap(a, b);
            // a starts further left, so a crosses b on the left.
            c.pairs.emplace_back(a, b);
            left[b] = 1;
            right[a] = 1;
        }
    std::vector<int> one_sided;
    for (int i = 0; i < k; ++i) {
        CrossTag t = left[i] && right[i] ? CrossTag::Both
                     : left[i]           ? CrossTag::LeftOnly
                     : right[i]          ? CrossTag::RightOnly
                                         : CrossTag::Uncrossed;
        c.tags.push_back(t);
        if (t == CrossTag::Both)
            c.both_sided.push_back(i);
        else if (cuts[i].interval)
            one_sided.push_back(i);
    }
    std::vector<std::pair<int, int>> kept;
    for (auto [a, b] : c.pairs)
        if (c.tags[a] != CrossTag::Both && c.tags[b] != CrossTag::Both) kept.emplace_back(a, b);
    c.components = components_of(k, kept, one_sided);
    return c;
}

std::optional<Polygon> polygon_of(const std::vector<NearMinCut>& cuts, const std::vector<int>& component, int n,
                                  const std::vector<int>& pos) {
    if (component.size() < 2) return std::nullopt;
    Polygon p;
    p.cuts = component;
    const int k = static_cast<int>(component.size());
    std::map<std::vector<char>, std::vector<int>> classes;
    for (int v = 0; v < n; ++v) {
        std::vector<char> sig(k);
        for (int i = 0; i < k; ++i) sig[i] = cuts[component[i]].side[v];
        classes[sig].push_back(v);
    }
    std::vector<int> root;
    std::vector<std::vector<int>> rest;
    for (auto& [sig, vs] : classes) {
        if (std::none_of(sig.begin(), sig.end(), [](char c) { return c; }))
            root = vs;
        else
            rest.push_back(vs);
    }
    auto first_pos = [&](const std::vector<int>& vs) {
        int m = 1 << 30;
        for (int v : vs) m = std::min(m, pos[v]);
        return m;
    };
    std::sort(rest.begin(), rest.end(), [&](auto& a, auto& b) { return first_pos(a) < first_pos(b); });
    p.atoms.push_back(root);
    for (auto& a : rest) {
        int lo = first_pos(a), hi = -1;
        for (int v : a) hi = std::max(hi, pos[v]);
        if (hi - lo + 1 != static_cast<int>(a.size())) p.atoms_are_intervals = false;
        p.atoms.push_back(a);
    }
    p.atom_of.assign(n, 0);
    for (int i = 0; i < p.m(); ++i)
        for (int v : p.atoms[i]) p.atom_of[v] = i;
    p.union_set.assign(n, 0);
    for (int i = 0; i < k; ++i) {
        const auto& c = cuts[component[i]];
        int l = 1 << 30, r = -1;
        for (int v : c.vertices) {
            l = std::min(l, p.atom_of[v]);
            r = std::max(r, p.atom_of[v] + 1);
            p.union_set[v] = 1;
        }
        p.arcs.emplace_back(l, r);
    }
    auto crosses = [&](int a, int b) {  // a crosses b, a on the left
        auto [la, ra] = p.arcs[a];
        auto [lb, rb] = p.arcs[b];
        return la < lb && lb < ra && ra < rb;
    };
    std::vector<char> crossed_left(k, 0);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            if (a != b && crosses(a, b)) crossed_left[b] = 1;
    for (int i = 0; i < k; ++i) (crossed_left[i] ? p.right : p.left).push_back(i);
    auto contains = [&](int a, int b) { return p.arcs[a].first <= p.arcs[b].first && p.arcs[b].second <= p.arcs[a].second; };
    auto disjoint = [&](int a, int b) { return p.arcs[a].second <= p.arcs[b].first || p.arcs[b].second <= p.arcs[a].first; };
    p.strict_parent.assign(k, -1);
    for (int side = 0; side < 2; ++side) {
        const auto& fam = side == 0 ? p.left : p.right;
        bool laminar = true;
        for (int a : fam)
            for (int b : fam)
                if (a < b && !contains(a, b) && !contains(b, a) && !disjoint(a, b)) laminar = false;
        (side == 0 ? p.left_laminar : p.right_laminar) = laminar;
        for (int a : fam) {
            int best = -1;
            for (int b : fam) {
                if (a == b || !contains(b, a)) continue;
                bool strict = side == 0 ? p.arcs[b].first != p.arcs[a].first : p.arcs[b].second != p.arcs[a].second;
                if (!strict) continue;
                int wb = p.arcs[b].second - p.arcs[b].first;
                if (best < 0 || wb < p.arcs[best].second - p.arcs[best].first) best = b;
            }
            p.strict_parent[a] = best;
        }
    }
    return p;
}

namespace {

double between(const std::vector<WEdge>& x, const std::vector<int>& atom_of, int a, const std::function<bool(int)>& b) {
    double s = 0.0;
    for (auto& e : x) {
        int p = atom_of[e.u], q = atom_of[e.v];
        if ((p == a && b(q)) || (q == a && b(p))) s += e.w;
    }
    return s;
}

}  // namespace

PolygonReport verify_polygon_structure(const Polygon& p, const std::vector<WEdge>& x, double eta) {
    PolygonReport r;
    const double ee = 14.0 * eta;
    const int m = p.m();
    const std::string thm = "polygon structure theorem";
    for (int i = 0; i < m; ++i) {
        int j = (i + 1) % m;
        double w = between(x, p.atom_of, i, [j](int q) { return q == j; });
        r.checks.push_back({"x(E(a" + std::to_string(i) + ",a" + std::to_string(j) + "))", thm, w, 1.0 - ee, false});
    }
    for (int i = 0; i < m; ++i) {
        double w = between(x, p.atom_of, i, [i](int q) { return q != i; });
        r.checks.push_back({"x(delta(a" + std::to_string(i) + "))", thm, w, 2.0 + ee, true});
    }
    if (m > 3) {
        double w = between(x, p.atom_of, 0, [m](int q) { return q >= 2 && q <= m - 2; });
        r.checks.push_back({"x(E(a0,middle atoms))", thm, w, ee, true});
    }
    r.checks.push_back({"x(delta(polygon union))", "polygons are near minimum cuts", cut_weight(x, p.union_set),
                        2.0 + 4.0 * eta, true});
    r.checks.push_back({"x(E(a0,a1))", "root atom edges", between(x, p.atom_of, 0, [](int q) { return q == 1; }),
                        1.0 - 2.0 * eta, false});
    r.checks.push_back({"x(E(a0,a_{m-1}))", "root atom edges",
                        between(x, p.atom_of, 0, [m](int q) { return q == m - 1; }), 1.0 - 2.0 * eta, false});
    for (auto& c : r.checks)
        if (!c.pass()) ++r.violations;
    return r;
}

std::vector<int> CutHierarchy::delta(int node) const { return cut_edges(x, nodes[node].set); }

bool CutHierarchy::is_descendant(int a, int b) const {
    for (int t = a; t >= 0; t = nodes[t].parent)
        if (t == b) return true;
    return false;
}

DegreePartition degree_partition(const CutHierarchy& h, int node, double eps_oneone, double eps_eta) {
    DegreePartition d;
    const auto& u = h.nodes[node];
    auto du = h.delta(node);
    std::set<int> du_set(du.begin(), du.end());
    auto shared = [&](int a) {
        std::vector<int> out;
        for (int e : h.delta(a))
            if (du_set.count(e)) out.push_back(e);
        return out;
    };
    auto mass = [&](const std::vector<int>& es) {
        double s = 0.0;
        for (int e : es) s += h.x[e].w;
        return s;
    };
    std::vector<int> qualifying;
    for (int a = 0; a < static_cast<int>(h.nodes.size()); ++a)
        if (a != node && h.is_descendant(a, node) && mass(shared(a)) >= 1.0 - eps_oneone) qualifying.push_back(a);
    std::vector<int> minimal;
    for (int a : qualifying) {
        bool has_inner = false;
        for (int b : qualifying)
            if (b != a && h.is_descendant(b, a)) has_inner = true;
        if (!has_inner) minimal.push_back(a);
    }
    // Smallest first; ties by vertex order.
    std::sort(minimal.begin(), minimal.end(), [&](int a, int b) {
        if (h.nodes[a].vertices.size() != h.nodes[b].vertices.size())
            return h.nodes[a].vertices.size() < h.nodes[b].vertices.size();
        return h.nodes[a].vertices < h.nodes[b].vertices;
    });
    std::set<int> taken;
    if (minimal.size() >= 2) {
        d.branch = "two";
        d.a = minimal[0];
        d.b = minimal[1];
        d.A = shared(d.a);
        d.B = shared(d.b);
        taken.insert(d.A.begin(), d.A.end());
        taken.insert(d.B.begin(), d.B.end());
        for (int e : du)
            if (!taken.count(e)) d.C.push_back(e);
    } else if (minimal.size() == 1) {
        d.branch = "one";
        d.a = minimal[0];
        d.A = shared(d.a);
        int child = d.a;
        while (h.nodes[child].parent != node) child = h.nodes[child].parent;
        std::set<int> a_set(d.A.begin(), d.A.end());
        for (int e : shared(child))
            if (!a_set.count(e)) d.C.push_back(e);
        std::set<int> c_set(d.C.begin(), d.C.end());
        for (int e : du)
            if (!a_set.count(e) && !c_set.count(e)) d.B.push_back(e);
    } else {
        d.branch = "none";
        // Any split with both sides heavy: largest edges first into the lighter side.
        std::vector<int> order = du;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return h.x[a].w > h.x[b].w; });
        double wa = 0.0, wb = 0.0;
        for (int e : order) {
            if (wa <= wb) {
                d.A.push_back(e);
                wa += h.x[e].w;
            } else {
                d.B.push_back(e);
                wb += h.x[e].w;
            }
        }
    }
    (void)u;
    d.xA = mass(d.A);
    d.xB = mass(d.B);
    d.xC = mass(d.C);
    const std::string ref = "degree partition bounds";
    d.checks.push_back({"x(A) lower", ref, d.xA, 1.0 - eps_oneone, false});
    d.checks.push_back({"x(B) lower", ref, d.xB, 1.0 - eps_oneone, false});
    if (d.branch != "none") {
        d.checks.push_back({"x(A) upper", ref, d.xA, 1.0 + eps_eta, true});
        d.checks.push_back({"x(B) upper", ref, d.xB, 1.0 + eps_eta, true});
    }
    d.checks.push_back({"x(C)", ref, d.xC, 2.0 * eps_oneone + eps_eta, true});
    return d;
}

std::vector<int> split_tour_order(const LpSolution& split, const std::vector<int>& tour) {
    if (split.root_edge < 0) throw std::invalid_argument("split_tour_order: solution is not split");
    const int n = static_cast<int>(tour.size());
    auto it = std::find(tour.begin(), tour.end(), split.split_origin);
    if (it == tour.end() || n + 1 != split.n) throw std::invalid_argument("split_tour_order: tour does not match");
    int start = static_cast<int>(it - tour.begin());
    std::vector<int> out;
    for (int i = 0; i < n; ++i) {
        int v = tour[(start + i) % n];
        out.push_back(v == split.split_origin ? split.u0 : v);
    }
    out.push_back(split.v0);
    return out;
}

int Atlas::violations() const {
    int v = static_cast<int>(crossings.non_interval.size());
    for (auto& r : polygon_reports) v += r.violations;
    for (auto& c : hierarchy_checks)
        if (!c.pass()) ++v;
    return v;
}

namespace {

void build_hierarchy(Atlas& a, const LpSolution& split, double eta) {
    auto& h = a.hierarchy;
    h.n = split.n;
    h.u0 = split.u0;
    h.v0 = split.v0;
    h.x = split.restricted();
    const int n = h.n;
    std::vector<VertexSet> sets;
    std::vector<int> from_polygon;
    auto add = [&](const VertexSet& s, int poly) {
        for (std::size_t i = 0; i < sets.size(); ++i)
            if (sets[i] == s) {
                if (poly >= 0) from_polygon[i] = poly;
                return;
            }
        sets.push_back(s);
        from_polygon.push_back(poly);
    };
    for (const auto& comp : a.crossings.components) {
        if (comp.size() == 1) {
            add(a.cuts[comp[0]].side, -1);
            continue;
        }
        int pi = -1;
        for (std::size_t i = 0; i < a.polygons.size(); ++i)
            if (a.polygons[i].cuts == comp) pi = static_cast<int>(i);
        const auto& p = a.polygons[pi];
        for (int i = 1; i < p.m(); ++i) {
            VertexSet s(n, 0);
            for (int v : p.atoms[i]) s[v] = 1;
            add(s, -1);
        }
        add(p.union_set, pi);
    }
    VertexSet root(n, 1);
    root[h.u0] = root[h.v0] = 0;
    add(root, -1);
    // Sort by size descending so parents precede children.
    std::vector<int> order(sets.size());
    std::iota(order.begin(), order.end(), 0);
    auto size_of = [&](int i) { return std::count(sets[i].begin(), sets[i].end(), 1); };
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) { return size_of(p) > size_of(q); });
    for (int i : order) {
        HierarchyNode node;
        node.set = sets[i];
        for (int v = 0; v < n; ++v)
            if (node.set[v]) node.vertices.push_back(v);
        node.polygon = from_polygon[i];
        node.weight = cut_weight(h.x, node.set);
        h.nodes.push_back(std::move(node));
    }
    const int k = static_cast<int>(h.nodes.size());
    for (int i = 0; i < k; ++i) {
        if (h.nodes[i].set == root) h.root = i;
        for (int j = 0; j < i; ++j) {
            const auto& A = h.nodes[i].set;
            const auto& B = h.nodes[j].set;
            bool inter = false, a_only = false, b_only = false;
            for (int v = 0; v < n; ++v) {
                inter |= A[v] && B[v];
                a_only |= A[v] && !B[v];
                b_only |= !A[v] && B[v];
            }
            if (inter && a_only && b_only)
                throw InternalInconsistency("hierarchy: cuts " + std::to_string(i) + " and " + std::to_string(j) + " cross");
            if (!a_only) h.nodes[i].parent = j;  // j processed in decreasing size, so the last hit is minimal
        }
    }
    for (int i = 0; i < k; ++i)
        if (h.nodes[i].parent >= 0) h.nodes[h.nodes[i].parent].children.push_back(i);
    const double ee = 14.0 * eta;
    auto node_of_set = [&](const std::vector<int>& vs) {
        VertexSet s(n, 0);
        for (int v : vs) s[v] = 1;
        for (int i = 0; i < k; ++i)
            if (h.nodes[i].set == s) return i;
        return -1;
    };
    auto edges_between = [&](const VertexSet& X, const VertexSet& Y) {
        std::vector<int> out;
        for (int e = 0; e < static_cast<int>(h.x.size()); ++e) {
            const auto& w = h.x[e];
            if ((X[w.u] && Y[w.v]) || (X[w.v] && Y[w.u])) out.push_back(e);
        }
        return out;
    };
    for (int i = 0; i < k; ++i) {
        auto& node = h.nodes[i];
        bool by_component = node.polygon >= 0;
        bool by_children = node.children.size() == 2;
        if (by_component) {
            node.kind = NodeKind::Polygon;
            node.ambiguous = by_children;
            const auto& p = a.polygons[node.polygon];
            for (int j = 1; j < p.m(); ++j) node.atom_nodes.push_back(node_of_set(p.atoms[j]));
            VertexSet a0(n, 0), a1(n, 0), al(n, 0);
            for (int v : p.atoms[0]) a0[v] = 1;
            for (int v : p.atoms[1]) a1[v] = 1;
            for (int v : p.atoms[p.m() - 1]) al[v] = 1;
            node.A = edges_between(a1, a0);
            node.B = edges_between(al, a0);
            std::set<int> ab(node.A.begin(), node.A.end());
            ab.insert(node.B.begin(), node.B.end());
            for (int e : h.delta(i))
                if (!ab.count(e)) node.C.push_back(e);
            for (std::size_t j = 0; j + 1 < node.atom_nodes.size(); ++j) {
                VertexSet s1(n, 0), s2(n, 0);
                for (int v : p.atoms[j + 1]) s1[v] = 1;
                for (int v : p.atoms[j + 2]) s2[v] = 1;
                double w = 0.0;
                for (int e : edges_between(s1, s2)) w += h.x[e].w;
                a.hierarchy_checks.push_back({"node " + std::to_string(i) + " x(E(u" + std::to_string(j + 1) + ",u" +
                                                  std::to_string(j + 2) + "))",
                                              "hierarchy atom ordering", w, 1.0 - ee, false});
            }
            if (by_children)
                a.notes.push_back("node " + std::to_string(i) +
                                  " qualifies as polygon by its component and by having two children; component rule applied");
        } else if (by_children) {
            node.kind = NodeKind::Polygon;
            node.triangle = true;
            int X = node.children[0], Y = node.children[1];
            if (h.nodes[X].vertices > h.nodes[Y].vertices) std::swap(X, Y);
            node.atom_nodes = {X, Y};
            VertexSet xs = h.nodes[X].set, ys = h.nodes[Y].set, outside(n, 0);
            for (int v = 0; v < n; ++v) outside[v] = !xs[v] && !ys[v];
            node.A = edges_between(xs, outside);
            node.B = edges_between(ys, outside);
            double w = 0.0;
            for (int e : edges_between(xs, ys)) w += h.x[e].w;
            a.hierarchy_checks.push_back({"node " + std::to_string(i) + " x(E(X,Y))", "hierarchy atom ordering", w,
                                          1.0 - ee, false});
        }
    }
    for (int i = 0; i < k; ++i)
        a.hierarchy_checks.push_back({"node " + std::to_string(i) + " x(delta(S))", "hierarchy near min cut",
                                      h.nodes[i].weight, 2.0 + ee, true});
    // Lowest containing node per edge and the bundles.
    h.edge_parent.assign(h.x.size(), -1);
    for (int e = 0; e < static_cast<int>(h.x.size()); ++e) {
        int best = -1;
        for (int i = 0; i < k; ++i)
            if (h.nodes[i].set[h.x[e].u] && h.nodes[i].set[h.x[e].v] &&
                (best < 0 || h.nodes[i].vertices.size() < h.nodes[best].vertices.size()))
                best = i;
        h.edge_parent[e] = best;
    }
    auto child_containing = [&](int node, int v) {
        for (int c : h.nodes[node].children)
            if (h.nodes[c].set[v]) return c;
        return -1;
    };
    std::map<std::tuple<int, int, int>, int> top_index;
    std::map<int, int> bottom_index;
    for (int e = 0; e < static_cast<int>(h.x.size()); ++e) {
        const auto& w = h.x[e];
        int p = h.edge_parent[e];
        if (p < 0) {
            // Edge at u0 or v0: root pseudo-bundle from the root child to the split vertex.
            int inner = (w.u == h.u0 || w.u == h.v0) ? w.v : w.u;
            int outer = inner == w.v ? w.u : w.v;
            if (h.root < 0 || h.nodes[h.root].kind != NodeKind::Degree || !h.nodes[h.root].set[inner]) continue;
            int c = child_containing(h.root, inner);
            int tag = outer == h.u0 ? -1 : -2;
            auto key = std::make_tuple(h.root, c, tag);
            if (!top_index.count(key)) {
                top_index[key] = static_cast<int>(h.top.size());
                h.top.push_back({c, tag, h.root, {}, 0.0, true});
            }
            auto& b = h.top[top_index[key]];
            b.edges.push_back(e);
            b.x += w.w;
            continue;
        }
        if (h.nodes[p].kind == NodeKind::Polygon) {
            if (!bottom_index.count(p)) {
                bottom_index[p] = static_cast<int>(h.bottom.size());
                h.bottom.push_back({-1, -1, p, {}, 0.0, false});
            }
            auto& b = h.bottom[bottom_index[p]];
            b.edges.push_back(e);
            b.x += w.w;
            continue;
        }
        int cu = child_containing(p, w.u), cv = child_containing(p, w.v);
        if (cu < 0 || cv < 0)
            throw InternalInconsistency("hierarchy: degree cut children do not cover an edge endpoint");
        if (cu > cv) std::swap(cu, cv);
        auto key = std::make_tuple(p, cu, cv);
        if (!top_index.count(key)) {
            top_index[key] = static_cast<int>(h.top.size());
            h.top.push_back({cu, cv, p, {}, 0.0, false});
        }
        auto& b = h.top[top_index[key]];
        b.edges.push_back(e);
        b.x += w.w;
    }
}

}  // namespace

Atlas build_atlas(const LpSolution& split, const std::vector<int>& opt_order, double eta, CutMethod method) {
    if (split.root_edge < 0) throw std::invalid_argument("build_atlas: solution is not split");
    const int n = split.n;
    if (!is_permutation(opt_order, n)) throw std::invalid_argument("build_atlas: tour is not a permutation");
    if (opt_order.front() != split.u0 || opt_order.back() != split.v0)
        throw std::invalid_argument("build_atlas: tour must start at u0 and end at v0");
    Atlas a;
    a.eta = eta;
    a.opt_order = opt_order;
    std::map<std::pair<int, int>, double> z;
    for (auto& e : split.edges) z[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.x / 2.0;
    for (int i = 0; i < n; ++i) {
        int u = opt_order[i], v = opt_order[(i + 1) % n];
        z[{std::min(u, v), std::max(u, v)}] += 0.5;
    }
    for (auto& [k, w] : z) a.z.push_back({k.first, k.second, w});
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[opt_order[i]] = i;
    a.cuts = enumerate_near_min_cuts(n, a.z, eta, std::pair<int, int>{split.u0, split.v0}, method);
    assign_intervals(a.cuts, pos);
    a.crossings = classify_crossings(a.cuts);
    auto x = split.restricted();
    for (const auto& comp : a.crossings.components) {
        auto p = polygon_of(a.cuts, comp, n, pos);
        if (!p) continue;
        if (!p->atoms_are_intervals) a.notes.push_back("polygon with a non-interval atom");
        a.polygon_reports.push_back(verify_polygon_structure(*p, x, eta));
        auto& rep = a.polygon_reports.back();
        rep.checks.push_back({"left hierarchy laminar", "same-hierarchy cuts do not cross", p->left_laminar ? 1.0 : 0.0,
                              1.0, false});
        rep.checks.push_back({"right hierarchy laminar", "same-hierarchy cuts do not cross",
                              p->right_laminar ? 1.0 : 0.0, 1.0, false});
        rep.violations = 0;
        for (auto& c : rep.checks)
            if (!c.pass()) ++rep.violations;
        a.polygons.push_back(std::move(*p));
    }
    build_hierarchy(a, split, eta);
    if (eta >= 0.01) a.notes.push_back("eta >= 1/100: structure theorem preconditions do not hold");
    return a;
}

CutHierarchy build_hierarchy(const LpSolution& split, const std::vector<int>& opt_order, double eta, CutMethod method) {
    return build_atlas(split, opt_order, eta, method).hierarchy;
}

nlohmann::json to_json(const Check& c) {
    return {{"name", c.name}, {"ref", c.ref}, {"value", c.value}, {"bound", c.bound},
            {"kind", c.upper ? "<=" : ">="}, {"margin", c.margin()}, {"pass", c.pass()}};
}

nlohmann::json to_json(const Atlas& a) {
    nlohmann::json j;
    j["eta"] = a.eta;
    j["eps_eta"] = 14.0 * a.eta;
    j["preconditions"] = {{"eta_below_1_100", a.eta < 0.01}, {"eps_eta_is_14_eta", true}};
    j["heuristic_opt"] = a.heuristic_opt;
    j["opt_order"] = a.opt_order;
    nlohmann::json cuts = nlohmann::json::array();
    for (std::size_t i = 0; i < a.cuts.size(); ++i) {
        const auto& c = a.cuts[i];
        nlohmann::json cj{{"vertices", c.vertices}, {"weight", c.weight}, {"tag", to_string(a.crossings.tags[i])}};
        if (c.interval) cj["interval"] = {c.interval->first, c.interval->second};
        cuts.push_back(cj);
    }
    j["cuts"] = cuts;
    j["crossing_pairs"] = a.crossings.pairs;
    j["components"] = a.crossings.components;
    j["both_sided"] = a.crossings.both_sided;
    j["non_interval"] = a.crossings.non_interval;
    nlohmann::json polys = nlohmann::json::array();
    for (std::size_t i = 0; i < a.polygons.size(); ++i) {
        const auto& p = a.polygons[i];
        nlohmann::json checks = nlohmann::json::array();
        for (auto& c : a.polygon_reports[i].checks) checks.push_back(to_json(c));
        polys.push_back({{"cuts", p.cuts},
                         {"atoms", p.atoms},
                         {"arcs", p.arcs},
                         {"left", p.left},
                         {"right", p.right},
                         {"strict_parent", p.strict_parent},
                         {"checks", checks},
                         {"violations", a.polygon_reports[i].violations}});
    }
    j["polygons"] = polys;
    const auto& h = a.hierarchy;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : h.nodes) {
        nodes.push_back({{"vertices", nd.vertices},
                         {"parent", nd.parent},
                         {"children", nd.children},
                         {"kind", nd.kind == NodeKind::Degree ? "degree" : (nd.triangle ? "triangle" : "polygon")},
                         {"ambiguous", nd.ambiguous},
                         {"atoms", nd.atom_nodes},
                         {"A", nd.A},
                         {"B", nd.B},
                         {"C", nd.C},
                         {"weight", nd.weight}});
    }
    auto bundles = [](const std::vector<Bundle>& bs) {
        nlohmann::json out = nlohmann::json::array();
        for (auto& b : bs)
            out.push_back({{"u", b.u}, {"v", b.v}, {"parent", b.parent}, {"edges", b.edges}, {"x", b.x}, {"pseudo", b.pseudo}});
        return out;
    };
    j["hierarchy"] = {{"root", h.root}, {"nodes", nodes}, {"top_bundles", bundles(h.top)},
                      {"bottom_bundles", bundles(h.bottom)}, {"edge_parent", h.edge_parent}};
    nlohmann::json hc = nlohmann::json::array();
    for (auto& c : a.hierarchy_checks) hc.push_back(to_json(c));
    j["hierarchy_checks"] = hc;
    j["notes"] = a.notes;
    j["violations"] = a.violations();
    return j;
}

}  // namespace mtsp
