#include "mtsp/lp.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "mtsp/simplex.hpp"

namespace mtsp {

std::vector<WEdge> LpSolution::support() const {
    std::vector<WEdge> out;
    out.reserve(edges.size());
    for (auto& e : edges) out.push_back({e.u, e.v, e.x});
    return out;
}

std::vector<int> LpSolution::restricted_index() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        if (i != root_edge) out.push_back(i);
    return out;
}

std::vector<WEdge> LpSolution::restricted() const {
    std::vector<WEdge> out;
    for (int i : restricted_index()) out.push_back({edges[i].u, edges[i].v, edges[i].x});
    return out;
}

double LpSolution::degree(int v) const {
    double s = 0.0;
    for (auto& e : edges)
        if (e.u == v || e.v == v) s += e.x;
    return s;
}

namespace {

Eigen::MatrixXd support_matrix(int n, const std::vector<WEdge>& edges) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (auto& e : edges) {
        w(e.u, e.v) += e.w;
        w(e.v, e.u) += e.w;
    }
    return w;
}

// Canonical side: the one not containing vertex 0.
VertexSet canonical(VertexSet s) {
    if (s[0])
        for (auto& c : s) c = !c;
    return s;
}

}  // namespace

std::optional<CutViolation> separate_subtour(const LpSolution& sol, double tol) {
    auto sup = sol.support();
    auto comp = components(sol.n, sup, 0.0);
    int k = *std::max_element(comp.begin(), comp.end()) + 1;
    if (k > 1) {
        VertexSet s(sol.n, 0);
        for (int v = 0; v < sol.n; ++v) s[v] = comp[v] == comp[0];
        return CutViolation{canonical(s), 0.0};
    }
    auto sw = stoer_wagner(support_matrix(sol.n, sup));
    if (sw.best.weight < 2.0 - tol) {
        auto s = canonical(sw.best.side);
        return CutViolation{s, cut_weight(sup, s)};
    }
    return std::nullopt;
}

LpSolution solve_held_karp(const MetricInstance& inst, double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-6)) throw std::invalid_argument("solve_held_karp: tol must lie in [1e-12, 1e-6]");
    const int n = inst.n;
    if (n < 3) throw std::invalid_argument("solve_held_karp: need at least 3 vertices");
    BoundedSimplex lp;
    for (int v = 0; v < n; ++v) lp.add_row(2.0);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            lp.add_column(inst(i, j), 0.0, 1.0, {{i, 1.0}, {j, 1.0}});
            pairs.emplace_back(i, j);
        }
    const int m = static_cast<int>(pairs.size());
    lp.solve();

    LpSolution sol;
    sol.n = n;
    std::set<VertexSet> added;
    auto extract = [&] {
        sol.edges.clear();
        for (int j = 0; j < m; ++j) {
            double x = lp.value(j);
            if (x > 1e-9) sol.edges.push_back({pairs[j].first, pairs[j].second, std::min(x, 1.0), inst(pairs[j].first, pairs[j].second)});
        }
        sol.objective = lp.objective();
        sol.objective_history.push_back(sol.objective);
    };
    extract();
    while (true) {
        ++sol.rounds;
        auto sup = sol.support();
        std::vector<VertexSet> violated;
        auto comp = components(n, sup, 0.0);
        int k = *std::max_element(comp.begin(), comp.end()) + 1;
        if (k > 1) {
            for (int c = 0; c < k; ++c) {
                VertexSet s(n, 0);
                for (int v = 0; v < n; ++v) s[v] = comp[v] == c;
                violated.push_back(canonical(s));
            }
        } else {
            auto sw = stoer_wagner(support_matrix(n, sup));
            sol.final_min_cut = sw.best.weight;
            for (auto& ph : sw.phases)
                if (ph.weight < 2.0 - tol) violated.push_back(canonical(ph.side));
        }
        std::vector<int> slacks;
        for (auto& s : violated) {
            int size = 0;
            for (char c : s) size += c;
            if (size == 0 || size == n || !added.insert(s).second) continue;
            int row = lp.add_row(2.0);
            for (int j = 0; j < m; ++j)
                if (s[pairs[j].first] != s[pairs[j].second]) lp.add_entry(row, j, 1.0);
            slacks.push_back(lp.add_column(0.0, 0.0, BoundedSimplex::kInf, {{row, -1.0}}));
            ++sol.cuts_added;
        }
        if (slacks.empty()) {
            if (k > 1 || sol.final_min_cut < 2.0 - tol)
                throw SolverFailure("separation produced no new cut", lp.iterations());
            break;
        }
        lp.reoptimize(slacks);
        extract();
    }
    sol.simplex_iterations = lp.iterations();
    sol.bland_pivots = lp.bland_pivots();
    for (int j = 0; j < m; ++j) {
        double x = lp.value(j);
        if (x > 0.0 && x <= 1e-9) ++sol.pruned_edges;
    }
    return sol;
}

LpSolution split_root(const LpSolution& sol) {
    if (sol.root_edge >= 0) throw std::invalid_argument("split_root: solution already split");
    LpSolution out = sol;
    const int u = 0;
    const int v0 = sol.n;
    out.n = sol.n + 1;
    out.edges.clear();
    for (auto& e : sol.edges) {
        if (e.u == u || e.v == u) {
            int w = e.u == u ? e.v : e.u;
            out.edges.push_back({u, w, e.x / 2.0, e.cost});
            out.edges.push_back({v0, w, e.x / 2.0, e.cost});
        } else {
            out.edges.push_back(e);
        }
    }
    out.root_edge = static_cast<int>(out.edges.size());
    out.edges.push_back({u, v0, 1.0, 0.0});
    out.split_origin = u;
    out.u0 = u;
    out.v0 = v0;
    double obj = 0.0;
    for (auto& e : out.edges) obj += e.x * e.cost;
    out.objective = obj;
    return out;
}

LpSolution make_split_solution(int n, const std::vector<LpEdge>& edges, int u0, int v0) {
    LpSolution s;
    s.n = n;
    s.edges = edges;
    s.u0 = u0;
    s.v0 = v0;
    s.split_origin = u0;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
        auto& e = edges[i];
        if ((e.u == u0 && e.v == v0) || (e.u == v0 && e.v == u0)) s.root_edge = i;
    }
    if (s.root_edge < 0) {
        s.root_edge = static_cast<int>(s.edges.size());
        s.edges.push_back({u0, v0, 1.0, 0.0});
    }
    for (auto& e : s.edges) s.objective += e.x * e.cost;
    return s;
}

std::optional<CutViolation> check_spanning_tree_polytope(const LpSolution& sol, double tol) {
    const int n = sol.n;
    auto e = sol.restricted();
    double total = 0.0;
    for (auto& w : e) total += w.w;
    if (std::abs(total - (n - 1)) > tol) return CutViolation{VertexSet(n, 1), total};
    auto violation_of = [&](const VertexSet& s) {
        double inside = 0.0;
        int size = 0;
        for (char c : s) size += c;
        for (auto& w : e)
            if (s[w.u] && s[w.v]) inside += w.w;
        return std::pair<double, int>{inside, size};
    };
    if (n <= 14) {
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            VertexSet s(n, 0);
            for (int v = 0; v < n; ++v) s[v] = mask >> v & 1;
            auto [inside, size] = violation_of(s);
            if (inside > size - 1 + tol) return CutViolation{s, inside};
        }
        return std::nullopt;
    }
    // x(E(S)) = (sum of degrees over S - x(delta(S))) / 2, so the constraint reduces to cut
    // conditions once degrees are verified.
    for (int v = 0; v < n; ++v) {
        double d = 0.0;
        for (auto& w : e)
            if (w.u == v || w.v == v) d += w.w;
        double want = (v == sol.u0 || v == sol.v0) ? 1.0 : 2.0;
        if (std::abs(d - want) > tol) {
            VertexSet s(n, 0);
            s[v] = 1;
            return CutViolation{s, d};
        }
    }
    for (int s = 0; s < n; ++s) {
        if (s == sol.u0 || s == sol.v0) continue;
        auto c = min_st_cut(n, e, {s}, {sol.u0, sol.v0});
        if (c.weight < 2.0 - tol) return CutViolation{c.side, violation_of(c.side).first};
    }
    auto c = min_st_cut(n, e, {sol.u0}, {sol.v0});
    if (c.weight < 1.0 - tol) return CutViolation{c.side, violation_of(c.side).first};
    return std::nullopt;
}

nlohmann::json to_json(const LpSolution& sol) {
    nlohmann::json j;
    j["n"] = sol.n;
    auto edges = nlohmann::json::array();
    for (auto& e : sol.edges) edges.push_back({e.u, e.v, e.x});
    j["edges"] = edges;
    j["costs"] = nlohmann::json::array();
    for (auto& e : sol.edges) j["costs"].push_back(e.cost);
    j["root_edge"] = sol.root_edge;
    j["objective"] = sol.objective;
    j["split_origin"] = sol.split_origin;
    j["u0"] = sol.u0;
    j["v0"] = sol.v0;
    j["rounds"] = sol.rounds;
    j["cuts_added"] = sol.cuts_added;
    j["simplex_iterations"] = sol.simplex_iterations;
    j["pruned_edges"] = sol.pruned_edges;
    return j;
}

LpSolution lp_from_json(const nlohmann::json& j) {
    LpSolution s;
    s.n = j.at("n").get<int>();
    const auto& costs = j.contains("costs") ? j["costs"] : nlohmann::json::array();
    int i = 0;
    for (auto& e : j.at("edges")) {
        double c = i < static_cast<int>(costs.size()) ? costs[i].get<double>() : 0.0;
        s.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>(), c});
        ++i;
    }
    s.root_edge = j.at("root_edge").get<int>();
    s.objective = j.at("objective").get<double>();
    s.split_origin = j.value("split_origin", -1);
    s.u0 = j.value("u0", -1);
    s.v0 = j.value("v0", -1);
    return s;
}

}  // namespace mtsp
