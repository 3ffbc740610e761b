#include "mtsp/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mtsp {

std::vector<double> FitResult::lambda() const {
    std::vector<double> l;
    for (auto& e : edges) l.push_back(e.w);
    return l;
}

double max_relative_error(const std::vector<double>& p, const std::vector<double>& x) {
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 1e-9) err = std::max(err, std::abs(p[i] - x[i]) / x[i]);
    return err;
}

namespace {

struct Contracted {
    int k;
    std::vector<WEdge> edges;  // aggregated between distinct groups
    std::vector<double> degree;
    double total;
};

Contracted contract(const std::vector<std::vector<int>>& groups, int n, const std::vector<WEdge>& x) {
    std::vector<int> gid(n, -1);
    for (int i = 0; i < static_cast<int>(groups.size()); ++i)
        for (int v : groups[i]) gid[v] = i;
    std::map<std::pair<int, int>, double> agg;
    for (auto& e : x) {
        if (e.w <= 0) continue;
        int a = gid[e.u], b = gid[e.v];
        if (a == b) continue;
        agg[{std::min(a, b), std::max(a, b)}] += e.w;
    }
    Contracted c;
    c.k = static_cast<int>(groups.size());
    c.degree.assign(c.k, 0.0);
    c.total = 0.0;
    for (auto& [key, w] : agg) {
        c.edges.push_back({key.first, key.second, w});
        c.degree[key.first] += w;
        c.degree[key.second] += w;
        c.total += w;
    }
    return c;
}

// min over U containing all of forced of |U| - x(E(U)), plus the minimal minimizer.
std::pair<double, std::vector<int>> min_deficiency(const Contracted& c, const std::vector<int>& forced) {
    MaxFlow<double> f(c.k + 2);
    const int s = c.k, t = c.k + 1;
    for (int i = 0; i < c.k; ++i) {
        f.add_edge(s, i, c.degree[i] / 2.0);
        f.add_edge(i, t, 1.0);
    }
    for (auto& e : c.edges) f.add_edge(e.u, e.v, e.w / 2.0, e.w / 2.0);
    for (int p : forced) f.add_edge(s, p, 1e18);
    double cut = f.run(s, t, 1e-13);
    auto side = f.source_side(s);
    std::vector<int> u;
    for (int i = 0; i < c.k; ++i)
        if (side[i]) u.push_back(i);
    return {cut - c.total, u};
}

}  // namespace

std::vector<std::vector<int>> tight_family(int n, const std::vector<WEdge>& x, double tol) {
    std::vector<std::vector<int>> groups(n), family;
    for (int v = 0; v < n; ++v) groups[v] = {v};
    while (groups.size() > 2) {
        auto c = contract(groups, n, x);
        std::vector<int> best;
        for (auto& e : c.edges) {
            auto [def, u] = min_deficiency(c, {e.u, e.v});
            if (def > 1.0 + tol) continue;
            if (u.size() < 2 || static_cast<int>(u.size()) >= c.k) continue;
            if (best.empty() || u.size() < best.size()) best = u;
        }
        if (best.empty()) break;
        std::vector<int> merged;
        std::vector<char> take(groups.size(), 0);
        for (int i : best) {
            take[i] = 1;
            merged.insert(merged.end(), groups[i].begin(), groups[i].end());
        }
        std::sort(merged.begin(), merged.end());
        std::vector<std::vector<int>> next;
        for (std::size_t i = 0; i < groups.size(); ++i)
            if (!take[i]) next.push_back(groups[i]);
        next.push_back(merged);
        groups.swap(next);
        family.push_back(merged);
    }
    return family;
}

std::pair<double, std::vector<int>> max_polytope_excess(int n, const std::vector<WEdge>& x) {
    std::vector<std::vector<int>> groups(n);
    for (int v = 0; v < n; ++v) groups[v] = {v};
    auto c = contract(groups, n, x);
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<int> witness;
    for (int p = 0; p < n; ++p) {
        auto [def, u] = min_deficiency(c, {p});
        if (1.0 - def > worst) {
            worst = 1.0 - def;
            witness = u;
        }
    }
    return {worst, witness};
}

FitResult fit_lambda(int n, const std::vector<WEdge>& x, double eps, long budget) {
    if (!(eps >= 1e-8)) throw std::invalid_argument("fit_lambda: eps must be at least 1e-8");
    FitResult r;
    r.n = n;
    r.eps = eps;
    std::vector<WEdge> kept;
    for (int i = 0; i < static_cast<int>(x.size()); ++i) {
        if (x[i].w < 0) throw std::invalid_argument("fit_lambda: negative x");
        r.target.push_back(x[i].w);
        if (x[i].w <= 1e-9) {
            r.deleted.push_back(i);
        } else {
            kept.push_back(x[i]);
            if (x[i].w >= 1.0 - 1e-9) r.contracted.push_back(i);
        }
    }
    double total = 0.0;
    for (auto& e : kept) total += e.w;
    if (std::abs(total - (n - 1)) > 1e-7)
        throw std::invalid_argument("fit_lambda: x(E) = " + std::to_string(total) + " differs from n - 1");
    auto [excess, witness] = max_polytope_excess(n, kept);
    if (excess > 1e-7) throw std::invalid_argument("fit_lambda: x is outside the spanning-tree polytope");
    r.tree_sets = tight_family(n, kept);

    r.edges = x;
    for (int i = 0; i < static_cast<int>(x.size()); ++i) r.edges[i].w = x[i].w <= 1e-9 ? 0.0 : x[i].w;
    if (budget < 0) budget = 10000L * static_cast<long>(std::max<std::size_t>(x.size(), 1));

    auto g = r.graph();
    auto p = marginals(g);
    double err = max_relative_error(p, r.target);
    double step = 1.0;
    FitResult best = r;
    best.max_rel_err = err;
    while (err > eps) {
        if (r.iterations >= budget) {
            best.iterations = r.iterations;
            throw NonConvergence("fit_lambda: iteration budget exhausted with max relative error " + std::to_string(err),
                                 best);
        }
        ++r.iterations;
        WeightedGraph trial = g;
        for (std::size_t i = 0; i < trial.edges.size(); ++i)
            if (trial.edges[i].w > 0 && p[i] > 0)
                trial.edges[i].w *= std::exp(step * std::log(r.target[i] / p[i]));
        auto q = marginals(trial);
        double e2 = max_relative_error(q, r.target);
        if (e2 > err && step > 1e-3) {
            step /= 2.0;
            continue;
        }
        g = std::move(trial);
        p = std::move(q);
        err = e2;
        step = std::min(1.0, step * 2.0);
        if (err < best.max_rel_err) {
            best.edges = g.edges;
            best.max_rel_err = err;
        }
    }
    r.edges = g.edges;
    // Scale each block so its largest weight is 1; tree probabilities are unchanged.
    for (const auto& b : blocks(g)) {
        double mx = 0.0;
        for (int e : b.edges) mx = std::max(mx, r.edges[e].w);
        if (mx > 0)
            for (int e : b.edges) r.edges[e].w /= mx;
    }
    r.max_rel_err = max_relative_error(marginals(r.graph()), r.target);
    return r;
}

FitResult fit_lambda(const LpSolution& sol, double eps, long budget) {
    return fit_lambda(sol.n, sol.restricted(), eps, budget);
}

nlohmann::json to_json(const FitResult& f) {
    nlohmann::json j;
    j["lambda"] = f.lambda();
    j["max_rel_err"] = f.max_rel_err;
    j["iterations"] = f.iterations;
    j["eps"] = f.eps;
    j["contracted"] = f.contracted;
    j["deleted"] = f.deleted;
    j["tree_sets"] = f.tree_sets;
    return j;
}

}  // namespace mtsp
