#include "mtsp/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "mtsp/fit.hpp"
#include "mtsp/graph.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/sampler.hpp"

namespace mtsp {

AnalysisConstants::AnalysisConstants(double eta_, double eps_half_)
    : eta(eta_),
      eps_eta(14.0 * eta_),
      eps_half(eps_half_),
      eps_oneone(eps_half_ / 12.0),
      p(0.005 * eps_half_ * eps_half_),
      eps_M(1.0 / 4000.0),
      beta(eta_ / 8.0),
      tau(0.571 * eta_ / 8.0),
      eps_P(3.9e-17) {}

nlohmann::json to_json(const AnalysisConstants& c) {
    return {{"eta", c.eta},     {"eps_eta", c.eps_eta}, {"eps_half", c.eps_half}, {"eps_oneone", c.eps_oneone},
            {"p", c.p},         {"eps_M", c.eps_M},     {"beta", c.beta},         {"tau", c.tau},
            {"eps_P", c.eps_P}};
}

int ProbeReport::violations(double tol) const {
    int v = 0;
    for (auto& c : checks) v += !c.pass(tol);
    return v;
}

void ProbeReport::merge(const ProbeReport& o) {
    checks.insert(checks.end(), o.checks.begin(), o.checks.end());
    notes.insert(notes.end(), o.notes.begin(), o.notes.end());
}

nlohmann::json to_json(const ProbeReport& r, bool only_failures) {
    // One summary row per assertion kind, plus every failing assertion.
    std::map<std::pair<std::string, std::string>, std::pair<int, const Check*>> groups;
    nlohmann::json failures = nlohmann::json::array();
    nlohmann::json all = nlohmann::json::array();
    for (auto& c : r.checks) {
        auto& g = groups[{c.name, c.ref}];
        ++g.first;
        if (!g.second || c.margin() < g.second->margin()) g.second = &c;
        if (!c.pass()) failures.push_back(to_json(c));
        if (!only_failures) all.push_back(to_json(c));
    }
    nlohmann::json summary = nlohmann::json::array();
    for (auto& [key, g] : groups)
        summary.push_back({{"name", key.first},
                           {"ref", key.second},
                           {"count", g.first},
                           {"worst_margin", g.second->margin()},
                           {"worst_value", g.second->value},
                           {"worst_bound", g.second->bound}});
    nlohmann::json j{{"assertions", r.checks.size()},
                     {"violations", r.violations()},
                     {"summary", summary},
                     {"failures", failures},
                     {"notes", r.notes}};
    if (!only_failures) j["checks"] = all;
    return j;
}

// ---- Bernoulli sums ----

std::vector<double> bernoulli_sum_pmf(const std::vector<double>& p) {
    std::vector<double> pmf{1.0};
    for (double q : p) {
        std::vector<double> next(pmf.size() + 1, 0.0);
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            next[k] += pmf[k] * (1.0 - q);
            next[k + 1] += pmf[k] * q;
        }
        pmf.swap(next);
    }
    return pmf;
}

double poisson_pmf(double rate, int k) {
    if (k < 0) return 0.0;
    if (rate <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0));
}

double poisson_tail_at_least(double rate, int k) {
    if (k <= 0) return 1.0;
    if (rate <= 0.0) return 0.0;
    return boost::math::gamma_p(static_cast<double>(k), rate);
}

double exact_value_bound(double q, int k) {
    double best = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= k && l <= q + 1e-12; ++l) {
        double r = std::max(0.0, q - l);
        double v = poisson_pmf(r, k - l);
        double ex = std::max(0.0, q - k);
        if (ex > 0) v *= std::pow(std::max(0.0, 1.0 - r / (k - l + 1)), ex);
        best = std::min(best, v);
    }
    return best;
}

double at_least_ceiling_bound(double q) {
    const int k = static_cast<int>(std::ceil(q - 1e-12));
    double best = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= q + 1e-12; ++l) best = std::min(best, poisson_tail_at_least(std::max(0.0, q - l), k - l));
    return best;
}

BernoulliGrid BernoulliGrid::standard() {
    BernoulliGrid g;
    for (int i = 1; i <= 24; ++i) g.q.push_back(0.05 * i);
    for (int i = 1; i <= 60; ++i) g.mean.push_back(0.1 * i - 0.03);
    for (int i = 1; i <= 60; ++i) g.mean.push_back(0.1 * i);
    g.n = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30};
    return g;
}

namespace {

// Hoeffding-extremal vectors: l ones, m - l copies of (q - l)/(m - l), zeros elsewhere.
std::vector<std::vector<double>> extremal_vectors(double q, int n) {
    std::vector<std::vector<double>> out;
    for (int l = 0; l <= n && l <= q + 1e-12; ++l)
        for (int m = l; m <= n; ++m) {
            std::vector<double> p(n, 0.0);
            std::fill(p.begin(), p.begin() + l, 1.0);
            if (m == l) {
                if (std::abs(q - l) > 1e-12) continue;
            } else {
                double r = (q - l) / (m - l);
                if (r > 1.0 + 1e-12 || r < 0) continue;
                std::fill(p.begin() + l, p.begin() + m, std::min(r, 1.0));
            }
            out.push_back(std::move(p));
        }
    return out;
}

std::optional<std::vector<double>> random_vector(double q, int n, std::mt19937_64& rng) {
    if (q > n) return std::nullopt;
    std::exponential_distribution<double> ex(1.0);
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<double> w(n);
        for (double& x : w) x = ex(rng);
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        bool ok = true;
        for (double& x : w) {
            x = q * x / s;
            if (x > 1.0) ok = false;
        }
        if (ok) return w;
    }
    return std::nullopt;
}

std::vector<std::vector<double>> probe_vectors(double q, int n, int random, std::mt19937_64& rng) {
    auto out = extremal_vectors(q, n);
    for (int i = 0; i < random; ++i)
        if (auto v = random_vector(q, n, rng)) out.push_back(*v);
    return out;
}

}  // namespace

ProbeReport bernoulli_facts(const BernoulliGrid& grid) {
    ProbeReport r;
    std::mt19937_64 rng(grid.seed);
    const std::string parity = "even probability of equal Bernoullis";
    for (int n : grid.n)
        for (int i = 0; i <= 20; ++i) {
            double p = 0.05 * i;
            auto pmf = bernoulli_sum_pmf(std::vector<double>(n, p));
            double even = 0.0;
            for (std::size_t k = 0; k < pmf.size(); k += 2) even += pmf[k];
            double closed = 0.5 * (1.0 + std::pow(1.0 - 2.0 * p, n));
            r.add("|P[even] - closed form|", parity, std::abs(even - closed), 1e-12, true);
        }
    const std::string cor = "parity bound for sums with mean at most 1.2";
    for (double q : grid.q)
        for (int n : grid.n)
            for (auto& p : probe_vectors(q, n, grid.random_vectors, rng)) {
                auto pmf = bernoulli_sum_pmf(p);
                double even = 0.0;
                for (std::size_t k = 0; k < pmf.size(); k += 2) even += pmf[k];
                r.add("P[BS(q) even]", cor, even, 0.5 * (1.0 + std::exp(-2.0 * q)), true);
            }
    const std::string exact = "point mass near the mean";
    const std::string ceil = "at least the ceiling of the mean";
    for (double q : grid.mean)
        for (int n : grid.n) {
            if (q > n) continue;
            for (auto& p : probe_vectors(q, n, grid.random_vectors, rng)) {
                auto pmf = bernoulli_sum_pmf(p);
                for (int k = std::max(0, static_cast<int>(std::floor(q)) - 1); k <= q + 1; ++k) {
                    if (!(k - 1 < q && q < k + 1)) continue;
                    double pk = k < static_cast<int>(pmf.size()) ? pmf[k] : 0.0;
                    r.add("P[X = k]", exact, pk, exact_value_bound(q, k), false);
                }
                int k = static_cast<int>(std::ceil(q - 1e-12));
                double tail = 0.0;
                for (int j = k; j < static_cast<int>(pmf.size()); ++j) tail += pmf[j];
                r.add("P[X >= ceil(q)]", ceil, tail, at_least_ceiling_bound(q), false);
            }
        }
    return r;
}

// ---- exact tree distributions ----

namespace {

EdgeMask inner_mask(const ExactTreeDistribution& d, const VertexSet& s) {
    EdgeMask m;
    for (int e = 0; e < d.edge_count(); ++e)
        if (s[d.endpoints[e].first] && s[d.endpoints[e].second]) m.set(e);
    return m;
}

EdgeMask boundary_mask(const ExactTreeDistribution& d, const VertexSet& s) {
    EdgeMask m;
    for (int e = 0; e < d.edge_count(); ++e)
        if (s[d.endpoints[e].first] != s[d.endpoints[e].second]) m.set(e);
    return m;
}

EdgeMask between_mask(const ExactTreeDistribution& d, const VertexSet& a, const VertexSet& b) {
    EdgeMask m;
    for (int e = 0; e < d.edge_count(); ++e) {
        auto [u, v] = d.endpoints[e];
        if ((a[u] && b[v]) || (a[v] && b[u])) m.set(e);
    }
    return m;
}

double mask_sum(const std::vector<double>& x, const EdgeMask& m) {
    double s = 0.0;
    for (std::size_t e = 0; e < x.size(); ++e)
        if (m[e]) s += x[e];
    return s;
}

int set_size(const VertexSet& s) { return static_cast<int>(std::count(s.begin(), s.end(), 1)); }

std::string set_name(const VertexSet& s) {
    std::string out = "{";
    for (std::size_t v = 0; v < s.size(); ++v)
        if (s[v]) out += (out.size() > 1 ? "," : "") + std::to_string(v);
    return out + "}";
}

std::string edges_name(const std::vector<int>& es) {
    std::string out = "[";
    for (std::size_t i = 0; i < es.size(); ++i) out += (i ? "," : "") + std::to_string(es[i]);
    return out + "]";
}

}  // namespace

ProbeReport verify_tree_conditioning(const ExactTreeDistribution& d, const std::vector<double>& x,
                                     const std::vector<WeightedCut>& cuts, const std::vector<std::vector<int>>& edge_sets,
                                     double tol) {
    if (static_cast<int>(x.size()) != d.edge_count())
        throw InputMismatch("verify_tree_conditioning: x has " + std::to_string(x.size()) + " entries, distribution has " +
                            std::to_string(d.edge_count()) + " edges");
    double worst = 0.0;
    int at = -1;
    for (int e = 0; e < d.edge_count(); ++e)
        if (std::abs(d.marginals[e] - x[e]) > worst) {
            worst = std::abs(d.marginals[e] - x[e]);
            at = e;
        }
    if (worst > tol)
        throw InputMismatch("verify_tree_conditioning: marginal of edge " + std::to_string(at) + " differs from x by " +
                            std::to_string(worst));
    const auto& p = d.marginals;
    ProbeReport r;
    const std::string tree_ref = "near-min cut spans a tree";
    const std::string ext_ref = "conditioning a near-min cut to be a tree";
    std::vector<double> eps_d(cuts.size());
    std::map<VertexSet, int> index;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const auto& s = cuts[i].side;
        index[s] = static_cast<int>(i);
        const int k = set_size(s);
        EdgeMask in = inner_mask(d, s);
        // Slack of the distribution's own marginals; equals x(delta(S)) - 2 when degrees are exactly 2.
        eps_d[i] = std::max(0.0, 2.0 * ((k - 1) - mask_sum(p, in)));
        double ptree = 0.0;
        std::vector<double> cond(d.edge_count(), 0.0);
        for (std::size_t t = 0; t < d.trees.size(); ++t)
            if (count_in(d.trees[t], in) == k - 1) {
                ptree += d.prob[t];
                for (int e = 0; e < d.edge_count(); ++e)
                    if (d.trees[t][e]) cond[e] += d.prob[t];
            }
        const std::string nm = set_name(s);
        r.add("P[" + nm + " tree]", tree_ref, ptree, 1.0 - eps_d[i] / 2.0, false);
        if (ptree <= 0) continue;
        for (double& c : cond) c /= ptree;
        double in_base = 0, in_cond = 0, out_base = 0, out_cond = 0;
        for (int e = 0; e < d.edge_count(); ++e) {
            if (in[e]) {
                r.add("inner edge rises", ext_ref, cond[e], p[e], false);
                r.add("inner edge rise bounded", ext_ref, cond[e], p[e] + eps_d[i] / 2.0, true);
                in_base += p[e];
                in_cond += cond[e];
            } else {
                r.add("outer edge falls", ext_ref, cond[e], p[e], true);
                r.add("outer edge fall bounded", ext_ref, cond[e], p[e] - eps_d[i] / 2.0, false);
                out_base += p[e];
                out_cond += cond[e];
            }
        }
        r.add("E(S) rise bounded", ext_ref, in_cond, in_base + eps_d[i] / 2.0, true);
        r.add("outside fall bounded", ext_ref, out_cond, out_base - eps_d[i] / 2.0, false);
    }

    const std::string pair_ref = "one edge between the halves of a near-min cut";
    for (std::size_t i = 0; i < cuts.size(); ++i)
        for (std::size_t j = i + 1; j < cuts.size(); ++j) {
            const auto& a = cuts[i].side;
            const auto& b = cuts[j].side;
            VertexSet u(a.size(), 0);
            bool disjoint = true;
            for (std::size_t v = 0; v < a.size(); ++v) {
                if (a[v] && b[v]) disjoint = false;
                u[v] = a[v] || b[v];
            }
            if (!disjoint) continue;
            auto it = index.find(u);
            if (it == index.end()) continue;
            EdgeMask m = between_mask(d, a, b);
            double one = 0.0;
            for (std::size_t t = 0; t < d.trees.size(); ++t)
                if (count_in(d.trees[t], m) == 1) one += d.prob[t];
            r.add("P[E(" + set_name(a) + "," + set_name(b) + ") = 1]", pair_ref, one,
                  1.0 - (eps_d[i] + eps_d[j] + eps_d[it->second]) / 2.0, false);
        }

    const std::string empty_ref = "union bound on avoiding a set";
    std::vector<EdgeMask> sets;
    for (auto& s : edge_sets) sets.push_back(mask_of(s));
    for (auto& c : cuts) sets.push_back(boundary_mask(d, c.side));
    for (auto& m : sets) {
        double none = 0.0;
        for (std::size_t t = 0; t < d.trees.size(); ++t)
            if ((d.trees[t] & m).none()) none += d.prob[t];
        r.add("P[T misses A]", empty_ref, none, 1.0 - mask_sum(p, m), false);
    }
    return r;
}

ProbeReport verify_sr_properties(const ExactTreeDistribution& d, const std::vector<std::vector<int>>& sets) {
    ProbeReport r;
    const int m = d.edge_count();
    std::vector<double> joint(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<int> in;
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        in.clear();
        for (int e = 0; e < m; ++e)
            if (d.trees[t][e]) in.push_back(e);
        for (std::size_t a = 0; a < in.size(); ++a)
            for (std::size_t b = a + 1; b < in.size(); ++b) joint[in[a] * m + in[b]] += d.prob[t];
    }
    const std::string na = "negative association";
    for (int e = 0; e < m; ++e)
        for (int f = e + 1; f < m; ++f)
            r.add("P[e,f] <= P[e]P[f]", na, joint[e * m + f], d.marginals[e] * d.marginals[f], true);

    const std::string rank = "rank sequence shape";
    const std::string dom = "stochastic dominance under truncation";
    for (auto& s : sets) {
        EdgeMask a = mask_of(s);
        auto seq = rank_sequence(d, a);
        auto rp = rank_properties(seq);
        r.add("log-concavity", rank, rp.worst_log_concavity, 0.0, false);
        r.add("no internal zeros", rank, rp.no_internal_zeros ? 1.0 : 0.0, 1.0, false);
        r.add("|mode - mean|", rank, std::abs(rp.mode - rp.mean), 1.0, true);
        for (int k = 1; k < static_cast<int>(seq.size()); ++k) {
            double mass = 0.0;
            std::vector<double> cond(s.size(), 0.0);
            for (std::size_t t = 0; t < d.trees.size(); ++t)
                if (count_in(d.trees[t], a) >= k) {
                    mass += d.prob[t];
                    for (std::size_t i = 0; i < s.size(); ++i)
                        if (d.trees[t][s[i]]) cond[i] += d.prob[t];
                }
            if (mass <= 1e-15) break;
            for (std::size_t i = 0; i < s.size(); ++i)
                r.add("P[e | F_T >= k]", dom, cond[i] / mass, d.marginals[s[i]], false);
        }
    }
    return r;
}

GurvitsResult gurvits_bound_check(const ExactTreeDistribution& d, const std::vector<std::vector<int>>& sets,
                                  const std::vector<int>& n) {
    const int m = static_cast<int>(sets.size());
    if (m < 1 || m > 3) throw ContractViolation("gurvits_bound_check: need 1 to 3 sets");
    if (static_cast<int>(n.size()) != m) throw ContractViolation("gurvits_bound_check: one target per set");
    std::set<int> seen;
    for (auto& s : sets)
        for (int e : s) {
            if (e < 0 || e >= d.edge_count()) throw ContractViolation("gurvits_bound_check: edge out of range");
            if (!seen.insert(e).second) throw ContractViolation("gurvits_bound_check: sets are not disjoint");
        }
    for (int k : n)
        if (k < 0) throw ContractViolation("gurvits_bound_check: negative target");
    std::vector<EdgeMask> masks;
    for (auto& s : sets) masks.push_back(mask_of(s));

    GurvitsResult g;
    std::vector<double> ge(1 << m, 0.0), le(1 << m, 0.0);
    const int total = std::accumulate(n.begin(), n.end(), 0);
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        int c[3] = {0, 0, 0};
        bool all = true;
        int sum = 0;
        for (int i = 0; i < m; ++i) {
            c[i] = count_in(d.trees[t], masks[i]);
            all = all && c[i] == n[i];
            sum += c[i];
        }
        if (all) g.all_exact += d.prob[t];
        if (sum == total) g.sum_exact += d.prob[t];
        for (int s = 1; s < (1 << m); ++s) {
            int a = 0, b = 0;
            for (int i = 0; i < m; ++i)
                if (s >> i & 1) {
                    a += c[i];
                    b += n[i];
                }
            if (a >= b) ge[s] += d.prob[t];
            if (a <= b) le[s] += d.prob[t];
        }
    }
    g.eps = 1.0;
    for (int s = 1; s < (1 << m); ++s) g.eps = std::min({g.eps, ge[s], le[s]});
    g.f = std::pow(g.eps, 1 << m);
    int prefix = n[0];
    for (int k = 1; k < m; ++k) {
        g.f /= std::max(n[k], prefix) + 1;
        prefix += n[k];
    }
    std::string name = "P[A_i = n_i] m=" + std::to_string(m) + " n=(";
    for (int i = 0; i < m; ++i) name += (i ? "," : "") + std::to_string(n[i]);
    name += ")";
    g.check = {name, "generalized Gurvits bound", g.all_exact, g.f * g.sum_exact, false};
    return g;
}

// ---- max-flow event ----

std::vector<double> EventSubdistribution::conditional_marginals(const ExactTreeDistribution& d) const {
    std::vector<double> out(d.edge_count(), 0.0);
    if (probability <= 0) return out;
    for (std::size_t t = 0; t < d.trees.size(); ++t)
        if (mass[t] > 0)
            for (int e = 0; e < d.edge_count(); ++e)
                if (d.trees[t][e]) out[e] += mass[t];
    for (double& v : out) v /= probability;
    return out;
}

EventSubdistribution construct_maxflow_event(const ExactTreeDistribution& d, const std::vector<int>& A,
                                             const std::vector<int>& B, double zeta, double eps) {
    using boost::multiprecision::cpp_rational;
    std::set<int> sa(A.begin(), A.end());
    for (int f : B)
        if (sa.count(f)) throw ContractViolation("construct_maxflow_event: A and B intersect");
    if (A.empty() || B.empty()) throw ContractViolation("construct_maxflow_event: empty edge set");
    EdgeMask ma = mask_of(A), mb = mask_of(B);
    const auto& x = d.marginals;
    double ea = mask_sum(x, ma), eb = mask_sum(x, mb);
    if (std::abs(ea - 1.0) > eps + 1e-12 || std::abs(eb - 1.0) > eps + 1e-12)
        throw ContractViolation("construct_maxflow_event: E[A_T] = " + std::to_string(ea) + ", E[B_T] = " +
                                std::to_string(eb) + " outside 1 +- eps");

    EventSubdistribution ev;
    ev.zeta = zeta;
    ev.eps = eps;
    ev.asserted = 300.0 * eps < zeta && zeta < 0.003;
    const int na = static_cast<int>(A.size()), nb = static_cast<int>(B.size());
    std::vector<int> pos(d.edge_count(), -1);
    for (int i = 0; i < na; ++i) pos[A[i]] = i;
    for (int j = 0; j < nb; ++j) pos[B[j]] = j;

    // Joint mass of (e, f) on the event A_T = B_T = 1; each such tree has exactly one pair.
    std::vector<double> joint(static_cast<std::size_t>(na) * nb, 0.0);
    std::vector<int> pair_of(d.trees.size(), -1);
    for (std::size_t t = 0; t < d.trees.size(); ++t) {
        EdgeMask ta = d.trees[t] & ma, tb = d.trees[t] & mb;
        if (ta.count() != 1 || tb.count() != 1) continue;
        int e = static_cast<int>(ta._Find_first()), f = static_cast<int>(tb._Find_first());
        pair_of[t] = pos[e] * nb + pos[f];
        joint[pair_of[t]] += d.prob[t];
        ev.p_ab += d.prob[t];
    }
    if (ev.p_ab <= 0.0) throw DegenerateEvent("construct_maxflow_event: P[A_T = B_T = 1] = 0");
    ev.beta = 0.1 * zeta * zeta / 36.0 / ev.p_ab;
    ev.flow_bound = ev.beta * (1.0 - zeta / 3.0 - eps);

    // Exact max flow: doubles convert to rationals without rounding.
    const int s = 0, t = na + nb + 1;
    MaxFlow<cpp_rational> mf(na + nb + 2);
    const cpp_rational beta(ev.beta), pab(ev.p_ab);
    for (int i = 0; i < na; ++i) mf.add_edge(s, 1 + i, beta * cpp_rational(x[A[i]]));
    for (int j = 0; j < nb; ++j) mf.add_edge(1 + na + j, t, beta * cpp_rational(x[B[j]]));
    std::vector<std::pair<int, int>> arc(static_cast<std::size_t>(na) * nb, {-1, -1});
    std::vector<cpp_rational> y(static_cast<std::size_t>(na) * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            y[i * nb + j] = cpp_rational(joint[i * nb + j]) / pab;
            if (joint[i * nb + j] > 0) arc[i * nb + j] = {1 + i, mf.add_edge(1 + i, 1 + na + j, y[i * nb + j])};
        }
    cpp_rational flow = mf.run(s, t);
    ev.flow = flow.convert_to<double>();

    std::vector<double> ratio(static_cast<std::size_t>(na) * nb, 0.0);
    for (std::size_t k = 0; k < arc.size(); ++k)
        if (arc[k].first >= 0) {
            cpp_rational z = y[k] - mf.residual(arc[k].first, arc[k].second);
            ratio[k] = (z / y[k]).convert_to<double>();
        }
    ev.mass.assign(d.trees.size(), 0.0);
    double forced = 0.0, over = 0.0;
    for (std::size_t k = 0; k < d.trees.size(); ++k) {
        if (pair_of[k] < 0) continue;
        ev.mass[k] = d.prob[k] * ratio[pair_of[k]];
        ev.probability += ev.mass[k];
        forced += ev.mass[k];
        over = std::max(over, ev.mass[k] - d.prob[k]);
    }
    auto cond = ev.conditional_marginals(d);
    for (int e : A) {
        ev.cond_a.push_back(cond[e]);
        ev.tv_a += std::abs(x[e] - cond[e]);
    }
    for (int f : B) {
        ev.cond_b.push_back(cond[f]);
        ev.tv_b += std::abs(x[f] - cond[f]);
    }

    const std::string ref = "max-flow event";
    auto& r = ev.report;
    r.add("mass <= probability", ref, over, 0.0, true);
    r.add("P[A_T = B_T = 1 | event]", ref, ev.probability > 0 ? forced / ev.probability : 0.0, 1.0, false);
    if (ev.asserted) {
        r.add("min cut", ref, ev.flow, ev.flow_bound, false);
        r.add("P[event]", ref, ev.probability, 0.002 * zeta * zeta * (1.0 - zeta / 3.0 - eps), false);
        r.add("TV on A", ref, ev.tv_a, zeta, true);
        r.add("TV on B", ref, ev.tv_b, zeta, true);
    } else {
        r.notes.push_back("exploratory parameters (zeta = " + std::to_string(zeta) + ", eps = " + std::to_string(eps) +
                          "): probability, flow and distortion bounds not asserted");
    }
    return ev;
}

nlohmann::json to_json(const EventSubdistribution& e) {
    return {{"zeta", e.zeta},
            {"eps", e.eps},
            {"asserted", e.asserted},
            {"p_ab", e.p_ab},
            {"beta", e.beta},
            {"flow", e.flow},
            {"flow_bound", e.flow_bound},
            {"probability", e.probability},
            {"tv_a", e.tv_a},
            {"tv_b", e.tv_b},
            {"cond_a", e.cond_a},
            {"cond_b", e.cond_b},
            {"report", to_json(e.report, true)}};
}

// ---- edge classification ----

namespace {

struct NodeMasks {
    EdgeMask delta;
    EdgeMask inner;
    int size = 1;
    int extra = 0;  // root edge at u0 / v0
};

}  // namespace

Classification classify_edges(const CutHierarchy& h, const ExactTreeDistribution& d, const AnalysisConstants& c) {
    if (static_cast<int>(h.x.size()) != d.edge_count())
        throw InputMismatch("classify_edges: hierarchy and distribution have different edge sets");
    for (int e = 0; e < d.edge_count(); ++e) {
        auto [a, b] = d.endpoints[e];
        if (std::minmax(a, b) != std::minmax(h.x[e].u, h.x[e].v))
            throw InputMismatch("classify_edges: edge " + std::to_string(e) + " endpoints differ");
    }
    Classification out;
    out.bad_theorem_applies = c.eps_half <= 0.0005 && c.eps_eta <= c.eps_half * c.eps_half;

    auto masks_of = [&](int node) {
        NodeMasks m;
        if (node < 0) {
            int v = node == -1 ? h.u0 : h.v0;
            for (int e = 0; e < d.edge_count(); ++e)
                if (d.endpoints[e].first == v || d.endpoints[e].second == v) m.delta.set(e);
            m.extra = 1;
            return m;
        }
        const auto& s = h.nodes[node].set;
        m.delta = boundary_mask(d, s);
        m.inner = inner_mask(d, s);
        m.size = set_size(s);
        return m;
    };
    std::map<int, NodeMasks> cache;
    auto masks = [&](int node) -> const NodeMasks& {
        auto it = cache.find(node);
        if (it == cache.end()) it = cache.emplace(node, masks_of(node)).first;
        return it->second;
    };
    auto is_tree = [](const EdgeMask& t, const NodeMasks& m) { return count_in(t, m.inner) == m.size - 1; };
    auto degree = [](const EdgeMask& t, const NodeMasks& m) { return count_in(t, m.delta) + m.extra; };

    for (int b = 0; b < static_cast<int>(h.top.size()); ++b) {
        const Bundle& bu = h.top[b];
        for (int end : {bu.u, bu.v})
            if (end >= 0 && h.nodes[end].parent != bu.parent)
                throw StructuralError("classify_edges: bundle " + std::to_string(b) + " joins non-siblings");
        if (bu.u < 0 && bu.v < 0) throw StructuralError("classify_edges: bundle between u0 and v0");
        if ((bu.u < 0 || bu.v < 0) && bu.parent != h.root)
            throw StructuralError("classify_edges: root bundle below the root");
        BundleClass bc;
        bc.bundle = b;
        bc.u = bu.u;
        bc.v = bu.v;
        bc.parent = bu.parent;
        bc.x = bu.x;
        bc.half = std::abs(bu.x - 0.5) <= c.eps_half;
        const auto& mu = masks(bu.u);
        const auto& mv = masks(bu.v);
        double both_trees = 0.0, both_two = 0.0;
        for (std::size_t t = 0; t < d.trees.size(); ++t) {
            const auto& tr = d.trees[t];
            if (!is_tree(tr, mu) || !is_tree(tr, mv)) continue;
            both_trees += d.prob[t];
            if (degree(tr, mu) == 2 && degree(tr, mv) == 2) both_two += d.prob[t];
        }
        bc.p22 = both_trees > 0 ? both_two / both_trees : 0.0;
        bc.good = !bc.half || bc.p22 >= 3.0 * c.eps_half;
        // 2-1-1 happiness with respect to each real endpoint.
        for (int side = 0; side < 2; ++side) {
            int u = side ? bu.v : bu.u, v = side ? bu.u : bu.v;
            if (u < 0) continue;
            auto part = degree_partition(h, u, c.eps_oneone, c.eps_eta);
            EdgeMask A = mask_of(part.A), B = mask_of(part.B), C = mask_of(part.C);
            const auto& nu = masks(u);
            const auto& nv = masks(v);
            double happy = 0.0;
            for (std::size_t t = 0; t < d.trees.size(); ++t) {
                const auto& tr = d.trees[t];
                if (count_in(tr, A) == 1 && count_in(tr, B) == 1 && count_in(tr, C) == 0 && degree(tr, nv) == 2 &&
                    is_tree(tr, nu) && is_tree(tr, nv))
                    happy += d.prob[t];
            }
            (side ? bc.p211_v : bc.p211_u) = happy;
        }
        out.bundles.push_back(std::move(bc));
    }

    for (int i = 0; i < static_cast<int>(out.bundles.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(out.bundles.size()); ++j) {
            const auto& e = out.bundles[i];
            const auto& f = out.bundles[j];
            if (!e.half || !f.half || e.parent != f.parent) continue;
            int shared = -3;
            for (int a : {e.u, e.v})
                for (int b : {f.u, f.v})
                    if (a == b) shared = a;
            if (shared == -3) continue;
            int u = e.u == shared ? e.v : e.u, w = f.u == shared ? f.v : f.u;
            const auto& mu = masks(u);
            const auto& mv = masks(shared);
            const auto& mw = masks(w);
            double happy = 0.0;
            for (std::size_t t = 0; t < d.trees.size(); ++t) {
                const auto& tr = d.trees[t];
                if (degree(tr, mu) == 2 && degree(tr, mv) == 2 && degree(tr, mw) == 2 && is_tree(tr, mu) &&
                    is_tree(tr, mv) && is_tree(tr, mw))
                    happy += d.prob[t];
            }
            out.pairs.push_back({i, j, shared, happy, happy >= c.p});
        }

    for (int b = 0; b < static_cast<int>(h.bottom.size()); ++b) out.bottom.push_back(b);

    // Necessary conditions for a bad bundle.
    if (!out.bad_theorem_applies) {
        out.report.notes.push_back("bad-bundle conditions skipped: they need eps_half <= 0.0005 and eps_eta <= eps_half^2");
        return out;
    }
    const std::string ref = "bad bundles are rare";
    for (auto& bc : out.bundles) {
        if (bc.good) continue;
        std::vector<Check> conds;
        const std::string nm = "bundle " + std::to_string(bc.bundle);
        conds.push_back({nm + " is half", ref, std::abs(bc.x - 0.5), c.eps_half, true});
        for (int end : {bc.u, bc.v}) {
            if (end < 0) {
                out.report.notes.push_back(nm + ": upward degree of u0/v0 undefined, condition skipped");
                continue;
            }
            const auto& ps = h.nodes[bc.parent].set;
            double up = 0.0;
            for (int e : h.delta(end))
                if (ps[h.x[e].u] != ps[h.x[e].v]) up += h.x[e].w;
            conds.push_back({nm + " x(delta_up(" + std::to_string(end) + "))", ref, up, 0.5 + 9.0 * c.eps_half, true});
        }
        int bad_neighbours = 0;
        for (const auto& other : out.bundles) {
            if (other.bundle == bc.bundle || !other.half || other.good) continue;
            bool touches = false;
            for (int a : {bc.u, bc.v})
                for (int b2 : {other.u, other.v})
                    if (a == b2 && a >= 0) touches = true;
            bad_neighbours += touches;
        }
        conds.push_back({nm + " bad half neighbours", ref, static_cast<double>(bad_neighbours), 0.0, true});
        out.report.checks.insert(out.report.checks.end(), conds.begin(), conds.end());
        bc.bad_conditions = std::move(conds);
    }
    return out;
}

nlohmann::json to_json(const Classification& c) {
    nlohmann::json j;
    auto end_name = [](int v) -> nlohmann::json {
        if (v == -1) return "u0";
        if (v == -2) return "v0";
        return v;
    };
    j["bundles"] = nlohmann::json::array();
    for (auto& b : c.bundles) {
        nlohmann::json o{{"bundle", b.bundle}, {"u", end_name(b.u)}, {"v", end_name(b.v)}, {"parent", b.parent},
                         {"x", b.x},           {"half", b.half},     {"good", b.good},     {"p22", b.p22}};
        if (b.p211_u) o["p211_u"] = *b.p211_u;
        if (b.p211_v) o["p211_v"] = *b.p211_v;
        if (!b.bad_conditions.empty()) {
            o["bad_conditions"] = nlohmann::json::array();
            for (auto& ch : b.bad_conditions) o["bad_conditions"].push_back(to_json(ch));
        }
        j["bundles"].push_back(o);
    }
    j["pairs"] = nlohmann::json::array();
    for (auto& p : c.pairs)
        j["pairs"].push_back({{"e", p.e}, {"f", p.f}, {"shared", end_name(p.v)}, {"p222", p.p222}, {"good", p.good}});
    j["bottom_bundles"] = c.bottom.size();
    j["bad_theorem_applies"] = c.bad_theorem_applies;
    j["report"] = to_json(c.report, true);
    return j;
}

// ---- fixtures ----

Fixture fixture_two_triangles() {
    // u0 = 0, a = 1, b = 2, c = 3, d = 4, v0 = 5
    Fixture f;
    f.name = "two_triangles";
    f.split = make_split_solution(6,
                                  {{1, 2, 1, 0},
                                   {3, 4, 1, 0},
                                   {1, 3, .5, 0},
                                   {2, 4, .5, 0},
                                   {0, 1, .5, 0},
                                   {0, 2, .5, 0},
                                   {3, 5, .5, 0},
                                   {4, 5, .5, 0}},
                                  0, 5);
    f.opt_order = {0, 1, 2, 4, 3, 5};
    return f;
}

Fixture fixture_half_ladder() {
    // u0 = 0, a = 1, b = 2, c = 3, d = 4, v0 = 5
    Fixture f;
    f.name = "half_ladder";
    f.split = make_split_solution(6,
                                  {{0, 1, .5, 0},
                                   {0, 2, .5, 0},
                                   {1, 2, .5, 0},
                                   {1, 3, 1, 0},
                                   {2, 4, 1, 0},
                                   {3, 4, .5, 0},
                                   {3, 5, .5, 0},
                                   {4, 5, .5, 0}},
                                  0, 5);
    f.opt_order = {0, 1, 2, 3, 4, 5};
    return f;
}

Fixture fixture_three_blocks(double eps) {
    // u0 = 0; blocks a, b, c at 1, 5, 9 holding x1..x4; v0 = 13.
    std::vector<LpEdge> es;
    const int base[3] = {1, 5, 9};
    for (int o : base) {
        es.push_back({o, o + 1, 0.5 + eps, 0});
        es.push_back({o, o + 2, 0.5 + eps, 0});
        es.push_back({o + 1, o + 2, 1.0 - 2.0 * eps, 0});
        es.push_back({o + 1, o + 3, 0.5, 0});
        es.push_back({o + 2, o + 3, 0.5, 0});
        es.push_back({o + 3, 0, 1.0 / 3.0, 0});
        es.push_back({o + 3, 13, 1.0 / 3.0, 0});
    }
    for (int i = 0; i < 3; ++i) {
        int o = base[i], q = base[(i + 1) % 3];
        es.push_back({o, q, 0.5 - eps, 0});           // x1 - y1
        es.push_back({o + 3, q + 3, 1.0 / 6.0, 0});   // x4 - y4
    }
    es.push_back({base[0] + 2, base[1] + 1, eps, 0});  // a3 - b2
    es.push_back({base[1] + 2, base[2] + 1, eps, 0});  // b3 - c2
    es.push_back({base[2] + 2, base[0] + 1, eps, 0});  // c3 - a2
    Fixture f;
    f.name = "three_blocks";
    f.split = make_split_solution(14, es, 0, 13);
    f.opt_order = {0, 4, 2, 1, 3, 7, 6, 5, 8, 12, 10, 9, 11, 13};
    return f;
}

namespace {

Fixture from_unsplit(std::string name, int n, const std::vector<LpEdge>& edges, std::vector<int> tour) {
    LpSolution s;
    s.n = n;
    s.edges = edges;
    for (auto& e : s.edges) s.objective += e.x * e.cost;
    Fixture f;
    f.name = std::move(name);
    f.split = split_root(s);
    f.opt_order = split_tour_order(f.split, tour);
    return f;
}

}  // namespace

std::vector<Fixture> fixture_library() {
    std::vector<Fixture> out{fixture_two_triangles(), fixture_half_ladder(), fixture_three_blocks()};
    {
        std::vector<LpEdge> es;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) es.push_back({a, b, 2.0 / 3.0, 1.0});
        out.push_back(from_unsplit("k4", 4, es, {0, 1, 2, 3}));
    }
    {
        std::vector<LpEdge> es;
        for (int a = 0; a < 5; ++a) es.push_back({a, (a + 1) % 5, 1.0, 1.0});
        out.push_back(from_unsplit("c5", 5, es, {0, 1, 2, 3, 4}));
    }
    {
        // Triangular prism: triangles at half, rungs at one.
        std::vector<LpEdge> es;
        for (int i = 0; i < 3; ++i) {
            es.push_back({i, (i + 1) % 3, 0.5, 1.0});
            es.push_back({3 + i, 3 + (i + 1) % 3, 0.5, 1.0});
            es.push_back({i, 3 + i, 1.0, 1.0});
        }
        out.push_back(from_unsplit("prism", 6, es, {0, 1, 2, 5, 4, 3}));
    }
    {
        // Held-Karp solution of the Petersen graph metric (x = 2/3 style, no Hamiltonian cycle).
        MetricInstance inst;
        inst.n = 10;
        inst.name = "petersen";
        inst.cost = Eigen::MatrixXd::Constant(10, 10, 100.0);
        for (int i = 0; i < 10; ++i) inst.cost(i, i) = 0.0;
        for (int i = 0; i < 5; ++i)
            for (auto [a, b] : {std::pair{i, (i + 1) % 5}, std::pair{5 + i, 5 + (i + 2) % 5}, std::pair{i, i + 5}})
                inst.cost(a, b) = inst.cost(b, a) = 1.0;
        metric_completion(inst.cost);
        Fixture f;
        f.name = "petersen";
        f.split = split_root(solve_held_karp(inst));
        f.opt_order = split_tour_order(f.split, exact_opt(inst).tour.order);
        out.push_back(std::move(f));
    }
    {
        auto inst = random_euclidean(11, 9);
        Fixture f;
        f.name = "random-11-9";
        f.split = split_root(solve_held_karp(inst));
        f.opt_order = split_tour_order(f.split, exact_opt(inst).tour.order);
        out.push_back(std::move(f));
    }
    // Averages of k random Hamiltonian cycles; the first cycle plays the tour.
    for (auto [n, k, seed] : std::vector<std::tuple<int, int, int>>{
             {7, 2, 1}, {8, 2, 2}, {8, 3, 3}, {9, 2, 4}, {9, 3, 5}, {10, 2, 6}}) {
        std::mt19937_64 rng(seed);
        std::map<std::pair<int, int>, double> x;
        std::vector<int> first;
        for (int c = 0; c < k; ++c) {
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (int i = n - 1; i > 1; --i) std::swap(order[i], order[1 + rng() % i]);
            if (c == 0) first = order;
            for (int i = 0; i < n; ++i) x[std::minmax(order[i], order[(i + 1) % n])] += 1.0 / k;
        }
        std::vector<LpEdge> es;
        for (auto& [uv, w] : x) es.push_back({uv.first, uv.second, w, 1.0});
        out.push_back(from_unsplit("cycles-" + std::to_string(n) + "-" + std::to_string(k) + "-" + std::to_string(seed), n,
                                   es, first));
    }
    return out;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> unit_pairs(const Atlas& atlas, const std::vector<double>& x,
                                                                      double tol) {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
    std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
    auto sum = [&](const std::vector<int>& s) {
        double v = 0;
        for (int e : s) v += x[e];
        return v;
    };
    auto push = [&](std::vector<int> a, std::vector<int> b) {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a.empty() || b.empty() || std::abs(sum(a) - 1) > tol || std::abs(sum(b) - 1) > tol) return;
        if (b < a) std::swap(a, b);
        if (seen.insert({a, b}).second) out.emplace_back(a, b);
    };
    const auto& h = atlas.hierarchy;
    for (const auto& node : h.nodes)
        if (node.kind == NodeKind::Polygon) push(node.A, node.B);
    const int n = h.n;
    for (int v = 0; v < n; ++v) {
        if (v == h.u0 || v == h.v0) continue;
        std::vector<int> star;
        for (int e = 0; e < static_cast<int>(h.x.size()); ++e)
            if (h.x[e].u == v || h.x[e].v == v) star.push_back(e);
        if (star.size() > 16) continue;
        std::sort(star.begin(), star.end(), [&](int a, int b) { return x[a] > x[b] || (x[a] == x[b] && a < b); });
        const int k = static_cast<int>(star.size());
        for (std::uint32_t mask = 1; mask < (1u << k); mask += 2) {  // always holds the heaviest edge
            std::vector<int> a, b;
            for (int i = 0; i < k; ++i) (mask >> i & 1 ? a : b).push_back(star[i]);
            if (std::abs(sum(a) - 1) <= tol && !b.empty()) {
                push(a, b);
                break;
            }
        }
    }
    return out;
}

int FixtureProbe::violations() const {
    int v = conditioning.violations() + sr.violations() + gurvits.violations();
    for (auto& e : events) v += e.report.violations();
    if (classification) v += classification->report.violations();
    return v + (error.empty() ? 0 : 1);
}

FixtureProbe probe_fixture(const Fixture& fx, const AnalysisConstants& c, const std::vector<double>& zetas,
                           double tree_limit) {
    FixtureProbe out;
    out.name = fx.name;
    try {
        auto fit = fit_lambda(fx.split, 5e-7);
        out.fit_error = fit.max_rel_err;
        auto d = enumerate_trees(fit.graph(), tree_limit);
        out.trees = d.trees.size();
        std::vector<double> x;
        for (auto& e : fx.split.restricted()) x.push_back(e.w);
        const int m = d.edge_count();
        const int n = d.n;

        auto near = enumerate_near_min_cuts(fx.split.n, fx.split.support(), 1.0,
                                            std::make_pair(fx.split.u0, fx.split.v0));
        std::vector<WeightedCut> cuts;
        for (auto& nc : near) cuts.push_back({nc.side, nc.weight - 2.0});

        std::vector<std::vector<int>> stars(n), sets;
        for (int e = 0; e < m; ++e) {
            stars[d.endpoints[e].first].push_back(e);
            stars[d.endpoints[e].second].push_back(e);
        }
        for (auto& s : stars)
            if (!s.empty()) sets.push_back(s);
        for (auto& nc : near) {
            std::vector<int> b;
            for (int e = 0; e < m; ++e)
                if (nc.side[d.endpoints[e].first] != nc.side[d.endpoints[e].second]) b.push_back(e);
            sets.push_back(b);
        }
        std::mt19937_64 rng(mix64(std::hash<std::string>{}(fx.name)));
        for (int i = 0; i < 20; ++i) {
            std::vector<int> s;
            for (int e = 0; e < m; ++e)
                if (rng() % 3 == 0) s.push_back(e);
            if (!s.empty()) sets.push_back(s);
        }
        std::vector<std::vector<int>> empty_sets = sets;
        for (int e = 0; e < m; ++e)
            for (int f = e + 1; f < m; ++f) empty_sets.push_back({e, f});

        out.conditioning = verify_tree_conditioning(d, x, cuts, empty_sets);
        out.sr = verify_sr_properties(d, sets);

        // Generalized Gurvits bound on single edges, and on disjoint pieces of stars.
        for (int e = 0; e < m; ++e) out.gurvits.checks.push_back(gurvits_bound_check(d, {{e}}, {1}).check);
        auto round_mean = [&](const std::vector<int>& s) {
            double v = 0;
            for (int e : s) v += d.marginals[e];
            return static_cast<int>(std::lround(v));
        };
        auto minus = [](std::vector<int> a, const std::vector<std::vector<int>>& bs) {
            for (auto& b : bs)
                a.erase(std::remove_if(a.begin(), a.end(),
                                       [&](int e) { return std::find(b.begin(), b.end(), e) != b.end(); }),
                        a.end());
            return a;
        };
        std::vector<int> verts;
        for (int v = 0; v < n; ++v)
            if (v != fx.split.u0 && v != fx.split.v0 && !stars[v].empty()) verts.push_back(v);
        for (std::size_t i = 0; i < verts.size() && i < 8; ++i) {
            int v = verts[i], w = verts[(i + 1) % verts.size()], z = verts[(i + 2) % verts.size()];
            auto a1 = stars[v];
            auto a2 = minus(stars[w], {a1});
            auto a3 = minus(stars[z], {a1, a2});
            if (!a2.empty()) {
                out.gurvits.checks.push_back(gurvits_bound_check(d, {a1, a2}, {2, round_mean(a2)}).check);
                if (!a3.empty())
                    out.gurvits.checks.push_back(
                        gurvits_bound_check(d, {a1, a2, a3}, {2, round_mean(a2), round_mean(a3)}).check);
            }
        }

        auto atlas = build_atlas(fx.split, fx.opt_order, c.eta);
        out.classification = classify_edges(atlas.hierarchy, d, c);
        for (auto& [A, B] : unit_pairs(atlas, x)) {
            double dev = 0;
            for (auto* s : {&A, &B}) {
                double v = 0;
                for (int e : *s) v += d.marginals[e];
                dev = std::max(dev, std::abs(v - 1.0));
            }
            for (double zeta : zetas) {
                auto ev = construct_maxflow_event(d, A, B, zeta, std::max(dev, 2.0 * c.eps_eta));
                ev.report.notes.push_back("A=" + edges_name(A) + " B=" + edges_name(B));
                out.events.push_back(std::move(ev));
            }
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

nlohmann::json to_json(const FixtureProbe& p, bool only_failures) {
    nlohmann::json j{{"name", p.name},
                     {"trees", p.trees},
                     {"fit_error", p.fit_error},
                     {"violations", p.violations()},
                     {"conditioning", to_json(p.conditioning, only_failures)},
                     {"sr_properties", to_json(p.sr, only_failures)},
                     {"gurvits", to_json(p.gurvits, only_failures)}};
    j["maxflow_events"] = nlohmann::json::array();
    for (auto& e : p.events) j["maxflow_events"].push_back(to_json(e));
    if (p.classification) j["classification"] = to_json(*p.classification);
    if (!p.error.empty()) j["error"] = p.error;
    return j;
}

}  // namespace mtsp
