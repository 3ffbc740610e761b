#include "mtsp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include "mtsp/sampler.hpp"

namespace mtsp {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

template <class F>
auto stage(const char* name, std::map<std::string, double>& seconds, F&& f) {
    auto t0 = Clock::now();
    try {
        auto out = f();
        seconds[name] = since(t0);
        return out;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

std::optional<double> known_optimum(const std::string& name, const std::string& path) {
    std::ifstream in(path.empty() ? std::string(MTSP_DATA_DIR) + "/optima.json" : path);
    if (!in) return std::nullopt;
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains(name)) return std::nullopt;
    return j[name].get<double>();
}

bool TourRun::within_three_halves() const {
    for (auto& s : samples)
        if (s.tour.cost > 1.5 * lp.objective + 1e-6) return false;
    return true;
}

TourRun run_tour(const MetricInstance& inst, int samples, std::uint64_t seed, int threads, double fit_eps) {
    TourRun r;
    auto& sec = r.seconds;
    r.lp = stage("lp", sec, [&] { return solve_held_karp(inst); });
    r.split = stage("split", sec, [&] { return split_root(r.lp); });
    r.polytope_violation = stage("polytope", sec, [&] { return check_spanning_tree_polytope(r.split); });
    r.fit = stage("fit", sec, [&] { return fit_lambda(r.split, fit_eps); });
    auto batch = stage("sample", sec, [&] { return sample_batch(r.fit.graph(), samples, seed, threads); });
    r.samples.resize(samples);
    stage("match", sec, [&] {
        auto work = [&](int begin, int end) {
            for (int i = begin; i < end; ++i) r.samples[i] = tour_from_tree(inst, r.split, batch.trees[i]);
        };
        int t = std::max(1, std::min(threads, samples));
        if (t == 1) {
            work(0, samples);
        } else {
            std::vector<std::thread> pool;
            for (int k = 0; k < t; ++k) pool.emplace_back(work, samples * k / t, samples * (k + 1) / t);
            for (auto& th : pool) th.join();
        }
        return 0;
    });
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        sum += r.samples[i].tour.cost;
        if (r.best < 0 || r.samples[i].tour.cost < r.samples[r.best].tour.cost) r.best = i;
    }
    r.mean_cost = samples ? sum / samples : 0.0;
    r.baseline = stage("baseline", sec, [&] { return christofides_baseline(inst); });
    r.opt = inst.optimum_hint;
    return r;
}

AtlasRun run_atlas(const MetricInstance& inst, double eta, int exact_limit) {
    AtlasRun r;
    auto& sec = r.seconds;
    r.lp = stage("lp", sec, [&] { return solve_held_karp(inst); });
    r.split = stage("split", sec, [&] { return split_root(r.lp); });
    r.opt = stage("opt", sec, [&] {
        if (inst.n <= exact_limit) return exact_opt(inst).tour;
        return two_opt(inst, christofides_baseline(inst));
    });
    r.heuristic_opt = inst.n > exact_limit;
    r.atlas = stage("atlas", sec, [&] { return build_atlas(r.split, split_tour_order(r.split, r.opt.order), eta); });
    r.atlas.heuristic_opt = r.heuristic_opt;
    return r;
}

nlohmann::json to_json(const TourRun& r) {
    nlohmann::json j;
    j["lp_objective"] = r.lp.objective;
    j["lp_rounds"] = r.lp.rounds;
    j["polytope_check"] = r.polytope_violation ? "violated" : "pass";
    j["fit"] = {{"max_rel_err", r.fit.max_rel_err},
                {"eps", r.fit.eps},
                {"iterations", r.fit.iterations},
                {"contracted", r.fit.contracted.size()},
                {"deleted", r.fit.deleted.size()}};
    std::vector<double> costs, tree_costs, matching_costs;
    for (auto& s : r.samples) {
        costs.push_back(s.tour.cost);
        tree_costs.push_back(s.tree_cost);
        matching_costs.push_back(s.matching_cost);
    }
    j["samples"] = {{"count", r.samples.size()},
                    {"tour_costs", costs},
                    {"tree_costs", tree_costs},
                    {"matching_costs", matching_costs},
                    {"mean_tour_cost", r.mean_cost}};
    if (r.best >= 0) j["best_tour"] = to_json(r.best_tour());
    j["baseline_tour"] = to_json(r.baseline);
    nlohmann::json ratios;
    if (r.best >= 0 && r.lp.objective > 0) {
        ratios["best_over_lp"] = r.best_tour().cost / r.lp.objective;
        ratios["mean_over_lp"] = r.mean_cost / r.lp.objective;
        ratios["baseline_over_lp"] = r.baseline.cost / r.lp.objective;
    }
    if (r.opt && r.best >= 0) {
        ratios["best_over_opt"] = r.best_tour().cost / *r.opt;
        ratios["mean_over_opt"] = r.mean_cost / *r.opt;
        ratios["baseline_over_opt"] = r.baseline.cost / *r.opt;
        j["opt"] = *r.opt;
    }
    j["ratios"] = ratios;
    j["within_three_halves"] = r.within_three_halves();
    return j;
}

}  // namespace mtsp
