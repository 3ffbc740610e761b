#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtsp/cut_atlas.hpp"
#include "mtsp/fit.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/pipeline.hpp"
#include "mtsp/probe.hpp"
#include "mtsp/sampler.hpp"

using namespace mtsp;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::string command;
    std::string instance;
    int random_n = 0;
    std::uint64_t seed = 1;
    double eta = 1e-3;
    double fit_eps = 1e-4;
    int samples = 200;
    int threads = 1;
    std::string out;
    std::string fixture;
    bool verbose = false;
};

json echo(const RunConfig& c) {
    json j{{"command", c.command}, {"seed", c.seed}, {"eta", c.eta},         {"fit_eps", c.fit_eps},
           {"samples", c.samples}, {"threads", c.threads}};
    if (!c.instance.empty()) j["instance"] = c.instance;
    if (c.random_n) j["random"] = c.random_n;
    if (!c.fixture.empty()) j["fixture"] = c.fixture;
    return j;
}

struct Status {
    int assertions = 0;
    json failures = json::array();

    void expect(bool ok, const std::string& what) {
        ++assertions;
        if (!ok) failures.push_back(what);
    }
    bool ok() const { return failures.empty(); }
};

MetricInstance load_instance(const RunConfig& c, json& timings) {
    MetricInstance inst;
    if (!c.instance.empty()) {
        inst = load_tsplib_file(c.instance);
        if (!inst.optimum_hint) inst.optimum_hint = known_optimum(inst.name);
    } else if (c.random_n > 0) {
        inst = random_euclidean(c.random_n, c.seed);
    } else {
        throw CLI::ValidationError("--instance or --random is required");
    }
    if (!inst.optimum_hint && inst.n <= 16) {
        auto t0 = std::chrono::steady_clock::now();
        inst.optimum_hint = exact_opt(inst).cost;
        timings["exact_opt"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return inst;
}

json instance_json(const MetricInstance& inst) {
    json j{{"name", inst.name}, {"n", inst.n}, {"warnings", inst.warnings}};
    if (inst.optimum_hint) j["opt"] = *inst.optimum_hint;
    return j;
}

json cmd_lp(const RunConfig& c, Status& st, json& timings) {
    auto inst = load_instance(c, timings);
    auto t0 = std::chrono::steady_clock::now();
    auto lp = solve_held_karp(inst);
    timings["lp"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto violation = separate_subtour(lp);
    st.expect(!violation, "subtour constraint violated by the LP solution");
    auto split = split_root(lp);
    auto poly = check_spanning_tree_polytope(split);
    st.expect(!poly, "split solution outside the spanning tree polytope");
    return {{"instance", instance_json(inst)}, {"lp", to_json(lp)}, {"split", to_json(split)}};
}

json cmd_fit(const RunConfig& c, Status& st, json& timings) {
    auto inst = load_instance(c, timings);
    auto t0 = std::chrono::steady_clock::now();
    auto split = split_root(solve_held_karp(inst));
    timings["lp"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto poly = check_spanning_tree_polytope(split);
    st.expect(!poly, "split solution outside the spanning tree polytope");
    t0 = std::chrono::steady_clock::now();
    FitResult fit;
    try {
        fit = fit_lambda(split, c.fit_eps);
    } catch (const NonConvergence& e) {
        fit = e.best;
    }
    timings["fit"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    st.expect(fit.max_rel_err <= c.fit_eps, "fit error above --fit-eps");
    return {{"instance", instance_json(inst)}, {"lp_objective", split.objective}, {"fit", to_json(fit)}};
}

json cmd_tour(const RunConfig& c, Status& st, json& timings) {
    auto inst = load_instance(c, timings);
    auto run = run_tour(inst, c.samples, c.seed, c.threads, c.fit_eps);
    for (auto& [k, v] : run.seconds) timings[k] = v;
    st.expect(!run.polytope_violation, "split solution outside the spanning tree polytope");
    st.expect(run.within_three_halves(), "a sampled tour exceeds 3/2 of the LP value");
    st.expect(run.baseline.cost <= 1.5 * run.lp.objective + 1e-6, "baseline tour exceeds 3/2 of the LP value");
    return {{"instance", instance_json(inst)}, {"tour", to_json(run)}};
}

std::optional<Fixture> find_fixture(const std::string& name) {
    for (auto& f : fixture_library())
        if (f.name == name) return f;
    return std::nullopt;
}

json cmd_atlas(const RunConfig& c, Status& st, json& timings) {
    json out;
    Atlas atlas;
    auto t0 = std::chrono::steady_clock::now();
    if (!c.fixture.empty()) {
        auto f = find_fixture(c.fixture);
        if (!f) throw CLI::ValidationError("unknown fixture " + c.fixture);
        atlas = build_atlas(f->split, f->opt_order, c.eta);
        out["fixture"] = f->name;
        out["split"] = to_json(f->split);
    } else {
        auto inst = load_instance(c, timings);
        auto run = run_atlas(inst, c.eta);
        for (auto& [k, v] : run.seconds) timings[k] = v;
        atlas = std::move(run.atlas);
        out["instance"] = instance_json(inst);
        out["opt_tour"] = to_json(run.opt);
        out["split"] = to_json(run.split);
    }
    timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out["atlas"] = to_json(atlas);
    st.expect(atlas.violations() == 0, std::to_string(atlas.violations()) + " structure violations");
    return out;
}

json cmd_probe(const RunConfig& c, Status& st, json& timings) {
    AnalysisConstants pc(c.eta);
    json out;
    out["constants"] = to_json(pc);
    auto t0 = std::chrono::steady_clock::now();
    auto bern = bernoulli_facts(BernoulliGrid::standard());
    timings["bernoulli"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out["bernoulli"] = to_json(bern, !c.verbose);
    st.expect(bern.violations() == 0, std::to_string(bern.violations()) + " Bernoulli-sum violations");
    out["fixtures"] = json::array();
    for (auto& f : fixture_library()) {
        if (!c.fixture.empty() && f.name != c.fixture) continue;
        t0 = std::chrono::steady_clock::now();
        auto p = probe_fixture(f, pc, {pc.eps_M, 0.002});
        timings["fixture:" + f.name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out["fixtures"].push_back(to_json(p, !c.verbose));
        if (!p.error.empty()) st.expect(false, f.name + ": " + p.error);
        else st.expect(p.violations() == 0, f.name + ": " + std::to_string(p.violations()) + " violations");
    }
    if (out["fixtures"].empty()) throw CLI::ValidationError("unknown fixture " + c.fixture);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-entropy spanning tree rounding for metric TSP, with structure and probability probes"};
    app.require_subcommand(1);
    RunConfig cfg;
    cfg.threads = default_threads();
    bool eta_given = false;

    auto common = [&](CLI::App* sub, bool instance) {
        if (instance) {
            sub->add_option("--instance", cfg.instance, "TSPLIB file")->check(CLI::ExistingFile);
            sub->add_option("--random", cfg.random_n, "random Euclidean instance with n points")->check(CLI::Range(3, 100000));
        }
        sub->add_option("--seed", cfg.seed, "seed for generators and sampling");
        sub->add_option("--eta", cfg.eta, "near-min-cut slack")->check(CLI::PositiveNumber | CLI::Range(0.0, 0.0))
            ->each([&](const std::string&) { eta_given = true; });
        sub->add_option("--fit-eps", cfg.fit_eps, "relative marginal error target")->check(CLI::Range(1e-8, 0.5));
        sub->add_option("--samples", cfg.samples, "spanning trees to sample")->check(CLI::Range(1, 10000000));
        sub->add_option("--threads", cfg.threads, "worker threads (default from MAXENT_TSP_THREADS)")
            ->check(CLI::Range(1, 1024));
        sub->add_option("--out", cfg.out, "report path (default stdout)");
    };
    auto* lp = app.add_subcommand("lp", "solve the Held-Karp relaxation");
    auto* fit = app.add_subcommand("fit", "fit max-entropy tree weights to the split LP solution");
    auto* tour = app.add_subcommand("tour", "sample trees, add matchings, shortcut; compare with Christofides");
    auto* atlas = app.add_subcommand("atlas", "near-min cuts of z, polygons and the cut hierarchy");
    auto* probe = app.add_subcommand("probe", "exact checks of the probability lemmas on the fixture library");
    for (auto* s : {lp, fit, tour, atlas}) common(s, true);
    common(probe, false);
    for (auto* s : {atlas, probe}) s->add_option("--fixture", cfg.fixture, "built-in fixture name");
    probe->add_flag("--verbose", cfg.verbose, "list every assertion");

    CLI11_PARSE(app, argc, argv);
    cfg.command = app.get_subcommands().front()->get_name();
    if (cfg.command == "probe" && !eta_given) cfg.eta = 1e-9;

    json timings = json::object();
    Status st;
    json report{{"schema_version", kSchemaVersion}, {"command", echo(cfg)}};
    int code = 0;
    auto t0 = std::chrono::steady_clock::now();
    try {
        json result;
        if (cfg.command == "lp") result = cmd_lp(cfg, st, timings);
        else if (cfg.command == "fit") result = cmd_fit(cfg, st, timings);
        else if (cfg.command == "tour") result = cmd_tour(cfg, st, timings);
        else if (cfg.command == "atlas") result = cmd_atlas(cfg, st, timings);
        else result = cmd_probe(cfg, st, timings);
        report["result"] = result;
        code = st.ok() ? 0 : 1;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const StageError& e) {
        report["error"] = {{"stage", e.stage}, {"message", e.what()}};
        code = 2;
    } catch (const std::exception& e) {
        report["error"] = {{"stage", cfg.command}, {"message", e.what()}};
        code = 2;
    }
    report["command"]["eta"] = cfg.eta;
    report["status"] = {{"ok", code == 0}, {"assertions", st.assertions}, {"failures", st.failures}};
    timings["wall"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["timings"] = timings;

    if (cfg.out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(cfg.out);
        if (!out) {
            std::cerr << "cannot write " << cfg.out << "\n";
            return 2;
        }
        out << report.dump(2) << "\n";
    }
    if (code) std::cerr << cfg.command << ": " << (code == 1 ? "assertion failures" : "error") << "\n";
    return code;
}
