#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsp/cut_atlas.hpp"
#include "mtsp/fit.hpp"
#include "mtsp/instance.hpp"
#include "mtsp/lp.hpp"
#include "mtsp/matching.hpp"

namespace mtsp {

struct StageError : std::runtime_error {
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage(std::move(stage)) {}
    std::string stage;
};

// Optimum from data/optima.json by instance name.
std::optional<double> known_optimum(const std::string& name, const std::string& path = "");

struct TourRun {
    LpSolution lp;
    LpSolution split;
    std::optional<CutViolation> polytope_violation;
    FitResult fit;
    std::vector<SampledTour> samples;
    int best = -1;
    Tour baseline;
    double mean_cost = 0.0;
    std::optional<double> opt;
    std::map<std::string, double> seconds;

    const Tour& best_tour() const { return samples.at(best).tour; }
    // Every sampled tour within 3/2 of the LP value (plus 1e-6).
    bool within_three_halves() const;
};

// LP, split, polytope check, fit, k samples, matching and shortcutting; plus the
// Christofides baseline. Sample i depends only on (seed, i).
TourRun run_tour(const MetricInstance& inst, int samples, std::uint64_t seed, int threads = 1, double fit_eps = 1e-4);

struct AtlasRun {
    LpSolution lp;
    LpSolution split;
    Tour opt;
    bool heuristic_opt = false;
    Atlas atlas;
    std::map<std::string, double> seconds;
};

// OPT is exact for n <= exact_limit, otherwise 2-opt from the Christofides tour.
AtlasRun run_atlas(const MetricInstance& inst, double eta, int exact_limit = 16);

nlohmann::json to_json(const TourRun& r);

}  // namespace mtsp
