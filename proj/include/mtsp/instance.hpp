#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtsp {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricInstance {
    int n = 0;
    Eigen::MatrixXd cost;
    std::string name;
    std::optional<double> optimum_hint;
    std::vector<std::string> warnings;

    double operator()(int u, int v) const { return cost(u, v); }
};

struct Tour {
    std::vector<int> order;
    double cost = 0.0;
};

double tour_cost(const MetricInstance& inst, const std::vector<int>& order);
Tour make_tour(const MetricInstance& inst, std::vector<int> order);
bool is_permutation(const std::vector<int>& order, int n);

// Throws ParseError on unsupported types or malformed sections.
MetricInstance load_tsplib(std::istream& in);
MetricInstance load_tsplib_file(const std::string& path);
void write_tsplib(std::ostream& out, const MetricInstance& inst);
void write_tour(std::ostream& out, const Tour& t, const std::string& name);
std::vector<int> read_tour(std::istream& in);

MetricInstance random_euclidean(int n, std::uint64_t seed);

// Largest violation of c(u,w) <= c(u,v) + c(v,w); 0 for metrics.
double max_triangle_violation(const Eigen::MatrixXd& c);
void metric_completion(Eigen::MatrixXd& c);

struct OptResult {
    double cost;
    Tour tour;
};
OptResult exact_opt(const MetricInstance& inst);

// 2-opt local search; used as the heuristic OPT when exact_opt is out of range.
Tour two_opt(const MetricInstance& inst, Tour t);

}  // namespace mtsp
