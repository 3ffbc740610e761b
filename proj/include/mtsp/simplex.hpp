#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mtsp {

struct SolverFailure : std::runtime_error {
    SolverFailure(const std::string& what, long iterations)
        : std::runtime_error(what + " after " + std::to_string(iterations) + " iterations"), iterations(iterations) {}
    long iterations;
};

// Bounded-variable revised simplex over equality rows A x = b, lo <= x <= hi.
// Dense explicit basis inverse; Dantzig pricing with a Bland fallback on stalls.
// Rows may be appended after a solve; reoptimize() then runs the dual simplex.
class BoundedSimplex {
public:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    explicit BoundedSimplex(long max_iterations = 200000) : max_iter_(max_iterations) {}

    int add_row(double rhs);
    int add_column(double cost, double lo, double hi, const std::vector<std::pair<int, double>>& entries);
    // Adds a coefficient for an existing column in an existing row.
    void add_entry(int row, int col, double value);

    // Phase 1 with artificials followed by phase 2.
    void solve();
    // Restores optimality after rows were appended (each new row needs a basic slack column).
    void reoptimize(const std::vector<int>& new_basic_slacks);

    double objective() const;
    double value(int col) const { return x_[col]; }
    int rows() const { return static_cast<int>(b_.size()); }
    int cols() const { return static_cast<int>(cost_.size()); }
    long iterations() const { return iterations_; }
    long bland_pivots() const { return bland_pivots_; }
    const std::vector<int>& basis() const { return basis_; }

private:
    enum class At : char { Lower, Upper, Basic };

    void refactor();
    void compute_primal();
    void compute_duals(const std::vector<double>& c);
    Eigen::VectorXd column(int j) const;
    void pivot(int r, int q, const Eigen::VectorXd& col);
    bool primal_loop(const std::vector<double>& c);
    void dual_loop();
    void tick();
    double objective(const std::vector<double>& c) const;

    std::vector<double> b_;
    std::vector<double> cost_;
    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<int> basis_;
    std::vector<At> status_;
    std::vector<double> x_;
    std::vector<double> d_;
    Eigen::MatrixXd binv_;
    int since_refactor_ = 0;
    long iterations_ = 0;
    long bland_pivots_ = 0;
    long max_iter_;
};

}  // namespace mtsp
