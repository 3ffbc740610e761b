#include "mtsp/simplex.hpp"

#include <cmath>

namespace mtsp {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivTol = 1e-9;
constexpr int kRefactorEvery = 50;
constexpr int kStallLimit = 50;
}  // namespace

int BoundedSimplex::add_row(double rhs) {
    b_.push_back(rhs);
    return static_cast<int>(b_.size()) - 1;
}

int BoundedSimplex::add_column(double cost, double lo, double hi, const std::vector<std::pair<int, double>>& entries) {
    cost_.push_back(cost);
    lo_.push_back(lo);
    hi_.push_back(hi);
    cols_.push_back(entries);
    status_.push_back(At::Lower);
    x_.push_back(lo);
    return static_cast<int>(cost_.size()) - 1;
}

void BoundedSimplex::add_entry(int row, int col, double value) { cols_[col].emplace_back(row, value); }

Eigen::VectorXd BoundedSimplex::column(int j) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    for (auto [i, v] : cols_[j]) out += v * binv_.col(i);
    return out;
}

void BoundedSimplex::refactor() {
    const int m = rows();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k)
        for (auto [i, v] : cols_[basis_[k]]) B(i, k) += v;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    since_refactor_ = 0;
}

void BoundedSimplex::compute_primal() {
    const int m = rows();
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(b_.data(), m);
    for (int j = 0; j < cols(); ++j) {
        if (status_[j] == At::Basic) continue;
        x_[j] = status_[j] == At::Lower ? lo_[j] : hi_[j];
        if (x_[j] != 0.0)
            for (auto [i, v] : cols_[j]) r(i) -= v * x_[j];
    }
    Eigen::VectorXd xb = binv_ * r;
    for (int k = 0; k < m; ++k) x_[basis_[k]] = xb(k);
}

void BoundedSimplex::compute_duals(const std::vector<double>& c) {
    const int m = rows();
    Eigen::VectorXd cb(m);
    for (int k = 0; k < m; ++k) cb(k) = c[basis_[k]];
    Eigen::VectorXd pi = binv_.transpose() * cb;
    d_.assign(cols(), 0.0);
    for (int j = 0; j < cols(); ++j) {
        if (status_[j] == At::Basic) continue;
        double s = c[j];
        for (auto [i, v] : cols_[j]) s -= pi(i) * v;
        d_[j] = s;
    }
}

void BoundedSimplex::pivot(int r, int q, const Eigen::VectorXd& col) {
    const double a = col(r);
    binv_.row(r) /= a;
    for (int i = 0; i < rows(); ++i)
        if (i != r && col(i) != 0.0) binv_.row(i) -= col(i) * binv_.row(r);
    basis_[r] = q;
    status_[q] = At::Basic;
    if (++since_refactor_ >= kRefactorEvery) refactor();
}

void BoundedSimplex::tick() {
    if (++iterations_ > max_iter_) throw SolverFailure("simplex iteration budget exceeded", iterations_);
}

double BoundedSimplex::objective(const std::vector<double>& c) const {
    double s = 0.0;
    for (int j = 0; j < cols(); ++j) s += c[j] * x_[j];
    return s;
}

double BoundedSimplex::objective() const { return objective(cost_); }

bool BoundedSimplex::primal_loop(const std::vector<double>& c) {
    double last_obj = kInf;
    int stall = 0;
    while (true) {
        compute_primal();
        compute_duals(c);
        double obj = objective(c);
        if (obj < last_obj - 1e-12) {
            stall = 0;
            last_obj = obj;
        } else {
            ++stall;
        }
        const bool bland = stall > kStallLimit;

        int q = -1;
        double best = 0.0;
        for (int j = 0; j < cols(); ++j) {
            if (status_[j] == At::Basic || lo_[j] == hi_[j]) continue;
            double score = 0.0;
            if (status_[j] == At::Lower && d_[j] < -kDualTol) score = -d_[j];
            if (status_[j] == At::Upper && d_[j] > kDualTol) score = d_[j];
            if (score <= 0.0) continue;
            if (bland) {
                q = j;
                break;
            }
            if (score > best) {
                best = score;
                q = j;
            }
        }
        if (q < 0) return true;
        tick();
        if (bland) ++bland_pivots_;

        const double dir = status_[q] == At::Lower ? 1.0 : -1.0;
        Eigen::VectorXd col = column(q);
        double tmax = hi_[q] - lo_[q];
        int r = -1;
        bool to_lower = false;
        double rbest = 0.0;
        for (int k = 0; k < rows(); ++k) {
            const double delta = -dir * col(k);
            const int j = basis_[k];
            double t;
            bool lower;
            if (delta < -kPivTol) {
                t = std::max(0.0, (x_[j] - lo_[j]) / -delta);
                lower = true;
            } else if (delta > kPivTol && hi_[j] < kInf) {
                t = std::max(0.0, (hi_[j] - x_[j]) / delta);
                lower = false;
            } else {
                continue;
            }
            bool take = false;
            if (t < tmax - 1e-12) {
                take = true;
            } else if (r >= 0 && t <= tmax + 1e-12) {
                take = bland ? j < basis_[r] : std::abs(delta) > rbest;
            }
            if (take) {
                tmax = std::min(t, tmax);
                r = k;
                to_lower = lower;
                rbest = std::abs(delta);
            }
        }
        if (tmax == kInf) throw SolverFailure("unbounded linear program", iterations_);
        if (r < 0) {
            status_[q] = status_[q] == At::Lower ? At::Upper : At::Lower;
            continue;
        }
        const int leaving = basis_[r];
        pivot(r, q, col);
        status_[leaving] = to_lower ? At::Lower : At::Upper;
    }
}

void BoundedSimplex::dual_loop() {
    int stall = 0;
    double last_inf = kInf;
    while (true) {
        compute_primal();
        compute_duals(cost_);
        int r = -1;
        double worst = 0.0;
        double total_inf = 0.0;
        for (int k = 0; k < rows(); ++k) {
            const int j = basis_[k];
            double v = 0.0;
            if (x_[j] < lo_[j] - kFeasTol) v = lo_[j] - x_[j];
            if (x_[j] > hi_[j] + kFeasTol) v = x_[j] - hi_[j];
            total_inf += v;
            if (v <= 0.0) continue;
            if (stall > kStallLimit) {
                if (r < 0 || j < basis_[r]) r = k;
            } else if (v > worst) {
                worst = v;
                r = k;
            }
        }
        if (r < 0) return;
        if (total_inf < last_inf - 1e-12) {
            last_inf = total_inf;
            stall = 0;
        } else {
            ++stall;
        }
        tick();
        const bool bland = stall > kStallLimit;
        if (bland) ++bland_pivots_;
        const int leaving = basis_[r];
        const bool up = x_[leaving] < lo_[leaving];
        Eigen::VectorXd rho = binv_.row(r).transpose();
        int q = -1;
        double best = kInf;
        double best_alpha = 0.0;
        for (int j = 0; j < cols(); ++j) {
            if (status_[j] == At::Basic || lo_[j] == hi_[j]) continue;
            double alpha = 0.0;
            for (auto [i, v] : cols_[j]) alpha += rho(i) * v;
            bool ok;
            if (up)
                ok = (status_[j] == At::Lower && alpha < -kPivTol) || (status_[j] == At::Upper && alpha > kPivTol);
            else
                ok = (status_[j] == At::Lower && alpha > kPivTol) || (status_[j] == At::Upper && alpha < -kPivTol);
            if (!ok) continue;
            const double ratio = std::abs(d_[j]) / std::abs(alpha);
            bool take = ratio < best - 1e-12 ||
                        (ratio <= best + 1e-12 && (bland ? false : std::abs(alpha) > best_alpha));
            if (take) {
                best = std::min(ratio, best);
                q = j;
                best_alpha = std::abs(alpha);
            }
        }
        if (q < 0) throw SolverFailure("linear program infeasible", iterations_);
        Eigen::VectorXd col = column(q);
        pivot(r, q, col);
        status_[leaving] = up ? At::Lower : At::Upper;
    }
}

void BoundedSimplex::solve() {
    const int m = rows();
    const int structural = cols();
    // Structurals start at a finite bound; artificials absorb the residual.
    std::vector<double> resid(b_);
    for (int j = 0; j < structural; ++j) {
        status_[j] = lo_[j] > -kInf ? At::Lower : At::Upper;
        x_[j] = status_[j] == At::Lower ? lo_[j] : hi_[j];
        for (auto [i, v] : cols_[j]) resid[i] -= v * x_[j];
    }
    basis_.assign(m, -1);
    std::vector<int> art;
    for (int i = 0; i < m; ++i) {
        const double sign = resid[i] >= 0 ? 1.0 : -1.0;
        int j = add_column(0.0, 0.0, kInf, {{i, sign}});
        basis_[i] = j;
        status_[j] = At::Basic;
        art.push_back(j);
    }
    refactor();
    std::vector<double> c1(cols(), 0.0);
    for (int j : art) c1[j] = 1.0;
    primal_loop(c1);
    compute_primal();
    if (objective(c1) > 1e-7) throw SolverFailure("linear program infeasible", iterations_);
    for (int j : art) {
        hi_[j] = 0.0;
        if (status_[j] != At::Basic) status_[j] = At::Lower;
    }
    cost_.resize(cols(), 0.0);
    primal_loop(cost_);
    compute_primal();
}

void BoundedSimplex::reoptimize(const std::vector<int>& new_basic_slacks) {
    for (int j : new_basic_slacks) {
        basis_.push_back(j);
        status_[j] = At::Basic;
    }
    if (static_cast<int>(basis_.size()) != rows()) throw std::logic_error("basis size mismatch after adding rows");
    refactor();
    dual_loop();
    // Dual steps keep optimality up to tolerance; a primal pass removes any drift.
    primal_loop(cost_);
    compute_primal();
}

}  // namespace mtsp
