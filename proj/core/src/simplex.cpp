#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "opasis/error.hpp"
#include "opasis/lp.hpp"

namespace opasis::lp {

Problem Problem::zeros(std::size_t rows, std::size_t cols) {
    Problem p;
    p.rows = rows;
    p.cols = cols;
    p.a.assign(rows * cols, 0.0);
    p.b.assign(rows, 0.0);
    p.c.assign(cols, 0.0);
    p.lower.assign(cols, 0.0);
    p.upper.assign(cols, 0.0);
    return p;
}

namespace {

enum class Status : unsigned char { Basic, AtLower, AtUpper };

// Tableau over the original columns followed by one artificial per row.
// tab holds B^-1 [A | S] where S is the diagonal sign matrix of the
// artificials, so the artificial block doubles as a scaled copy of B^-1.
class Tableau {
public:
    Tableau(const Problem& p, const Options& opt)
        : p_(p), opt_(opt), m_(p.rows), n_(p.cols), width_(p.cols + p.rows) {
        tab_.assign(m_ * width_, 0.0);
        lower_ = p.lower;
        upper_ = p.upper;
        lower_.resize(width_, 0.0);
        upper_.resize(width_, std::numeric_limits<double>::infinity());
        x_.assign(width_, 0.0);
        status_.assign(width_, Status::AtLower);
        basis_.resize(m_);
        sign_.resize(m_);

        for (std::size_t j = 0; j < n_; ++j) {
            if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j])) throw UsageError("lp: bounds must be finite");
            if (lower_[j] > upper_[j]) throw SolverError("lp: infeasible bounds on column " + std::to_string(j));
            x_[j] = lower_[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            double r = p.b[i];
            for (std::size_t j = 0; j < n_; ++j) r -= p.at(i, j) * x_[j];
            sign_[i] = r >= 0.0 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < n_; ++j) cell(i, j) = sign_[i] * p.at(i, j);
            cell(i, n_ + i) = 1.0;
            basis_[i] = n_ + i;
            status_[n_ + i] = Status::Basic;
            x_[n_ + i] = std::abs(r);
        }
    }

    Solution run() {
        std::size_t limit = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + width_) + 100;

        std::vector<double> cost(width_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) cost[n_ + i] = 1.0;
        optimize(cost, limit);
        double infeasibility = 0.0;
        for (std::size_t i = 0; i < m_; ++i) infeasibility += x_[n_ + i];
        double scale = 1.0;
        for (double v : p_.b) scale = std::max(scale, std::abs(v));
        if (infeasibility > opt_.feasibility_tol * scale * static_cast<double>(m_ + 1)) {
            throw SolverError("lp: problem is infeasible");
        }
        expel_artificials();

        std::fill(cost.begin(), cost.end(), 0.0);
        std::copy(p_.c.begin(), p_.c.end(), cost.begin());
        optimize(cost, limit);
        if (!p_.c2.empty()) {
            // Freeze every nonbasic column that would worsen c'x. Pivots on
            // the remaining zero-reduced-cost columns leave the c reduced
            // costs unchanged, so the final basis is still optimal for c.
            std::vector<double> d = reduced_costs(cost);
            for (std::size_t j = 0; j < width_; ++j) {
                if (status_[j] != Status::Basic && std::abs(d[j]) > opt_.optimality_tol) lower_[j] = upper_[j] = x_[j];
            }
            std::vector<double> cost2(width_, 0.0);
            std::copy(p_.c2.begin(), p_.c2.end(), cost2.begin());
            optimize(cost2, limit);
        }
        Solution sol;
        sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        sol.duals.assign(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            // y_i = sum_r c_B[r] (B^-1)[r][i], and (B^-1)[r][i] = tab[r][n+i] / sign_i
            double y = 0.0;
            for (std::size_t r = 0; r < m_; ++r) y += cost[basis_[r]] * cell(r, n_ + i);
            sol.duals[i] = y / sign_[i];
        }
        for (std::size_t j = 0; j < n_; ++j) sol.objective += p_.c[j] * sol.x[j];
        sol.iterations = iterations_;
        return sol;
    }

private:
    double& cell(std::size_t i, std::size_t j) { return tab_[i * width_ + j]; }
    double cell(std::size_t i, std::size_t j) const { return tab_[i * width_ + j]; }

    bool fixed(std::size_t j) const { return upper_[j] - lower_[j] <= 0.0; }

    void reduced_costs(const std::vector<double>& cost, std::vector<double>& out) const {
        for (std::size_t j = 0; j < width_; ++j) {
            if (status_[j] == Status::Basic) {
                out[j] = 0.0;
                continue;
            }
            double d = cost[j];
            for (std::size_t i = 0; i < m_; ++i) d -= cost[basis_[i]] * cell(i, j);
            out[j] = d;
        }
    }

    std::vector<double> reduced_costs(const std::vector<double>& cost) const {
        std::vector<double> out(width_);
        reduced_costs(cost, out);
        return out;
    }

    // Iterate to optimality, then confirm from a freshly inverted basis so
    // accumulated round-off in the tableau cannot leak into the answer.
    void optimize(const std::vector<double>& cost, std::size_t limit) {
        while (iterate(cost, limit) > 0) {
            reinvert();
        }
    }

    // Returns the number of pivots and bound flips taken.
    std::size_t iterate(const std::vector<double>& cost, std::size_t limit) {
        std::vector<double> reduced(width_);
        std::size_t degenerate_streak = 0;
        std::size_t moves = 0;
        for (;;) {
            if (iterations_++ > limit) throw SolverError("lp: iteration limit reached");
            if (moves > 0 && moves % kReinvertEvery == 0) reinvert();

            reduced_costs(cost, reduced);

            // Dantzig pricing, Bland's rule while stalling on degenerate pivots.
            bool bland = degenerate_streak > 30;
            std::size_t entering = width_;
            double best = 0.0;
            double direction = 0.0;
            for (std::size_t j = 0; j < width_; ++j) {
                if (status_[j] == Status::Basic || fixed(j)) continue;
                double d = reduced[j];
                double dir = 0.0;
                if (status_[j] == Status::AtLower && d < -opt_.optimality_tol) dir = 1.0;
                if (status_[j] == Status::AtUpper && d > opt_.optimality_tol) dir = -1.0;
                if (dir == 0.0) continue;
                if (bland) {
                    entering = j;
                    direction = dir;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    entering = j;
                    direction = dir;
                }
            }
            if (entering == width_) return moves;
            ++moves;

            double step = upper_[entering] - lower_[entering];
            std::size_t leaving_row = m_;
            bool leaves_at_upper = false;
            double leaving_pivot = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                double alpha = cell(i, entering) * direction;
                if (std::abs(alpha) <= opt_.pivot_tol) continue;
                std::size_t bj = basis_[i];
                double room = alpha > 0.0 ? (x_[bj] - lower_[bj]) / alpha : (upper_[bj] - x_[bj]) / -alpha;
                room = std::max(room, 0.0);
                bool better = room < step;
                if (!better && leaving_row != m_ && room == step) {
                    better = bland ? bj < basis_[leaving_row] : std::abs(alpha) > std::abs(leaving_pivot);
                }
                if (better) {
                    step = room;
                    leaving_row = i;
                    leaves_at_upper = alpha < 0.0;
                    leaving_pivot = alpha;
                }
            }
            if (!std::isfinite(step)) throw SolverError("lp: problem is unbounded");

            degenerate_streak = step <= 1e-12 ? degenerate_streak + 1 : 0;

            x_[entering] += direction * step;
            for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= direction * step * cell(i, entering);

            if (leaving_row == m_) {
                status_[entering] = direction > 0.0 ? Status::AtUpper : Status::AtLower;
                x_[entering] = direction > 0.0 ? upper_[entering] : lower_[entering];
                continue;
            }

            std::size_t leaving = basis_[leaving_row];
            status_[leaving] = leaves_at_upper ? Status::AtUpper : Status::AtLower;
            x_[leaving] = leaves_at_upper ? upper_[leaving] : lower_[leaving];
            pivot(leaving_row, entering);
        }
    }

    // Rebuilds the tableau as B^-1 [S A | I] from the original columns.
    void reinvert() {
        Eigen::MatrixXd full(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(width_));
        full.setZero();
        for (std::size_t i = 0; i < m_; ++i) {
            auto r = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < n_; ++j) full(r, static_cast<Eigen::Index>(j)) = sign_[i] * p_.at(i, j);
            full(r, static_cast<Eigen::Index>(n_ + i)) = 1.0;
        }
        Eigen::MatrixXd basis(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        for (std::size_t k = 0; k < m_; ++k) basis.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(basis_[k]));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
        Eigen::MatrixXd t = lu.solve(full);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < width_; ++j) cell(i, j) = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        for (std::size_t k = 0; k < m_; ++k) {
            for (std::size_t i = 0; i < m_; ++i) cell(i, basis_[k]) = i == k ? 1.0 : 0.0;
        }
        refresh_basics();
    }

    static constexpr std::size_t kReinvertEvery = 50;

    void pivot(std::size_t row, std::size_t col) {
        double inv = 1.0 / cell(row, col);
        for (std::size_t j = 0; j < width_; ++j) cell(row, j) *= inv;
        cell(row, col) = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row) continue;
            double f = cell(i, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j) cell(i, j) -= f * cell(row, j);
            cell(i, col) = 0.0;
        }
        basis_[row] = col;
        status_[col] = Status::Basic;
    }

    // After phase one every artificial sits at zero. Pivot basic ones out
    // where a structural column can replace them, then pin all to zero.
    void expel_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            std::size_t best = n_;
            double mag = opt_.pivot_tol;
            for (std::size_t j = 0; j < n_; ++j) {
                if (status_[j] == Status::Basic) continue;
                if (std::abs(cell(i, j)) > mag) {
                    mag = std::abs(cell(i, j));
                    best = j;
                }
            }
            if (best == n_) continue;  // redundant row
            std::size_t art = basis_[i];
            pivot(i, best);
            status_[art] = Status::AtLower;
            x_[art] = 0.0;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            upper_[n_ + i] = 0.0;
            if (status_[n_ + i] != Status::Basic) x_[n_ + i] = 0.0;
        }
        refresh_basics();
    }

    // Recompute basic values from the nonbasic ones: x_B = B^-1 (b - A_N x_N).
    void refresh_basics() {
        std::vector<double> r(p_.b);
        for (std::size_t j = 0; j < n_; ++j) {
            if (status_[j] == Status::Basic) continue;
            for (std::size_t i = 0; i < m_; ++i) r[i] -= p_.at(i, j) * x_[j];
        }
        for (std::size_t k = 0; k < m_; ++k) {
            double v = 0.0;
            for (std::size_t i = 0; i < m_; ++i) v += cell(k, n_ + i) * sign_[i] * r[i];
            std::size_t bj = basis_[k];
            // Snap onto a bound when within round-off of it.
            double tol = opt_.feasibility_tol * std::max(1.0, std::abs(v));
            if (std::abs(v - lower_[bj]) <= tol) v = lower_[bj];
            if (std::abs(v - upper_[bj]) <= tol) v = upper_[bj];
            x_[bj] = v;
        }
    }

    const Problem& p_;
    const Options& opt_;
    std::size_t m_;
    std::size_t n_;
    std::size_t width_;
    std::vector<double> tab_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> x_;
    std::vector<Status> status_;
    std::vector<std::size_t> basis_;
    std::vector<double> sign_;
    std::size_t iterations_ = 0;
};

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
    if (problem.a.size() != problem.rows * problem.cols || problem.b.size() != problem.rows ||
        problem.c.size() != problem.cols || problem.lower.size() != problem.cols ||
        (!problem.c2.empty() && problem.c2.size() != problem.cols) ||
        problem.upper.size() != problem.cols) {
        throw UsageError("lp: inconsistent problem dimensions");
    }
    Tableau t(problem, options);
    return t.run();
}

}  // namespace opasis::lp
