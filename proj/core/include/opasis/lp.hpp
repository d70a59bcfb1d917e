#pragma once

#include <cstddef>
#include <vector>

namespace opasis::lp {

/// minimize c'x  subject to  A x = b,  lower <= x <= upper.
/// A is dense, row-major, rows x cols. All bounds must be finite.
/// A nonempty c2 breaks ties: among the optima of c'x, minimize c2'x.
struct Problem {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> c2;
    std::vector<double> lower;
    std::vector<double> upper;

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Problem zeros(std::size_t rows, std::size_t cols);
};

struct Options {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-10;
    std::size_t max_iterations = 0;  // 0: 50 * (rows + cols)
};

struct Solution {
    std::vector<double> x;
    std::vector<double> duals;  // one per row: y' = c_B' B^-1, for c
    double objective = 0.0;     // c'x
    std::size_t iterations = 0;
};

/// Two-phase primal simplex with bounded variables on a dense tableau.
/// Returns a vertex optimum. Throws SolverError when the problem is
/// infeasible, unbounded or the iteration limit is reached.
Solution solve(const Problem& problem, const Options& options = {});

}  // namespace opasis::lp
