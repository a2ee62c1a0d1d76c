#include "ocmdp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ocmdp {

void LinearProgram::validate() const {
    const int n = num_vars();
    if (n <= 0) throw DimensionError("LinearProgram: no variables");
    if (A_eq.rows() != b_eq.size())
        throw DimensionError("LinearProgram: equality block shape mismatch");
    if (G.rows() != h.size())
        throw DimensionError("LinearProgram: inequality block shape mismatch");
    if ((A_eq.rows() > 0 && A_eq.cols() != n) || (G.rows() > 0 && G.cols() != n))
        throw DimensionError("LinearProgram: column count does not match variables");
}

double LpSolution::primal_residual(const LinearProgram& lp) const {
    double res = x.size() ? -std::min(0.0, x.minCoeff()) : 0.0;
    if (lp.A_eq.rows() > 0)
        res = std::max(res, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
    if (lp.G.rows() > 0)
        res = std::max(res, (lp.G * x - lp.h).maxCoeff());
    return res;
}

double LpSolution::complementary_slackness(const LinearProgram& lp) const {
    if (lp.G.rows() == 0) return 0.0;
    return duals_ineq.cwiseProduct(lp.G * x - lp.h).cwiseAbs().maxCoeff();
}

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr double kFeasTol = 1e-7;

// Working state of the standardized problem min c^T z, A z = b (b >= 0),
// z >= 0, where z stacks structural variables, slacks, then artificials.
struct Tableau {
    Eigen::MatrixXd A;   // current eliminated rows
    Eigen::VectorXd b;   // current rhs (kept nonnegative by pivoting)
    std::vector<int> basis;
    Eigen::MatrixXd A0;  // original standardized rows (for clean re-solves)
    Eigen::VectorXd b0;
    std::vector<double> row_sign;  // standardized row = sign * original row
    int n_structural = 0;
    int n_slack = 0;
    int first_artificial = 0;  // columns >= this are artificial
};

// One Gauss-Jordan pivot at (row, col).
void pivot(Tableau& t, int row, int col) {
    const double piv = t.A(row, col);
    t.A.row(row) /= piv;
    t.b(row) /= piv;
    for (int r = 0; r < t.A.rows(); ++r) {
        if (r == row) continue;
        const double factor = t.A(r, col);
        if (factor == 0.0) continue;
        t.A.row(r) -= factor * t.A.row(row);
        t.b(r) -= factor * t.b(row);
    }
    // Clean tiny residue so Bland's comparisons stay crisp.
    for (int r = 0; r < t.A.rows(); ++r)
        if (std::abs(t.b(r)) < 1e-14) t.b(r) = 0.0;
    t.basis[row] = col;
}

// Runs primal simplex pivots for the cost vector `cost` over the columns in
// [0, allowed_cols).  Returns optimal or unbounded.  Bland's rule throughout.
LpStatus run_simplex(Tableau& t, const Eigen::VectorXd& cost, int allowed_cols,
                     int phase, long& iteration_counter,
                     const std::function<void(const LpSnapshot&)>& snapshot,
                     int total_orig_rows, const std::vector<int>& row_origin) {
    const int m = static_cast<int>(t.A.rows());
    for (;;) {
        // Multipliers y solve B^T y = c_B; with the eliminated tableau the
        // reduced cost is c_j - y^T A0_j, computed directly from the tableau as
        // c_j - c_B^T A_j(current).
        Eigen::VectorXd cb(m);
        for (int r = 0; r < m; ++r) cb(r) = cost(t.basis[r]);

        if (snapshot) {
            // Recover y against the original standardized rows for reporting.
            Eigen::MatrixXd B(m, m);
            for (int r = 0; r < m; ++r) B.col(r) = t.A0.col(t.basis[r]);
            Eigen::VectorXd y = B.transpose().fullPivLu().solve(cb);
            LpSnapshot snap;
            snap.iteration = iteration_counter;
            snap.phase = phase;
            snap.primal_objective = cb.dot(t.b);
            snap.y = Eigen::VectorXd::Zero(total_orig_rows);
            for (int r = 0; r < m; ++r)
                snap.y(row_origin[r]) = t.row_sign[row_origin[r]] * y(r);
            snapshot(snap);
        }

        int entering = -1;
        for (int j = 0; j < allowed_cols; ++j) {
            const double reduced = cost(j) - cb.dot(t.A.col(j));
            if (reduced < -kReducedCostTol) {
                entering = j;  // Bland: lowest eligible index
                break;
            }
        }
        if (entering < 0) return LpStatus::optimal;

        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            const double a = t.A(r, entering);
            if (a > kPivotTol) {
                const double ratio = t.b(r) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (leaving < 0 || t.basis[r] < t.basis[leaving]))) {
                    best_ratio = ratio;
                    leaving = r;
                }
            }
        }
        if (leaving < 0) return LpStatus::unbounded;
        pivot(t, leaving, entering);
        ++iteration_counter;
    }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp,
                    const std::function<void(const LpSnapshot&)>& snapshot) {
    lp.validate();
    const int n = lp.num_vars();
    const int me = static_cast<int>(lp.A_eq.rows());
    const int mi = static_cast<int>(lp.G.rows());
    const int m = me + mi;

    LpSolution sol;
    sol.duals_eq = Eigen::VectorXd::Zero(me);
    sol.duals_ineq = Eigen::VectorXd::Zero(mi);

    if (m == 0) {
        // Only x >= 0: the minimum is at zero for nonnegative costs and
        // unbounded otherwise.
        if (lp.c.minCoeff() < -kReducedCostTol) {
            sol.status = LpStatus::unbounded;
            return sol;
        }
        sol.status = LpStatus::optimal;
        sol.x = Eigen::VectorXd::Zero(n);
        sol.value = 0.0;
        return sol;
    }

    Tableau t;
    t.n_structural = n;
    t.n_slack = mi;
    t.first_artificial = n + mi;
    const int total = n + mi + m;  // structural + slack + artificial
    t.A0 = Eigen::MatrixXd::Zero(m, total);
    t.b0 = Eigen::VectorXd::Zero(m);
    t.row_sign.assign(m, 1.0);

    for (int r = 0; r < me; ++r) {
        t.A0.row(r).head(n) = lp.A_eq.row(r);
        t.b0(r) = lp.b_eq(r);
    }
    for (int r = 0; r < mi; ++r) {
        t.A0.row(me + r).head(n) = lp.G.row(r);
        t.A0(me + r, n + r) = 1.0;  // slack
        t.b0(me + r) = lp.h(r);
    }
    for (int r = 0; r < m; ++r) {
        if (t.b0(r) < 0.0) {
            t.A0.row(r) *= -1.0;
            t.b0(r) *= -1.0;
            t.row_sign[r] = -1.0;
        }
        t.A0(r, t.first_artificial + r) = 1.0;
    }

    t.A = t.A0;
    t.b = t.b0;
    t.basis.resize(m);
    std::vector<int> row_origin(m);
    for (int r = 0; r < m; ++r) {
        t.basis[r] = t.first_artificial + r;
        row_origin[r] = r;
    }

    // Phase 1: minimize the artificial mass.
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(total);
    for (int j = t.first_artificial; j < total; ++j) phase1_cost(j) = 1.0;
    long iterations = 0;
    LpStatus p1 = run_simplex(t, phase1_cost, total, 1, iterations, snapshot, m, row_origin);
    (void)p1;  // phase 1 cannot be unbounded: the objective is bounded below by 0
    double artificial_mass = 0.0;
    for (int r = 0; r < static_cast<int>(t.basis.size()); ++r)
        if (t.basis[r] >= t.first_artificial) artificial_mass += t.b(r);
    if (artificial_mass > kFeasTol) {
        sol.status = LpStatus::infeasible;
        sol.iterations = iterations;
        return sol;
    }

    // Drive leftover zero-level artificials out of the basis; rows that offer
    // no pivot are redundant and get dropped.
    for (int r = static_cast<int>(t.basis.size()) - 1; r >= 0; --r) {
        if (t.basis[r] < t.first_artificial) continue;
        int col = -1;
        for (int j = 0; j < t.first_artificial; ++j)
            if (std::abs(t.A(r, j)) > 1e-9) {
                col = j;
                break;
            }
        if (col >= 0) {
            pivot(t, r, col);
        } else {
            const int rows_left = static_cast<int>(t.A.rows());
            Eigen::MatrixXd A2(rows_left - 1, t.A.cols());
            Eigen::MatrixXd A02(rows_left - 1, t.A0.cols());
            Eigen::VectorXd b2(rows_left - 1), b02(rows_left - 1);
            std::vector<int> basis2, origin2;
            for (int rr = 0, w = 0; rr < rows_left; ++rr) {
                if (rr == r) continue;
                A2.row(w) = t.A.row(rr);
                A02.row(w) = t.A0.row(rr);
                b2(w) = t.b(rr);
                b02(w) = t.b0(rr);
                basis2.push_back(t.basis[rr]);
                origin2.push_back(row_origin[rr]);
                ++w;
            }
            t.A = std::move(A2);
            t.A0 = std::move(A02);
            t.b = std::move(b2);
            t.b0 = std::move(b02);
            t.basis = std::move(basis2);
            row_origin = origin2;
        }
    }

    // Phase 2 on the real objective; artificial columns may no longer enter.
    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(total);
    phase2_cost.head(n) = lp.c;
    LpStatus p2 = run_simplex(t, phase2_cost, t.first_artificial, 2, iterations,
                              snapshot, m, row_origin);
    sol.iterations = iterations;
    if (p2 == LpStatus::unbounded) {
        sol.status = LpStatus::unbounded;
        return sol;
    }

    // Clean re-solve of the optimal basis against original data.
    const int mrows = static_cast<int>(t.A.rows());
    Eigen::MatrixXd B(mrows, mrows);
    Eigen::VectorXd cb(mrows);
    for (int r = 0; r < mrows; ++r) {
        B.col(r) = t.A0.col(t.basis[r]);
        cb(r) = phase2_cost(t.basis[r]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd xb = lu.solve(t.b0);
    Eigen::VectorXd y = lu.transpose().solve(cb);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(total);
    for (int r = 0; r < mrows; ++r) z(t.basis[r]) = std::max(0.0, xb(r));
    sol.x = z.head(n);
    sol.value = lp.c.dot(sol.x);
    sol.status = LpStatus::optimal;

    Eigen::VectorXd duals = Eigen::VectorXd::Zero(m);
    for (int r = 0; r < mrows; ++r)
        duals(row_origin[r]) = t.row_sign[row_origin[r]] * y(r);
    sol.duals_eq = duals.head(me);
    // For min c^T x with Gx <= h, the nonnegative multiplier is the negated
    // equation dual; roundoff-level negatives are floored.
    sol.duals_ineq = (-duals.tail(mi)).cwiseMax(0.0);
    return sol;
}

}  // namespace ocmdp
