#pragma once

#include <Eigen/Dense>
#include <functional>

#include "ocmdp/errors.hpp"

namespace ocmdp {

/// min c^T x  subject to  A_eq x = b_eq,  G x <= h,  x >= 0.
/// Empty blocks are allowed (zero-row matrices with matching column count).
struct LinearProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;

    int num_vars() const { return static_cast<int>(c.size()); }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

/// Per-iteration view for invariant tests: the current basic solution's
/// objective and the simplex multipliers y of all rows (equality rows first,
/// then inequality rows, in the caller's original orientation).
struct LpSnapshot {
    long iteration = 0;
    int phase = 0;
    double primal_objective = 0.0;
    Eigen::VectorXd y;
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    Eigen::VectorXd x;           // structural variables only
    Eigen::VectorXd duals_eq;    // one per equality row
    Eigen::VectorXd duals_ineq;  // one per inequality row; >= 0 for Gx <= h
    long iterations = 0;

    /// max violation over {A_eq x - b_eq, (Gx - h)_+, (-x)_+}.
    double primal_residual(const LinearProgram& lp) const;
    /// max_i |duals_ineq_i * (Gx - h)_i|.
    double complementary_slackness(const LinearProgram& lp) const;
};

/// Dense two-phase primal simplex with Bland's anti-cycling rule (lowest
/// eligible index enters; ratio ties broken by lowest basic index), so the
/// pivot path and the reported basis are deterministic for fixed input.  The
/// final solution and duals are recomputed from the optimal basis against the
/// original data with a fresh factorization.
LpSolution solve_lp(const LinearProgram& lp,
                    const std::function<void(const LpSnapshot&)>& snapshot = {});

}  // namespace ocmdp
