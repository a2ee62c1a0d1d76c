#pragma once

#include <Eigen/Dense>

#include "ocmdp/model.hpp"

namespace ocmdp {

/// Equality system {x : A x = b} of an occupancy polytope, together with
/// x >= 0.  A stacks the normalization row (all ones, rhs 1) over the balance
/// rows with the last balance row dropped as redundant; for unichain models
/// the result has full row rank.
struct PolyhedronSpec {
    Eigen::MatrixXd A;  // |S| x (|S| |A|)
    Eigen::VectorXd b;

    // Cached factorizations for affine projection (AA^T Cholesky when A has
    // full row rank, complete orthogonal decomposition otherwise).
    Eigen::LLT<Eigen::MatrixXd> gram_llt;
    bool full_row_rank = false;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;

    int dim() const { return static_cast<int>(A.cols()); }

    /// Euclidean projection onto the affine set {A x = b}.
    Eigen::VectorXd project_affine(const Eigen::VectorXd& x) const;

    /// max(||A x - b||_inf, max(-x, 0)): distance-to-membership proxy.
    double membership_residual(const Eigen::VectorXd& x) const;
};

/// Outcome of a polytope projection, including a KKT certificate computed at
/// the returned point.
struct ProjectionReport {
    Eigen::VectorXd point;
    long iterations = 0;       // Dykstra sweeps performed (0 = input was feasible)
    double kkt_residual = 0.0; // max violation over stationarity/feasibility/
                               // dual sign/complementary slackness
    int active_set_size = 0;   // coordinates at zero in the returned point
};

/// Builds the equality system for a model's occupancy polytope.
PolyhedronSpec build_polyhedron(const MdpModel& model);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
/// Throws DimensionError on an empty input.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& y);

/// Euclidean projection onto {A x = b, x >= 0} by Dykstra's alternating
/// projections, with an exact KKT refinement on the identified active set
/// before certification.  Throws NonConvergenceError (carrying the best
/// iterate) if no certifiable point is found within max_iterations sweeps.
ProjectionReport project_theta(const PolyhedronSpec& spec, const Eigen::VectorXd& y,
                               double tol = 1e-9, long max_iterations = 100000);

}  // namespace ocmdp
