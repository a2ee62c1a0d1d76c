#pragma once

// Test-only reference implementations.  These are deliberately written along
// different computational routes than the library so that agreement between
// the two is evidence, not tautology.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ocmdp/model.hpp"
#include "ocmdp/projection.hpp"
#include "ocmdp/simplex.hpp"

namespace ocmdp::oracle {

/// Exact projection onto {Ax=b, x>=0} by exhaustive enumeration of the 2^n
/// zero patterns, solving the full KKT system per pattern with an LU route.
/// Only usable for n <= ~20; tests keep n <= 12.
Eigen::VectorXd project_active_set(const PolyhedronSpec& spec, const Eigen::VectorXd& y);

/// Stationary distribution via a least-squares solve of [P^T - I; 1^T] d =
/// [0; 1], independent of the power-iteration route.
Eigen::VectorXd stationary_least_squares(const Eigen::MatrixXd& transition);

/// A random unichain test model: strictly positive kernels from a seeded
/// Dirichlet-style draw.  Plain generator for unit tests; the scenario module
/// has its own construction.
MdpModel random_positive_model(int num_states, int num_actions, std::uint64_t seed);

/// A random point for projection tests: vertex mixture plus seeded Gaussian
/// displacement of the given magnitude.
Eigen::VectorXd random_projection_input(const MdpModel& model, double displacement,
                                        std::uint64_t seed);

/// Brute-force LP solve by enumerating every basis of the standardized system
/// [A_eq 0; G I] [x; s] = [b_eq; h], x,s >= 0.  Returns the best basic
/// feasible value and its structural point, or nullopt when no basis is
/// feasible.  Only for bounded feasible sets with <= ~16 standardized columns.
std::optional<std::pair<double, Eigen::VectorXd>> brute_force_lp(const LinearProgram& lp);

/// Minimum of <f, theta> over the pure-policy vertices of the model's
/// occupancy polytope (enumeration + power-iteration route, no simplex).
double pure_policy_best(const MdpModel& model, const Eigen::VectorXd& f);

/// Dense grid search over the product of two 2-state/2-action occupancy
/// polytopes, parameterized by per-state action probabilities on a uniform
/// grid with `grid_points` values per parameter (101 = resolution 0.01).
/// Stationary distributions use the closed 2-state formula, not the library
/// routines.  Returns the best value among grid points satisfying every
/// coupling row, or nullopt if none is feasible.
std::optional<double> grid_search_best(const std::vector<MdpModel>& models,
                                       const std::vector<Eigen::VectorXd>& mean_f,
                                       const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                       const Eigen::VectorXd& rhs, int grid_points);

/// Test fixture: a randomly drawn coupled instance (two 2-state/2-action
/// MDPs, one coupling row) rejection-sampled so the constraint is active
/// with a shallow dual at the returned rhs.  A 0.01-resolution grid certifies
/// such instances to ~1e-3: the best-grid-vs-LP gap scales like the active
/// dual times the grid mesh, so the fixture caps the dual at 0.04.
struct CoupledFixture {
    std::vector<MdpModel> models;
    std::vector<Eigen::VectorXd> mean_f;
    std::vector<std::vector<Eigen::VectorXd>> mean_g;  // [constraint][mdp]
    Eigen::VectorXd rhs;
    double dual = 0.0;        // active dual at rhs
    double value_shift = 0.0; // constrained minus unconstrained optimum
    bool ok = false;
};

CoupledFixture small_dual_coupled_instance(std::uint64_t seed, int max_tries = 400);

/// E[clip(X, -bound, bound)], X ~ N(mu, sigma^2), by composite Simpson
/// quadrature of clip(x) * pdf(x) over mu +/- 12 sigma plus the clipped tail
/// mass -- an independent route to the library's closed-form expression.
double clipped_gaussian_mean_quadrature(double mu, double sigma, double bound,
                                        int panels = 20000);

}  // namespace ocmdp::oracle
