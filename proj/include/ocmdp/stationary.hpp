#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "ocmdp/model.hpp"

namespace ocmdp {

/// P_pi(s, s') = sum_a pi(a|s) P_a(s, s').
Eigen::MatrixXd policy_transition_matrix(const MdpModel& model, const PolicyTable& policy);

/// Stationary distribution of a row-stochastic matrix.  Power iteration from a
/// fixed slightly tilted start (residual target 1e-10, cap 1e6 iterations),
/// falling back to a dense linear solve of d(I - P + 11^T) = 1^T.  Throws
/// NonConvergenceError when the chain has no unique stationary distribution.
StateDistribution stationary_distribution(const Eigen::MatrixXd& transition,
                                          double residual_tol = 1e-10,
                                          long max_iterations = 1000000);

/// Occupancy of a stationary policy: theta(s, a) = d_pi(s) pi(a|s).
OccupancyVector policy_to_theta(const MdpModel& model, const PolicyTable& policy);

/// Conditional policy of an occupancy: pi(a|s) = theta(s, a) / sum_a theta(s, a);
/// states with marginal below zero_mass_tol get a uniform row.
PolicyTable theta_to_policy(const MdpModel& model, const OccupancyVector& theta,
                            double zero_mass_tol = 1e-12);

/// Draws s' ~ P_a(s, .) by CDF inversion.  Takes only this MDP's kernel and
/// this MDP's state, so cross-MDP coupling cannot enter by construction.
int sample_next_state(const MdpModel& model, int s, int a, std::mt19937_64& rng);

/// Draws a ~ pi(.|s) by CDF inversion.
int sample_action(const PolicyTable& policy, int s, std::mt19937_64& rng);

/// All |A|^|S| deterministic policies, in lexicographic order of the
/// state -> action map (last state varies fastest).
std::vector<PolicyTable> enumerate_pure_policies(const MdpModel& model);

/// Occupancies of all pure policies: the vertex set of the occupancy polytope.
std::vector<Eigen::VectorXd> pure_policy_vertices(const MdpModel& model);

/// Random point of the occupancy polytope: Dirichlet(1)-weighted convex
/// combination of the supplied vertices.
Eigen::VectorXd sample_vertex_mixture(const std::vector<Eigen::VectorXd>& vertices,
                                      std::mt19937_64& rng);

}  // namespace ocmdp
