#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ocmdp/model.hpp"
#include "ocmdp/simplex.hpp"

namespace ocmdp {

/// Scale constants of the controller guarantees, all polynomial in the
/// coupling data and the Slater margin.
struct TheoryConstants {
    double C = 0.0;               // queue-scale constant
    double regret_const = 0.0;    // regret bound / sqrt(T) at V = sqrt(T), alpha = T
    double violation_const = 0.0; // violation bound / sqrt(T)
};

/// sizes[k] = (|S_k|, |A_k|).
TheoryConstants theory_constants(int m, int K, double psi, double eta,
                                 const std::vector<std::pair<int, int>>& sizes);

/// Solution of a coupled stationary program over the product of occupancy
/// polytopes.
struct StationarySolution {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    std::vector<Eigen::VectorXd> theta;  // per MDP
    Eigen::VectorXd duals;               // per coupling constraint, >= 0
    long lp_iterations = 0;
};

/// Assembles min sum_k <f_k, theta_k> over theta_k in the occupancy polytope
/// of models[k], subject to sum_k <g_{i,k}, theta_k> <= rhs_i per constraint.
/// mean_g[i][k] is constraint i's table on MDP k.
LinearProgram assemble_coupled_lp(const std::vector<MdpModel>& models,
                                  const std::vector<Eigen::VectorXd>& mean_f,
                                  const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                  const Eigen::VectorXd& rhs);

/// Best stationary product policy for the averaged tables (coupling rhs 0).
StationarySolution best_stationary(const std::vector<MdpModel>& models,
                                   const std::vector<Eigen::VectorXd>& mean_f,
                                   const std::vector<std::vector<Eigen::VectorXd>>& mean_g);

/// Same program with every coupling constraint loosened to <= slack.
StationarySolution relaxed_stationary(const std::vector<MdpModel>& models,
                                      const std::vector<Eigen::VectorXd>& mean_f,
                                      const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                      double slack);

/// Sensitivity check of the relaxation: 0 <= best - relaxed <= slack * 2 sqrt(m)
/// * Psi * K / eta.  `ok` reports whether both sides held within 1e-6.
struct PerturbationGapReport {
    double original = 0.0;
    double relaxed = 0.0;
    double gap = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    double eta = 0.0;
    bool ok = false;
};

PerturbationGapReport perturbation_gap_check(
    const std::vector<MdpModel>& models, const std::vector<Eigen::VectorXd>& mean_f,
    const std::vector<std::vector<Eigen::VectorXd>>& mean_g, double slack, double psi,
    double eta);

}  // namespace ocmdp
