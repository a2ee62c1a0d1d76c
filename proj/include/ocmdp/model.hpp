#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ocmdp/errors.hpp"

namespace ocmdp {

/// Finite MDP with per-action transition kernels.  Kernel rows are checked
/// row-stochastic (sum 1 within 1e-12, entries nonnegative) on construction
/// and on JSON load.
struct MdpModel {
    int num_states = 0;
    int num_actions = 0;
    /// kernel[a] is the |S| x |S| matrix P_a; kernel[a](s, s') = P(s' | s, a).
    std::vector<Eigen::MatrixXd> kernel;

    MdpModel() = default;
    MdpModel(int states, int actions, std::vector<Eigen::MatrixXd> kernels);

    /// State-action table length |S|*|A|; tables are flattened row-major,
    /// index (s, a) -> s * num_actions + a.
    int table_size() const { return num_states * num_actions; }
    int index(int s, int a) const { return s * num_actions + a; }

    /// Throws ValidationError if any kernel row fails the stochasticity check.
    void validate(double row_sum_tol = 1e-12) const;
};

/// Randomized stationary policy; row s is the action distribution pi(.|s).
struct PolicyTable {
    Eigen::MatrixXd probs;  // |S| x |A|

    PolicyTable() = default;
    explicit PolicyTable(Eigen::MatrixXd p) : probs(std::move(p)) {}

    static PolicyTable uniform(int num_states, int num_actions);
    /// Deterministic policy from a state -> action map.
    static PolicyTable pure(const std::vector<int>& action_of_state, int num_actions);

    int num_states() const { return static_cast<int>(probs.rows()); }
    int num_actions() const { return static_cast<int>(probs.cols()); }
    void validate(double row_sum_tol = 1e-12) const;
};

/// Occupancy measure over state-action pairs, flattened like MdpModel tables.
/// Valid occupancies are nonnegative, sum to 1, and satisfy the stationarity
/// balance equations of their model.
struct OccupancyVector {
    Eigen::VectorXd v;

    OccupancyVector() = default;
    explicit OccupancyVector(Eigen::VectorXd x) : v(std::move(x)) {}

    double operator()(const MdpModel& model, int s, int a) const {
        return v(model.index(s, a));
    }

    /// Max violation over {negativity, sum-to-one, balance residual}.
    double feasibility_residual(const MdpModel& model) const;
};

/// Probability distribution over states.
struct StateDistribution {
    Eigen::VectorXd d;

    StateDistribution() = default;
    explicit StateDistribution(Eigen::VectorXd x) : d(std::move(x)) {}
    void validate(double tol = 1e-9) const;
};

/// Uniform-mixing certificate: every product of r stationary-policy transition
/// matrices is entrywise >= delta/|S|, giving per-r-block l1 contraction by
/// 1 - delta.  tau is the matching exponential time constant.
struct MixingEstimate {
    int r = 0;
    double delta = 0.0;  // |S| * (min entry over scanned r-step products)
    double tau = 0.0;    // -1 / ln(1 - delta); 0 when delta == 1 (one-step coupling)

    /// Guaranteed l1 contraction factor per r-step block: e^{-1/tau} = 1 - delta.
    double contraction_factor() const { return delta >= 1.0 ? 0.0 : 1.0 - delta; }

    static MixingEstimate from_delta(int r, double delta);
};

/// Serialization: {"num_states": n, "num_actions": m, "kernel": [a][s][s']}.
/// Loading validates row sums and shape; failures raise ValidationError.
std::string model_to_json(const MdpModel& model);
MdpModel model_from_json(const std::string& text);

}  // namespace ocmdp
