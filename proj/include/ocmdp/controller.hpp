#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "ocmdp/errors.hpp"
#include "ocmdp/model.hpp"
#include "ocmdp/projection.hpp"

namespace ocmdp {

/// Tuning of the online controller.  auto_config applies the scaling that
/// yields the sqrt(T) guarantees: V = sqrt(T), alpha = T.
struct ControllerParams {
    double V = 0.0;        // penalty weight
    double alpha = 0.0;    // proximal weight
    long horizon = 0;      // number of slots T

    static ControllerParams auto_config(long T);
    void validate() const;
};

/// Nonnegative virtual queues, one per coupling constraint.
struct VirtualQueues {
    Eigen::VectorXd q;
    double norm() const { return q.size() ? q.norm() : 0.0; }
};

/// One slot's revealed functions: per-MDP penalty tables and per-constraint,
/// per-MDP coupling tables, all sup-norm bounded by Psi.
struct FunctionSample {
    std::vector<Eigen::VectorXd> f;                // [k], length |S_k||A_k|
    std::vector<std::vector<Eigen::VectorXd>> g;   // [i][k]

    void validate(const std::vector<MdpModel>& models, int m, double psi) const;
};

/// What the controller committed to in one slot, before any revelation.
struct Decision {
    long t = 0;
    std::vector<Eigen::VectorXd> theta;    // theta_t per MDP
    std::vector<PolicyTable> policies;     // recovered pi_t per MDP
    std::vector<int> states;               // s_t per MDP (caller-supplied)
    std::vector<int> actions;              // a_t ~ pi_t(.|s_t) per MDP
    std::vector<double> step_norms;        // ||theta_t - theta_{t-1}||_2 per MDP
    Eigen::VectorXd queues;                // Q(t) used in this slot's weights
};

/// One completed slot: the decision plus the realized and expected costs
/// under the functions revealed after the action.
struct SlotRecord {
    long t = 0;
    std::vector<int> states, actions;
    std::vector<double> f_real;      // f_t^{(k)}(s_t, a_t)
    Eigen::MatrixXd g_real;          // m x K, g_{i,t}^{(k)}(s_t, a_t)
    std::vector<double> f_dot;       // <f_t^{(k)}, theta_t^{(k)}>
    Eigen::MatrixXd g_dot;           // m x K, <g_{i,t}^{(k)}, theta_t^{(k)}>
    double q_norm = 0.0;             // ||Q(t)||_2
    std::vector<double> step_norms;  // per MDP
};

struct InvariantCheckerConfig {
    double psi = 1.0;
    double slack = 1e-6;       // additive slack for the two cumulative/drift bounds
    double exact_slack = 1e-9; // slack for the roundoff-exact per-slot bounds
    double dpp_slack = 1e-8;   // slack for the subproblem optimality inequality
    int dpp_samples = 20;      // random feasible comparison points per (slot, MDP)
    std::uint64_t seed = 0;    // the checker's own stream; never touches run RNG
};

/// Verifies the per-slot sample-path inequalities on the exact run data and
/// throws InvariantViolation naming the failed bound and slot.  The five
/// families: cumulative virtual-queue lower bound, quadratic drift bound,
/// subproblem optimality against random feasible points, the deterministic
/// slow-update bound, and queue increment caps.
class InvariantChecker {
public:
    InvariantChecker(const std::vector<MdpModel>& models, int m, ControllerParams params,
                     InvariantCheckerConfig cfg);

    /// Feed slot t >= 1 right after its queue update.  q_before = Q(t),
    /// q_after = Q(t+1); f_prev/g_prev are the slot t-1 functions the
    /// controller optimized against.
    void observe(long t, const std::vector<Eigen::VectorXd>& theta_prev,
                 const std::vector<Eigen::VectorXd>& theta_curr,
                 const std::vector<Eigen::VectorXd>& f_prev,
                 const std::vector<std::vector<Eigen::VectorXd>>& g_prev,
                 const Eigen::VectorXd& q_before, const Eigen::VectorXd& q_after);

    long slots_checked() const { return slots_checked_; }

private:
    std::vector<MdpModel> models_;
    int m_;
    ControllerParams params_;
    InvariantCheckerConfig cfg_;
    std::vector<std::vector<Eigen::VectorXd>> vertices_;  // per MDP
    std::vector<double> sqrt_sa_;                         // sqrt(|A_k||S_k|)
    Eigen::VectorXd cum_lhs_;        // per i: sum_t sum_k <g_{i,t-1}, theta_{t-1}>
    double cum_step_ = 0.0;          // sum_t sum_k sqrt(|A||S|) ||dtheta||
    Eigen::VectorXd q_first_;        // Q(1)
    bool have_first_ = false;
    std::mt19937_64 rng_;
    long slots_checked_ = 0;
};

/// weight table w_t^{(k)} = V f_{t-1}^{(k)} + sum_i q_i g_{i,t-1}^{(k)}.
Eigen::VectorXd assemble_weights(double V, const Eigen::VectorXd& f_prev,
                                 const Eigen::VectorXd& q,
                                 const std::vector<Eigen::VectorXd>& g_prev_for_k);

/// The online controller: virtual queues, per-MDP proximal projection
/// subproblems, policy recovery, and action sampling.  Functions for slot t
/// are unknown until after the slot-t decision; the two-phase API makes that
/// ordering structural: begin_slot can only see what end_slot stored in
/// earlier slots.
class Controller {
public:
    /// psi: uniform sup-norm bound on all revealed tables; every model must
    /// pass the unichain check (skippable when the scenario already certified
    /// it).
    Controller(std::vector<MdpModel> models, int m, double psi, ControllerParams params,
               bool verify_unichain = true);

    /// Phase one of slot t: assemble weights from slot t-1 data, project,
    /// recover policies, and sample one action per MDP for the given states.
    /// Slot 0 plays the initial uniform-policy occupancy.
    Decision begin_slot(const std::vector<int>& states, std::mt19937_64& rng);

    /// Phase two of slot t: reveal the slot-t functions, record realized and
    /// expected costs, and apply the virtual-queue update (which uses only
    /// slot t-1 tables; Q(0) = Q(1) = 0).
    SlotRecord end_slot(const FunctionSample& revealed);

    /// w_t^{(k)} for the upcoming slot.  Requires t >= 1: slot 0 has no
    /// previous-slot functions.
    Eigen::VectorXd weights(int k) const;

    void attach_checker(InvariantChecker* checker) { checker_ = checker; }

    long slot() const { return t_; }
    int num_mdps() const { return static_cast<int>(models_.size()); }
    int num_constraints() const { return m_; }
    const VirtualQueues& queues() const { return queues_; }
    const Eigen::VectorXd& theta(int k) const;
    const ControllerParams& params() const { return params_; }
    const MdpModel& model(int k) const { return models_.at(k); }

private:
    std::vector<MdpModel> models_;
    int m_;
    double psi_;
    ControllerParams params_;
    std::vector<PolyhedronSpec> specs_;
    std::vector<Eigen::VectorXd> theta_;       // theta_{t-1} between slots
    std::vector<Eigen::VectorXd> f_prev_;      // slot t-1 tables
    std::vector<std::vector<Eigen::VectorXd>> g_prev_;
    VirtualQueues queues_;                     // Q(t)
    long t_ = 0;
    bool mid_slot_ = false;
    Decision pending_;
    std::vector<Eigen::VectorXd> theta_before_;  // theta_{t-1} while mid-slot
    InvariantChecker* checker_ = nullptr;
};

}  // namespace ocmdp
