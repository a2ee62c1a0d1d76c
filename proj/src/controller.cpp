#include "ocmdp/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocmdp/mixing.hpp"
#include "ocmdp/rng.hpp"
#include "ocmdp/stationary.hpp"

namespace ocmdp {

ControllerParams ControllerParams::auto_config(long T) {
    if (T < 1) throw ValidationError("ControllerParams: horizon must be positive");
    ControllerParams p;
    p.V = std::sqrt(static_cast<double>(T));
    p.alpha = static_cast<double>(T);
    p.horizon = T;
    return p;
}

void ControllerParams::validate() const {
    if (V <= 0.0 || alpha <= 0.0 || horizon < 1)
        throw ValidationError("ControllerParams: V, alpha must be positive and horizon >= 1");
}

void FunctionSample::validate(const std::vector<MdpModel>& models, int m, double psi) const {
    const int K = static_cast<int>(models.size());
    if (static_cast<int>(f.size()) != K)
        throw DimensionError("FunctionSample: one penalty table per MDP required");
    if (static_cast<int>(g.size()) != m)
        throw DimensionError("FunctionSample: one table row per constraint required");
    const double cap = psi * (1.0 + 1e-12) + 1e-12;
    for (int k = 0; k < K; ++k) {
        if (f[k].size() != models[k].table_size())
            throw DimensionError("FunctionSample: penalty table size mismatch at MDP " +
                                 std::to_string(k));
        if (f[k].cwiseAbs().maxCoeff() > cap)
            throw ValidationError("FunctionSample: penalty table exceeds the bound at MDP " +
                                  std::to_string(k));
    }
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(g[i].size()) != K)
            throw DimensionError("FunctionSample: constraint " + std::to_string(i) +
                                 " must carry one table per MDP");
        for (int k = 0; k < K; ++k) {
            if (g[i][k].size() != models[k].table_size())
                throw DimensionError("FunctionSample: constraint table size mismatch");
            if (g[i][k].cwiseAbs().maxCoeff() > cap)
                throw ValidationError("FunctionSample: constraint table exceeds the bound");
        }
    }
}

Eigen::VectorXd assemble_weights(double V, const Eigen::VectorXd& f_prev,
                                 const Eigen::VectorXd& q,
                                 const std::vector<Eigen::VectorXd>& g_prev_for_k) {
    if (q.size() != static_cast<Eigen::Index>(g_prev_for_k.size()))
        throw DimensionError("assemble_weights: queue / table count mismatch");
    Eigen::VectorXd w = V * f_prev;
    for (Eigen::Index i = 0; i < q.size(); ++i) w += q(i) * g_prev_for_k[i];
    return w;
}

Controller::Controller(std::vector<MdpModel> models, int m, double psi,
                       ControllerParams params, bool verify_unichain)
    : models_(std::move(models)), m_(m), psi_(psi), params_(params) {
    if (models_.empty()) throw DimensionError("Controller: at least one MDP required");
    if (m_ < 0) throw DimensionError("Controller: negative constraint count");
    if (psi_ <= 0.0) throw ValidationError("Controller: psi must be positive");
    params_.validate();
    for (std::size_t k = 0; k < models_.size(); ++k) {
        if (verify_unichain) {
            auto res = check_unichain(models_[k]);
            if (!res.estimate)
                throw ValidationError("Controller: MDP " + std::to_string(k) +
                                      " failed the unichain check");
        }
        specs_.push_back(build_polyhedron(models_[k]));
        theta_.push_back(
            policy_to_theta(models_[k], PolicyTable::uniform(models_[k].num_states,
                                                             models_[k].num_actions))
                .v);
    }
    queues_.q = Eigen::VectorXd::Zero(m_);
}

const Eigen::VectorXd& Controller::theta(int k) const {
    if (k < 0 || k >= num_mdps()) throw DimensionError("Controller: MDP index out of range");
    return theta_[k];
}

Eigen::VectorXd Controller::weights(int k) const {
    if (k < 0 || k >= num_mdps()) throw DimensionError("Controller: MDP index out of range");
    if (t_ < 1)
        throw SequencingError("Controller: no previous-slot functions before slot 1");
    std::vector<Eigen::VectorXd> g_for_k;
    g_for_k.reserve(m_);
    for (int i = 0; i < m_; ++i) g_for_k.push_back(g_prev_[i][k]);
    return assemble_weights(params_.V, f_prev_[k], queues_.q, g_for_k);
}

Decision Controller::begin_slot(const std::vector<int>& states, std::mt19937_64& rng) {
    if (mid_slot_)
        throw SequencingError("Controller: begin_slot called twice without end_slot");
    if (t_ >= params_.horizon)
        throw SequencingError("Controller: horizon exhausted");
    const int K = num_mdps();
    if (static_cast<int>(states.size()) != K)
        throw DimensionError("Controller: one state per MDP required");
    for (int k = 0; k < K; ++k)
        if (states[k] < 0 || states[k] >= models_[k].num_states)
            throw DimensionError("Controller: state out of range for MDP " + std::to_string(k));

    Decision d;
    d.t = t_;
    d.states = states;
    d.queues = queues_.q;
    theta_before_ = theta_;

    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd next;
        if (t_ == 0) {
            next = theta_[k];  // initial separable stationary policy
        } else {
            const Eigen::VectorXd w = weights(k);
            const Eigen::VectorXd target = theta_[k] - w / (2.0 * params_.alpha);
            next = project_theta(specs_[k], target).point;
        }
        d.step_norms.push_back((next - theta_[k]).norm());
        d.theta.push_back(std::move(next));
        d.policies.push_back(theta_to_policy(models_[k], OccupancyVector{d.theta[k]}));
        d.actions.push_back(sample_action(d.policies[k], states[k], rng));
    }

    theta_ = d.theta;
    pending_ = d;
    mid_slot_ = true;
    return d;
}

SlotRecord Controller::end_slot(const FunctionSample& revealed) {
    if (!mid_slot_) throw SequencingError("Controller: end_slot without begin_slot");
    revealed.validate(models_, m_, psi_);
    const int K = num_mdps();

    SlotRecord rec;
    rec.t = t_;
    rec.states = pending_.states;
    rec.actions = pending_.actions;
    rec.q_norm = queues_.norm();
    rec.step_norms = pending_.step_norms;
    rec.f_real.resize(K);
    rec.f_dot.resize(K);
    rec.g_real.resize(m_, K);
    rec.g_dot.resize(m_, K);
    for (int k = 0; k < K; ++k) {
        const int idx = models_[k].index(rec.states[k], rec.actions[k]);
        rec.f_real[k] = revealed.f[k](idx);
        rec.f_dot[k] = revealed.f[k].dot(theta_[k]);
        for (int i = 0; i < m_; ++i) {
            rec.g_real(i, k) = revealed.g[i][k](idx);
            rec.g_dot(i, k) = revealed.g[i][k].dot(theta_[k]);
        }
    }

    // Virtual-queue update from the slot t-1 tables; Q(0) = Q(1) = 0.
    Eigen::VectorXd q_after = queues_.q;
    if (t_ >= 1) {
        for (int i = 0; i < m_; ++i) {
            double drift = 0.0;
            for (int k = 0; k < K; ++k) drift += g_prev_[i][k].dot(theta_[k]);
            q_after(i) = std::max(queues_.q(i) + drift, 0.0);
        }
    }

    if (checker_ != nullptr && t_ >= 1)
        checker_->observe(t_, theta_before_, theta_, f_prev_, g_prev_, queues_.q, q_after);

    queues_.q = std::move(q_after);
    f_prev_ = revealed.f;
    g_prev_ = revealed.g;
    ++t_;
    mid_slot_ = false;
    return rec;
}

InvariantChecker::InvariantChecker(const std::vector<MdpModel>& models, int m,
                                   ControllerParams params, InvariantCheckerConfig cfg)
    : models_(models), m_(m), params_(params), cfg_(cfg) {
    params_.validate();
    if (cfg_.psi <= 0.0) throw ValidationError("InvariantChecker: psi must be positive");
    for (const auto& model : models_) {
        vertices_.push_back(pure_policy_vertices(model));
        sqrt_sa_.push_back(std::sqrt(static_cast<double>(model.table_size())));
    }
    cum_lhs_ = Eigen::VectorXd::Zero(m_);
    q_first_ = Eigen::VectorXd::Zero(m_);
    rng_ = make_engine(cfg_.seed, 0x636865636bULL);
}

void InvariantChecker::observe(long t, const std::vector<Eigen::VectorXd>& theta_prev,
                               const std::vector<Eigen::VectorXd>& theta_curr,
                               const std::vector<Eigen::VectorXd>& f_prev,
                               const std::vector<std::vector<Eigen::VectorXd>>& g_prev,
                               const Eigen::VectorXd& q_before,
                               const Eigen::VectorXd& q_after) {
    const int K = static_cast<int>(models_.size());
    const double KPsi = static_cast<double>(K) * cfg_.psi;
    if (!have_first_) {
        q_first_ = q_before;  // Q at the first checked slot, i.e. Q(1)
        have_first_ = true;
    }

    // Queue increment caps: |Q_i(t+1) - Q_i(t)| <= K Psi per constraint and
    // sqrt(m) K Psi for the norm.
    for (int i = 0; i < m_; ++i) {
        const double inc = std::abs(q_after(i) - q_before(i));
        if (inc > KPsi + cfg_.exact_slack)
            throw InvariantViolation("queue-increment", t, inc, KPsi);
    }
    {
        const double inc = std::abs(q_after.norm() - q_before.norm());
        const double cap = std::sqrt(static_cast<double>(m_)) * KPsi;
        if (inc > cap + cfg_.exact_slack)
            throw InvariantViolation("queue-norm-increment", t, inc, cap);
    }

    // Quadratic drift bound.
    {
        const double drift = 0.5 * q_after.squaredNorm() - 0.5 * q_before.squaredNorm();
        double rhs = 0.5 * m_ * KPsi * KPsi;
        for (int i = 0; i < m_; ++i) {
            double inner = 0.0;
            for (int k = 0; k < K; ++k) inner += g_prev[i][k].dot(theta_curr[k]);
            rhs += q_before(i) * inner;
        }
        if (drift > rhs + cfg_.slack) throw InvariantViolation("drift-bound", t, drift, rhs);
    }

    // Slow-update bound per MDP.
    for (int k = 0; k < K; ++k) {
        double g_sq = 0.0;
        for (int i = 0; i < m_; ++i) g_sq += g_prev[i][k].squaredNorm();
        const double cap = (params_.V * f_prev[k].norm() + q_before.norm() * std::sqrt(g_sq)) /
                           (2.0 * params_.alpha);
        const double step = (theta_curr[k] - theta_prev[k]).norm();
        if (step > cap + cfg_.exact_slack)
            throw InvariantViolation("slow-update", t, step, cap);
    }

    // Subproblem optimality against random feasible comparison points.
    for (int k = 0; k < K; ++k) {
        double q_dot_curr = 0.0;
        for (int i = 0; i < m_; ++i) q_dot_curr += q_before(i) * g_prev[i][k].dot(theta_curr[k]);
        const double step_sq = (theta_curr[k] - theta_prev[k]).squaredNorm();
        const double lhs = params_.V * f_prev[k].dot(theta_curr[k] - theta_prev[k]) +
                           q_dot_curr + params_.alpha * step_sq;
        for (int rep = 0; rep < cfg_.dpp_samples; ++rep) {
            const Eigen::VectorXd star = sample_vertex_mixture(vertices_[k], rng_);
            double q_dot_star = 0.0;
            for (int i = 0; i < m_; ++i)
                q_dot_star += q_before(i) * g_prev[i][k].dot(star);
            const double rhs = params_.V * f_prev[k].dot(star - theta_prev[k]) + q_dot_star +
                               params_.alpha * (star - theta_prev[k]).squaredNorm() -
                               params_.alpha * (star - theta_curr[k]).squaredNorm();
            if (lhs > rhs + cfg_.dpp_slack)
                throw InvariantViolation("subproblem-optimality", t, lhs, rhs);
        }
    }

    // Cumulative virtual-queue lower bound on the pre-decision coupling sums.
    double step_term = 0.0;
    for (int k = 0; k < K; ++k)
        step_term += sqrt_sa_[k] * (theta_curr[k] - theta_prev[k]).norm();
    cum_step_ += cfg_.psi * step_term;
    for (int i = 0; i < m_; ++i) {
        double inner = 0.0;
        for (int k = 0; k < K; ++k) inner += g_prev[i][k].dot(theta_prev[k]);
        cum_lhs_(i) += inner;
        const double rhs = q_after(i) - q_first_(i) + cum_step_;
        if (cum_lhs_(i) > rhs + cfg_.slack)
            throw InvariantViolation("cumulative-queue-bound", t, cum_lhs_(i), rhs);
    }

    ++slots_checked_;
}

}  // namespace ocmdp
