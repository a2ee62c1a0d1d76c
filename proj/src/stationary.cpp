#include "ocmdp/stationary.hpp"

#include <cmath>
#include <limits>

namespace ocmdp {

Eigen::MatrixXd policy_transition_matrix(const MdpModel& model, const PolicyTable& policy) {
    if (policy.num_states() != model.num_states || policy.num_actions() != model.num_actions)
        throw DimensionError("policy_transition_matrix: policy shape does not match model");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(model.num_states, model.num_states);
    for (int a = 0; a < model.num_actions; ++a)
        P += policy.probs.col(a).asDiagonal() * model.kernel[a];
    return P;
}

namespace {

// Fixed tilted start so periodic chains actually oscillate instead of being
// handed their stationary point by symmetry.
Eigen::VectorXd tilted_start(int n) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = 1.0 + 0.25 * (i + 1.0) / n;
    d /= d.sum();
    return d;
}

// Solves d (I - P + 11^T) = 1^T, the classic dense route to the stationary
// distribution of an ergodic chain.  Returns false when the system is
// singular or produces a non-distribution.
bool dense_stationary(const Eigen::MatrixXd& P, Eigen::VectorXd& out, double residual_tol) {
    const int n = static_cast<int>(P.rows());
    Eigen::MatrixXd M = (Eigen::MatrixXd::Identity(n, n) - P +
                         Eigen::MatrixXd::Ones(n, n)).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd d = lu.solve(Eigen::VectorXd::Ones(n));
    if (!d.allFinite()) return false;
    if (d.minCoeff() < -1e-9) return false;
    double sum = d.sum();
    if (std::abs(sum - 1.0) > 1e-6) return false;
    d = d.cwiseMax(0.0);
    d /= d.sum();
    if ((d.transpose() * P - d.transpose()).cwiseAbs().sum() > residual_tol) return false;
    out = d;
    return true;
}

}  // namespace

StateDistribution stationary_distribution(const Eigen::MatrixXd& transition,
                                          double residual_tol, long max_iterations) {
    const int n = static_cast<int>(transition.rows());
    if (n == 0 || transition.cols() != n)
        throw DimensionError("stationary_distribution: transition matrix must be square");

    // rank(I - P) < n - 1 means the stationary distribution is not unique
    // (multiple closed classes); power iteration would silently return its
    // start vector in that case.
    {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - transition);
        if (lu.rank() < n - 1) {
            Eigen::VectorXd d0 = tilted_start(n);
            throw NonConvergenceError(
                "stationary_distribution: stationary distribution is not unique "
                "(rank deficiency in I - P)",
                std::vector<double>(d0.data(), d0.data() + d0.size()));
        }
    }

    Eigen::VectorXd d = tilted_start(n);
    Eigen::VectorXd next(n);
    // Drive the iteration well below the contract residual; extra digits are
    // nearly free at these sizes and downstream oracles compare at 1e-9.
    const double target = std::min(residual_tol, 1e-13);
    double res = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iterations; ++it) {
        next.noalias() = transition.transpose() * d;
        res = (next - d).cwiseAbs().sum();
        d = next;
        if (res <= target) break;
    }
    if (res <= residual_tol) {
        d = d.cwiseMax(0.0);
        d /= d.sum();
        return StateDistribution(d);
    }

    Eigen::VectorXd dense;
    if (dense_stationary(transition, dense, residual_tol))
        return StateDistribution(dense);

    throw NonConvergenceError(
        "stationary_distribution: no unique stationary distribution found "
        "(power iteration stalled at residual " + std::to_string(res) +
        " and the dense solve is singular)",
        std::vector<double>(d.data(), d.data() + d.size()));
}

OccupancyVector policy_to_theta(const MdpModel& model, const PolicyTable& policy) {
    StateDistribution d = stationary_distribution(policy_transition_matrix(model, policy));
    Eigen::VectorXd theta(model.table_size());
    for (int s = 0; s < model.num_states; ++s)
        for (int a = 0; a < model.num_actions; ++a)
            theta(model.index(s, a)) = d.d(s) * policy.probs(s, a);
    return OccupancyVector(std::move(theta));
}

PolicyTable theta_to_policy(const MdpModel& model, const OccupancyVector& theta,
                            double zero_mass_tol) {
    if (theta.v.size() != model.table_size())
        throw DimensionError("theta_to_policy: occupancy length does not match model");
    Eigen::MatrixXd probs(model.num_states, model.num_actions);
    for (int s = 0; s < model.num_states; ++s) {
        double marginal = 0.0;
        for (int a = 0; a < model.num_actions; ++a)
            marginal += theta.v(model.index(s, a));
        if (marginal < zero_mass_tol) {
            // Unvisited state: any action row is consistent; the uniform row is
            // the deterministic convention.
            probs.row(s).setConstant(1.0 / model.num_actions);
        } else {
            for (int a = 0; a < model.num_actions; ++a)
                probs(s, a) = std::max(0.0, theta.v(model.index(s, a))) / marginal;
            probs.row(s) /= probs.row(s).sum();
        }
    }
    return PolicyTable(std::move(probs));
}

int sample_next_state(const MdpModel& model, int s, int a, std::mt19937_64& rng) {
    if (s < 0 || s >= model.num_states || a < 0 || a >= model.num_actions)
        throw DimensionError("sample_next_state: state or action out of range");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    for (int t = 0; t < model.num_states; ++t) {
        cum += model.kernel[a](s, t);
        if (u < cum) return t;
    }
    return model.num_states - 1;  // guard against roundoff at u ~ 1
}

int sample_action(const PolicyTable& policy, int s, std::mt19937_64& rng) {
    if (s < 0 || s >= policy.probs.rows())
        throw DimensionError("sample_action: state out of range");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    const int na = static_cast<int>(policy.probs.cols());
    for (int a = 0; a < na; ++a) {
        cum += policy.probs(s, a);
        if (u < cum) return a;
    }
    return na - 1;
}

std::vector<PolicyTable> enumerate_pure_policies(const MdpModel& model) {
    const int n = model.num_states;
    const int na = model.num_actions;
    long count = 1;
    for (int s = 0; s < n; ++s) count *= na;
    std::vector<PolicyTable> out;
    out.reserve(count);
    std::vector<int> actions(n, 0);
    for (long idx = 0; idx < count; ++idx) {
        long rem = idx;
        for (int s = n - 1; s >= 0; --s) {
            actions[s] = static_cast<int>(rem % na);
            rem /= na;
        }
        out.push_back(PolicyTable::pure(actions, na));
    }
    return out;
}

std::vector<Eigen::VectorXd> pure_policy_vertices(const MdpModel& model) {
    std::vector<Eigen::VectorXd> vertices;
    for (const auto& policy : enumerate_pure_policies(model))
        vertices.push_back(policy_to_theta(model, policy).v);
    return vertices;
}

Eigen::VectorXd sample_vertex_mixture(const std::vector<Eigen::VectorXd>& vertices,
                                      std::mt19937_64& rng) {
    if (vertices.empty()) throw DimensionError("sample_vertex_mixture: no vertices");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd point = Eigen::VectorXd::Zero(vertices.front().size());
    double total = 0.0;
    for (const auto& v : vertices) {
        // -log U gives Exp(1) weights; normalizing yields Dirichlet(1).
        double w = -std::log(std::max(unif(rng), 1e-300));
        point += w * v;
        total += w;
    }
    return point / total;
}

}  // namespace ocmdp
