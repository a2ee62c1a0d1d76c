#include "ocmdp/model.hpp"

#include <cmath>
#include <json.hpp>

namespace ocmdp {

using nlohmann::json;

MdpModel::MdpModel(int states, int actions, std::vector<Eigen::MatrixXd> kernels)
    : num_states(states), num_actions(actions), kernel(std::move(kernels)) {
    if (num_states <= 0 || num_actions <= 0)
        throw DimensionError("MdpModel: state and action counts must be positive");
    if (static_cast<int>(kernel.size()) != num_actions)
        throw DimensionError("MdpModel: expected one kernel per action");
    for (const auto& P : kernel)
        if (P.rows() != num_states || P.cols() != num_states)
            throw DimensionError("MdpModel: kernel must be |S| x |S|");
    validate();
}

void MdpModel::validate(double row_sum_tol) const {
    for (int a = 0; a < num_actions; ++a) {
        for (int s = 0; s < num_states; ++s) {
            double sum = 0.0;
            for (int t = 0; t < num_states; ++t) {
                double p = kernel[a](s, t);
                if (p < 0.0)
                    throw ValidationError("MdpModel: negative transition probability at action " +
                                          std::to_string(a) + ", state " + std::to_string(s));
                sum += p;
            }
            if (std::abs(sum - 1.0) > row_sum_tol)
                throw ValidationError("MdpModel: row sum " + std::to_string(sum) +
                                      " violates stochasticity at action " + std::to_string(a) +
                                      ", state " + std::to_string(s));
        }
    }
}

PolicyTable PolicyTable::uniform(int num_states, int num_actions) {
    if (num_states <= 0 || num_actions <= 0)
        throw DimensionError("PolicyTable::uniform: counts must be positive");
    return PolicyTable(Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions));
}

PolicyTable PolicyTable::pure(const std::vector<int>& action_of_state, int num_actions) {
    const int n = static_cast<int>(action_of_state.size());
    if (n == 0) throw DimensionError("PolicyTable::pure: empty action map");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, num_actions);
    for (int s = 0; s < n; ++s) {
        if (action_of_state[s] < 0 || action_of_state[s] >= num_actions)
            throw ValidationError("PolicyTable::pure: action out of range");
        p(s, action_of_state[s]) = 1.0;
    }
    return PolicyTable(std::move(p));
}

void PolicyTable::validate(double row_sum_tol) const {
    for (int s = 0; s < probs.rows(); ++s) {
        if (probs.row(s).minCoeff() < 0.0)
            throw ValidationError("PolicyTable: negative probability at state " + std::to_string(s));
        if (std::abs(probs.row(s).sum() - 1.0) > row_sum_tol)
            throw ValidationError("PolicyTable: row sum violates normalization at state " +
                                  std::to_string(s));
    }
}

double OccupancyVector::feasibility_residual(const MdpModel& model) const {
    if (v.size() != model.table_size())
        throw DimensionError("OccupancyVector: length does not match model table size");
    double res = std::abs(v.sum() - 1.0);
    res = std::max(res, -std::min(0.0, v.minCoeff()));
    // Balance: inflow under the kernels equals the state marginal.
    for (int t = 0; t < model.num_states; ++t) {
        double inflow = 0.0;
        for (int s = 0; s < model.num_states; ++s)
            for (int a = 0; a < model.num_actions; ++a)
                inflow += v(model.index(s, a)) * model.kernel[a](s, t);
        double marginal = 0.0;
        for (int a = 0; a < model.num_actions; ++a) marginal += v(model.index(t, a));
        res = std::max(res, std::abs(inflow - marginal));
    }
    return res;
}

void StateDistribution::validate(double tol) const {
    if (d.size() == 0) throw DimensionError("StateDistribution: empty");
    if (d.minCoeff() < -tol || std::abs(d.sum() - 1.0) > tol)
        throw ValidationError("StateDistribution: not a probability vector");
}

MixingEstimate MixingEstimate::from_delta(int r, double delta) {
    if (r <= 0) throw DimensionError("MixingEstimate: r must be positive");
    if (delta <= 0.0 || delta > 1.0)
        throw ValidationError("MixingEstimate: delta must lie in (0, 1]");
    MixingEstimate est;
    est.r = r;
    est.delta = delta;
    est.tau = delta >= 1.0 ? 0.0 : -1.0 / std::log1p(-delta);
    return est;
}

std::string model_to_json(const MdpModel& model) {
    json j;
    j["num_states"] = model.num_states;
    j["num_actions"] = model.num_actions;
    json kernels = json::array();
    for (const auto& P : model.kernel) {
        json rows = json::array();
        for (int s = 0; s < model.num_states; ++s) {
            json row = json::array();
            for (int t = 0; t < model.num_states; ++t) row.push_back(P(s, t));
            rows.push_back(std::move(row));
        }
        kernels.push_back(std::move(rows));
    }
    j["kernel"] = std::move(kernels);
    return j.dump(2);
}

MdpModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model JSON parse failure: ") + e.what());
    }
    if (!j.contains("num_states") || !j.contains("num_actions") || !j.contains("kernel"))
        throw ValidationError("model JSON missing num_states/num_actions/kernel");
    const int ns = j["num_states"].get<int>();
    const int na = j["num_actions"].get<int>();
    if (ns <= 0 || na <= 0) throw ValidationError("model JSON: nonpositive dimensions");
    const auto& kj = j["kernel"];
    if (!kj.is_array() || static_cast<int>(kj.size()) != na)
        throw ValidationError("model JSON: kernel must list one matrix per action");
    std::vector<Eigen::MatrixXd> kernels;
    kernels.reserve(na);
    for (const auto& mat : kj) {
        if (!mat.is_array() || static_cast<int>(mat.size()) != ns)
            throw ValidationError("model JSON: kernel matrix has wrong row count");
        Eigen::MatrixXd P(ns, ns);
        for (int s = 0; s < ns; ++s) {
            const auto& row = mat[s];
            if (!row.is_array() || static_cast<int>(row.size()) != ns)
                throw ValidationError("model JSON: kernel row has wrong length");
            for (int t = 0; t < ns; ++t) P(s, t) = row[t].get<double>();
        }
        kernels.push_back(std::move(P));
    }
    // The constructor re-validates row sums and shapes.
    return MdpModel(ns, na, std::move(kernels));
}

}  // namespace ocmdp
