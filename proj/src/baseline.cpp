#include "ocmdp/baseline.hpp"

#include <cmath>

#include "ocmdp/projection.hpp"

namespace ocmdp {

TheoryConstants theory_constants(int m, int K, double psi, double eta,
                                 const std::vector<std::pair<int, int>>& sizes) {
    if (K <= 0 || static_cast<int>(sizes.size()) != K)
        throw DimensionError("theory_constants: sizes must list one (|S|,|A|) pair per MDP");
    if (m < 0 || psi <= 0.0) throw ValidationError("theory_constants: bad m or psi");
    if (m > 0 && eta <= 0.0)
        throw ValidationError("theory_constants: constrained problems need eta > 0");

    TheoryConstants out;
    double sum_sa = 0.0;        // sum_k |S_k||A_k|
    double sum_sqrt_msa = 0.0;  // sum_k sqrt(m |A_k||S_k|)
    for (auto [s, a] : sizes) {
        sum_sa += double(s) * a;
        sum_sqrt_msa += std::sqrt(double(m) * a * s);
    }

    if (m > 0) {
        out.C = 8.0 * K * psi / eta + 3.0 * m * K * K * psi * psi / (eta * eta) +
                (4.0 * K + m * psi) / eta + 2.0 * m * K * psi + eta +
                4.0 * std::sqrt(double(m)) * K * psi * std::log(1.0 + 8.0 * std::exp(0.25));
    }
    out.regret_const = 2.0 * K + 0.5 * psi * psi * sum_sa + 2.5 * m * K * K * psi * psi;
    out.violation_const = out.C + psi * out.C * sum_sqrt_msa + psi * psi * sum_sa;
    return out;
}

LinearProgram assemble_coupled_lp(const std::vector<MdpModel>& models,
                                  const std::vector<Eigen::VectorXd>& mean_f,
                                  const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                  const Eigen::VectorXd& rhs) {
    const int K = static_cast<int>(models.size());
    if (K == 0) throw DimensionError("assemble_coupled_lp: no models");
    if (static_cast<int>(mean_f.size()) != K)
        throw DimensionError("assemble_coupled_lp: one penalty table per MDP required");
    const int m = static_cast<int>(mean_g.size());
    if (rhs.size() != m) throw DimensionError("assemble_coupled_lp: rhs length != m");

    std::vector<int> offset(K + 1, 0);
    int eq_rows = 0;
    for (int k = 0; k < K; ++k) {
        if (mean_f[k].size() != models[k].table_size())
            throw DimensionError("assemble_coupled_lp: penalty table size mismatch");
        offset[k + 1] = offset[k] + models[k].table_size();
        eq_rows += models[k].num_states;  // rows of each polytope system
    }
    const int n = offset[K];

    LinearProgram lp;
    lp.c = Eigen::VectorXd::Zero(n);
    lp.A_eq = Eigen::MatrixXd::Zero(eq_rows, n);
    lp.b_eq = Eigen::VectorXd::Zero(eq_rows);
    lp.G = Eigen::MatrixXd::Zero(m, n);
    lp.h = rhs;

    int row = 0;
    for (int k = 0; k < K; ++k) {
        lp.c.segment(offset[k], models[k].table_size()) = mean_f[k];
        PolyhedronSpec spec = build_polyhedron(models[k]);
        lp.A_eq.block(row, offset[k], spec.A.rows(), spec.A.cols()) = spec.A;
        lp.b_eq.segment(row, spec.b.size()) = spec.b;
        row += static_cast<int>(spec.A.rows());
    }
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(mean_g[i].size()) != K)
            throw DimensionError("assemble_coupled_lp: constraint table count mismatch");
        for (int k = 0; k < K; ++k) {
            if (mean_g[i][k].size() != models[k].table_size())
                throw DimensionError("assemble_coupled_lp: constraint table size mismatch");
            lp.G.block(i, offset[k], 1, models[k].table_size()) = mean_g[i][k].transpose();
        }
    }
    return lp;
}

namespace {

StationarySolution solve_coupled(const std::vector<MdpModel>& models,
                                 const std::vector<Eigen::VectorXd>& mean_f,
                                 const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                 double slack) {
    const int m = static_cast<int>(mean_g.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(m, slack);
    LinearProgram lp = assemble_coupled_lp(models, mean_f, mean_g, rhs);
    LpSolution raw = solve_lp(lp);

    StationarySolution out;
    out.status = raw.status;
    out.lp_iterations = raw.iterations;
    if (raw.status != LpStatus::optimal) return out;
    out.value = raw.value;
    out.duals = raw.duals_ineq;
    int off = 0;
    for (const auto& model : models) {
        out.theta.emplace_back(raw.x.segment(off, model.table_size()));
        off += model.table_size();
    }
    return out;
}

}  // namespace

StationarySolution best_stationary(const std::vector<MdpModel>& models,
                                   const std::vector<Eigen::VectorXd>& mean_f,
                                   const std::vector<std::vector<Eigen::VectorXd>>& mean_g) {
    return solve_coupled(models, mean_f, mean_g, 0.0);
}

StationarySolution relaxed_stationary(const std::vector<MdpModel>& models,
                                      const std::vector<Eigen::VectorXd>& mean_f,
                                      const std::vector<std::vector<Eigen::VectorXd>>& mean_g,
                                      double slack) {
    if (slack < 0.0) throw ValidationError("relaxed_stationary: slack must be nonnegative");
    return solve_coupled(models, mean_f, mean_g, slack);
}

PerturbationGapReport perturbation_gap_check(
    const std::vector<MdpModel>& models, const std::vector<Eigen::VectorXd>& mean_f,
    const std::vector<std::vector<Eigen::VectorXd>>& mean_g, double slack, double psi,
    double eta) {
    if (eta <= 0.0) throw ValidationError("perturbation_gap_check: eta must be positive");
    PerturbationGapReport rep;
    rep.slack = slack;
    rep.eta = eta;
    StationarySolution orig = best_stationary(models, mean_f, mean_g);
    StationarySolution relaxed = relaxed_stationary(models, mean_f, mean_g, slack);
    if (orig.status != LpStatus::optimal || relaxed.status != LpStatus::optimal)
        throw ValidationError("perturbation_gap_check: stationary programs must be solvable");
    rep.original = orig.value;
    rep.relaxed = relaxed.value;
    rep.gap = orig.value - relaxed.value;
    const double K = static_cast<double>(models.size());
    const double m = static_cast<double>(mean_g.size());
    rep.bound = slack * 2.0 * std::sqrt(m) * psi * K / eta;
    rep.ok = rep.gap >= -1e-6 && rep.gap <= rep.bound + 1e-6;
    if (!rep.ok)
        throw ValidationError("perturbation_gap_check: sensitivity bound violated (gap " +
                              std::to_string(rep.gap) + ", bound " + std::to_string(rep.bound) +
                              ")");
    return rep;
}

}  // namespace ocmdp
