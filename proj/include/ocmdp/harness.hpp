#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ocmdp/baseline.hpp"
#include "ocmdp/controller.hpp"
#include "ocmdp/scenario.hpp"

namespace ocmdp {

/// One CSV row: the slot's sampled states/actions, realized function values
/// (summed over MDPs), expected values under the played occupancies, queue
/// norm at decision time, largest occupancy step, and running totals.
struct RunRow {
    long t = 0;
    std::vector<int> states;
    std::vector<int> actions;
    double f_real = 0.0;          // sum_k f_t^(k)(s_k, a_k)
    Eigen::VectorXd g_real;       // per constraint, summed over MDPs
    double f_dot = 0.0;           // sum_k <f_t^(k), theta_t^(k)>
    Eigen::VectorXd g_dot;        // per constraint
    double q_norm = 0.0;          // ||Q(t)||_2 when the slot's decision was made
    double max_step = 0.0;        // max_k ||theta_t^(k) - theta_(t-1)^(k)||_2
    double cum_f_real = 0.0;      // prefix sums including this slot
    Eigen::VectorXd cum_g_real;
    double cum_f_dot = 0.0;
    Eigen::VectorXd cum_g_dot;
};

/// Full trace of one run plus its identifying scalars.  Byte-identical CSV
/// across repeats with the same (scenario, T, seed) is part of the contract.
struct RunRecord {
    std::string scenario_name;
    std::string scenario_hash;
    long T = 0;
    std::uint64_t seed = 0;
    double V = 0.0;
    double alpha = 0.0;
    int num_mdps = 0;
    int num_constraints = 0;
    bool checked = false;      // per-slot invariant checking was attached
    long checked_slots = 0;

    std::vector<RunRow> rows;
    double total_f_real = 0.0;       // F_T
    Eigen::VectorXd total_g_real;    // G_{i,T}
    double total_f_dot = 0.0;
    Eigen::VectorXd total_g_dot;
    double max_q_norm = 0.0;

    /// Header row plus one line per slot, every numeric field %.17g.
    std::string csv() const;
    /// Deterministic JSON summary (schema_version, identifiers, totals).
    std::string summary_json() const;
};

/// Runs the online controller on the scenario's function stream for T slots.
/// All randomness derives from (scenario seed, run seed); initial states are
/// state 0 everywhere.  With check = true a per-slot invariant checker rides
/// along and an InvariantViolation (naming bound and slot) aborts the run;
/// checking never alters the trajectory.  check_cfg overrides the checker's
/// tolerances (its psi is always taken from the scenario).
RunRecord run_experiment(const Scenario& scenario, long T, std::uint64_t seed,
                         bool check = false,
                         const InvariantCheckerConfig* check_cfg = nullptr);

/// Regret in both accountings plus per-constraint violations.  "Imaginary"
/// follows the expected series sum_t <f_t, theta_t>; "realized" follows the
/// sampled trajectory.  The benchmark is T times the coupled-LP value.
struct RegretReport {
    double benchmark_per_slot = 0.0;
    double imaginary = 0.0;
    double realized = 0.0;
    Eigen::VectorXd violations;           // max(G_{i,T}, 0), realized series
    Eigen::VectorXd violations_expected;  // max of the expected series totals
};

/// Throws ValidationError when the record's scenario hash does not match
/// `scenario` or the baseline did not solve to optimality.
RegretReport compute_regret(const RunRecord& record, const Scenario& scenario,
                            const StationarySolution& baseline);

/// Least-squares slope of log(max(y, 1)) against log x.  The flooring keeps
/// the fit defined when a regret value dips nonpositive.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SweepCell {
    long T = 0;
    int seeds = 0;
    double mean_imaginary_regret = 0.0;
    double mean_realized_regret = 0.0;
    Eigen::VectorXd mean_violation;   // per constraint, realized
    double mean_max_q = 0.0;          // seed mean of max_t ||Q(t)||
    double max_max_q = 0.0;           // worst seed
};

struct SweepResult {
    std::vector<SweepCell> cells;     // ascending T
    double slope = 0.0;               // log-log fit over mean imaginary regret
    TheoryConstants constants;
    std::vector<std::string> errors;  // failed jobs (partial results keep cells)
    bool complete() const { return errors.empty(); }
    std::string json() const;
};

/// Runs (T, seed-index) jobs with auto-configured V = sqrt(T), alpha = T.
/// Run seeds are the indices 1..seeds, decorrelated per run by the stream's
/// internal (scenario seed, run seed) mixing.  workers > 1 executes jobs in
/// an OpenMP pool; results are folded in (T, seed) order, so the outcome is
/// identical to the serial reference path.  Requires >= 3 horizons in
/// strictly increasing order and >= 5 seeds; cells with any failed job are
/// dropped while the remaining cells are still aggregated and returned.
SweepResult sweep_horizons(const Scenario& scenario, const std::vector<long>& horizons,
                           int seeds, int workers = 1);

/// One named check that failed, with enough context to locate it.
struct VerifyIssue {
    std::string module;
    std::string invariant;
    std::string message;
};

struct VerifyReport {
    std::vector<std::string> passed;  // names of checks that held
    std::vector<VerifyIssue> issues;
    bool pass() const { return issues.empty(); }
};

/// End-to-end verification sweep over one scenario: model validity and
/// mixing certificates, projection KKT certificates, a checked T-slot run
/// (every per-slot bound), LP optimality certificates, the Slater margin,
/// and the relaxation perturbation-gap bound.
VerifyReport verify_suite(const Scenario& scenario, long T = 1000,
                          std::uint64_t seed = 1);

/// Worker-count resolution: explicit argument wins, else the OCMDP_WORKERS
/// environment variable, else the OpenMP default; always >= 1.
int resolve_workers(int requested = 0);

}  // namespace ocmdp
