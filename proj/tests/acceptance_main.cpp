// Acceptance gate.  Each numbered criterion below is evaluated at its pinned
// tolerance and prints exactly one PASS/FAIL line; the process exits nonzero
// if any criterion fails.  Criteria 4-6 read different aspects of one shared
// horizon-x-seed sweep, which is computed once on first use.
//
// Usage: acceptance [n ...]   (no arguments = run all nine)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ocmdp/harness.hpp"
#include "ocmdp/mixing.hpp"
#include "ocmdp/projection.hpp"
#include "ocmdp/rng.hpp"
#include "oracles.hpp"

using namespace ocmdp;

namespace {

// ---- pinned tolerances ----------------------------------------------------
constexpr double kInvariantSlack = 1e-6;        // 1: every per-slot bound family
constexpr long kCheckedHorizon = 10000;       // 1: checked-run length
constexpr double kProjectionTol = 1e-6;     // 2: impl-vs-oracle distance
constexpr int kProjectionPairs = 500;       // 2
constexpr double kPureEnumTol = 1e-9;       // 3a: single-MDP optima
constexpr double kGridTol = 1e-3;           // 3b: coupled optima vs 0.01 grid
constexpr double kFarkasTol = 1e-6;         // 3c: Lagrangian lower bound
constexpr double kQueueGrowthFactor = 2.0;  // 4: normalized queue ratio cap
constexpr double kSlopeLo = 0.2;            // 5: log-log slope band
constexpr double kSlopeHi = 0.7;            // 5
constexpr double kPerSlotDecay = 0.5;       // 5, 6: 64x horizon halves per-slot
constexpr double kMixingSlack = 1e-12;      // 7: contraction-ratio slack
constexpr double kGapHalvingFactor = 1.9;   // 8: gap shrink when T doubles
// Runtime budgets (seconds) for the criteria that state one.
constexpr double kBudget1 = 120.0, kBudget2 = 60.0, kBudget4 = 600.0,
                 kBudget5 = 1800.0;

const std::vector<long> kSweepHorizons{1000, 4000, 16000, 64000};
constexpr int kSweepSeeds = 10;

struct Gate {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---- shared state ---------------------------------------------------------
Scenario& reference() {
    static Scenario scn = reference_scenario();
    return scn;
}

// One sweep serves criteria 4 (first three horizons), 5, and 6.
SweepResult& shared_sweep(double* elapsed_out) {
    static std::optional<SweepResult> cache;
    static double elapsed = 0.0;
    if (!cache) {
        const auto t0 = std::chrono::steady_clock::now();
        cache = sweep_horizons(reference(), kSweepHorizons, kSweepSeeds,
                               resolve_workers(0));
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    }
    if (elapsed_out) *elapsed_out = elapsed;
    return *cache;
}

// ---- criterion 1: per-slot invariant suite ------------------------------------
Gate criterion_invariant_suite() {
    InvariantCheckerConfig cfg;
    cfg.slack = kInvariantSlack;
    cfg.exact_slack = kInvariantSlack;
    cfg.dpp_slack = kInvariantSlack;
    cfg.dpp_samples = 20;
    RunRecord rec = run_experiment(reference(), kCheckedHorizon, 1, true, &cfg);
    const bool covered = rec.checked_slots == kCheckedHorizon - 1;
    return {covered, fmt("%ld/%ld slots clean, eta=%.3f certified",
                         rec.checked_slots, kCheckedHorizon - 1,
                         reference().certificate.eta)};
}

// ---- criterion 2: projection vs active-set oracle -------------------------
Gate criterion_projection() {
    const std::vector<std::pair<int, int>> sizes{{2, 2}, {3, 2}, {2, 3}, {4, 3},
                                                 {3, 4}, {6, 2}, {2, 6}, {4, 2},
                                                 {2, 4}, {3, 3}};
    const double displacements[3] = {0.3, 1.0, 3.0};
    double max_gap = 0.0, max_idem = 0.0, max_expand = 0.0;
    int pairs = 0;
    for (int trial = 0; pairs < kProjectionPairs; ++trial) {
        const auto [ns, na] = sizes[static_cast<std::size_t>(trial) % sizes.size()];
        MdpModel model = oracle::random_positive_model(
            ns, na, mix_seed(2000, static_cast<std::uint64_t>(trial)));
        PolyhedronSpec spec = build_polyhedron(model);
        Eigen::VectorXd prev_y, prev_p;
        for (int rep = 0; rep < 2 && pairs < kProjectionPairs; ++rep, ++pairs) {
            Eigen::VectorXd y = oracle::random_projection_input(
                model, displacements[(trial + rep) % 3],
                mix_seed(3000, static_cast<std::uint64_t>(trial), rep));
            ProjectionReport pr = project_theta(spec, y);
            Eigen::VectorXd exact = oracle::project_active_set(spec, y);
            max_gap = std::max(max_gap, (pr.point - exact).norm());
            ProjectionReport again = project_theta(spec, pr.point);
            max_idem = std::max(max_idem, (again.point - pr.point).norm());
            if (rep == 1) {
                const double num = (pr.point - prev_p).norm();
                const double den = (y - prev_y).norm();
                max_expand = std::max(max_expand, num - den);
            }
            prev_y = y;
            prev_p = pr.point;
        }
    }
    const bool ok = max_gap <= kProjectionTol && max_idem <= 1e-8 &&
                    max_expand <= 1e-9;
    return {ok, fmt("max |impl-oracle| = %.2e of %d pairs, idempotence %.1e, "
                    "expansion excess %.1e",
                    max_gap, kProjectionPairs, max_idem, max_expand)};
}

// ---- criterion 3: LP against enumeration, grid, and duality ---------------
Gate criterion_lp() {
    const std::vector<std::pair<int, int>> sizes{{2, 2}, {3, 2}, {2, 3}, {3, 3},
                                                 {4, 2}};
    double max_enum_gap = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto [ns, na] = sizes[static_cast<std::size_t>(i) % sizes.size()];
        MdpModel model = oracle::random_positive_model(
            ns, na, mix_seed(4000, static_cast<std::uint64_t>(i)));
        auto rng = make_engine(4100, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        Eigen::VectorXd f(model.table_size());
        for (int j = 0; j < f.size(); ++j) f(j) = unif(rng);
        StationarySolution sol = best_stationary({model}, {f}, {});
        if (sol.status != LpStatus::optimal)
            return {false, fmt("single-MDP LP %d failed to solve", i)};
        const double exact = oracle::pure_policy_best(model, f);
        max_enum_gap = std::max(max_enum_gap, std::abs(sol.value - exact));
    }
    if (max_enum_gap > kPureEnumTol)
        return {false, fmt("pure-policy enumeration gap %.2e > %.0e", max_enum_gap,
                           kPureEnumTol)};

    double max_grid_gap = 0.0;
    int grids = 0;
    for (std::uint64_t seed = 1; grids < 20; ++seed) {
        oracle::CoupledFixture fix = oracle::small_dual_coupled_instance(seed);
        if (!fix.ok) continue;
        ++grids;
        LinearProgram lp =
            assemble_coupled_lp(fix.models, fix.mean_f, fix.mean_g, fix.rhs);
        LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal)
            return {false, fmt("coupled LP (seed %llu) failed to solve",
                               static_cast<unsigned long long>(seed))};
        auto grid = oracle::grid_search_best(fix.models, fix.mean_f, fix.mean_g,
                                             fix.rhs, 101);
        if (!grid) return {false, "grid oracle found no feasible point"};
        max_grid_gap = std::max(max_grid_gap, std::abs(*grid - sol.value));
    }
    if (max_grid_gap > kGridTol)
        return {false, fmt("grid-oracle gap %.2e > %.0e", max_grid_gap, kGridTol)};

    // Lagrangian lower bound from the returned duals at random points of the
    // product polytope (coupling relaxed): value <= <f,x> + lambda.(<g,x>-rhs).
    double worst_margin = 1e300;
    int points = 0;
    for (std::uint64_t seed = 101; points < 100; ++seed) {
        oracle::CoupledFixture fix = oracle::small_dual_coupled_instance(seed);
        if (!fix.ok) continue;
        LinearProgram lp =
            assemble_coupled_lp(fix.models, fix.mean_f, fix.mean_g, fix.rhs);
        LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal) continue;
        std::vector<PolyhedronSpec> specs;
        for (const auto& model : fix.models) specs.push_back(build_polyhedron(model));
        for (int rep = 0; rep < 20 && points < 100; ++rep, ++points) {
            double lagrangian = -fix.rhs(0) * sol.duals_ineq(0);
            for (std::size_t k = 0; k < fix.models.size(); ++k) {
                Eigen::VectorXd y = oracle::random_projection_input(
                    fix.models[k], 1.5, mix_seed(5000, seed, rep, k));
                Eigen::VectorXd theta = project_theta(specs[k], y).point;
                lagrangian += fix.mean_f[k].dot(theta) +
                              sol.duals_ineq(0) * fix.mean_g[0][k].dot(theta);
            }
            worst_margin = std::min(worst_margin, lagrangian - sol.value);
        }
    }
    if (worst_margin < -kFarkasTol)
        return {false, fmt("duality bound violated by %.2e", -worst_margin)};
    return {true, fmt("enum gap %.1e, grid gap %.2e, duality margin >= %.1e",
                      max_enum_gap, max_grid_gap, worst_margin)};
}

// ---- criterion 4: queue growth ~ sqrt(T) ----------------------------------
Gate criterion_queue_growth() {
    double sweep_s = 0.0;
    const SweepResult& sw = shared_sweep(&sweep_s);
    if (sw.cells.size() < 3) return {false, "sweep incomplete"};
    double worst_norm = 0.0;
    for (int c = 0; c < 3; ++c)  // the criterion's grid: T in {1e3, 4e3, 1.6e4}
        worst_norm = std::max(worst_norm,
                              sw.cells[static_cast<std::size_t>(c)].mean_max_q /
                                  std::sqrt(static_cast<double>(
                                      sw.cells[static_cast<std::size_t>(c)].T)));
    const double first =
        sw.cells[0].mean_max_q / std::sqrt(static_cast<double>(sw.cells[0].T));
    const double last =
        sw.cells[2].mean_max_q / std::sqrt(static_cast<double>(sw.cells[2].T));
    const bool ok =
        last <= kQueueGrowthFactor * first && worst_norm <= sw.constants.C;
    return {ok, fmt("mean max||Q||/sqrtT: %.3f -> %.3f (ratio %.2f <= %.1f), "
                    "all <= C = %.1f",
                    first, last, last / first, kQueueGrowthFactor,
                    sw.constants.C)};
}

// ---- criterion 5: regret sublinearity -------------------------------------
Gate criterion_regret() {
    const SweepResult& sw = shared_sweep(nullptr);
    if (sw.cells.size() < kSweepHorizons.size()) return {false, "sweep incomplete"};
    const SweepCell& lo = sw.cells.front();
    const SweepCell& hi = sw.cells.back();
    for (const SweepCell& c : sw.cells) {
        if (c.mean_imaginary_regret <= 0.0)
            return {false, fmt("nonpositive mean regret %.3f at T=%ld",
                               c.mean_imaginary_regret, c.T)};
        // Loose sanity ceiling: the guarantee's own constant times sqrt(T).
        const double cap =
            sw.constants.regret_const * std::sqrt(static_cast<double>(c.T));
        if (c.mean_imaginary_regret > cap)
            return {false, fmt("mean regret %.1f above theory ceiling %.1f at "
                               "T=%ld",
                               c.mean_imaginary_regret, cap, c.T)};
    }
    const double per_slot_lo =
        lo.mean_imaginary_regret / static_cast<double>(lo.T);
    const double per_slot_hi =
        hi.mean_imaginary_regret / static_cast<double>(hi.T);
    const bool ok = sw.slope >= kSlopeLo && sw.slope <= kSlopeHi &&
                    per_slot_hi <= kPerSlotDecay * per_slot_lo;
    return {ok, fmt("slope %.3f in [%.1f, %.1f]; per-slot regret %.2e -> %.2e "
                    "(x%.3f <= %.1f)",
                    sw.slope, kSlopeLo, kSlopeHi, per_slot_lo, per_slot_hi,
                    per_slot_hi / per_slot_lo, kPerSlotDecay)};
}

// ---- criterion 6: constraint violation decay ------------------------------
Gate criterion_violation() {
    const SweepResult& sw = shared_sweep(nullptr);
    if (sw.cells.size() < kSweepHorizons.size()) return {false, "sweep incomplete"};
    const SweepCell& lo = sw.cells.front();
    const SweepCell& hi = sw.cells.back();
    const double per_slot_lo =
        lo.mean_violation.maxCoeff() / static_cast<double>(lo.T);
    const double per_slot_hi =
        hi.mean_violation.maxCoeff() / static_cast<double>(hi.T);
    if (per_slot_hi > kPerSlotDecay * per_slot_lo)
        return {false, fmt("per-slot violation grew: %.2e -> %.2e", per_slot_lo,
                           per_slot_hi)};
    for (const SweepCell& c : sw.cells) {
        const double cap =
            sw.constants.violation_const * std::sqrt(static_cast<double>(c.T));
        if (c.mean_violation.maxCoeff() > cap)
            return {false, fmt("violation %.3f > bound %.1f at T=%ld",
                               c.mean_violation.maxCoeff(), cap, c.T)};
    }
    return {true, fmt("max per-slot violation %.2e -> %.2e, always <= %.1f sqrtT",
                      per_slot_lo, per_slot_hi, sw.constants.violation_const)};
}

// ---- criterion 7: mixing contraction on generated instances ---------------
Gate criterion_mixing() {
    const std::vector<std::pair<int, int>> sizes{{2, 2}, {3, 2}, {2, 3}, {3, 3},
                                                 {4, 2}};
    const double deltas[4] = {0.1, 0.2, 0.3, 0.5};
    double worst_excess = -1e300;
    for (int i = 0; i < 20; ++i) {
        const auto [ns, na] = sizes[static_cast<std::size_t>(i) % sizes.size()];
        auto rng = make_engine(7000, static_cast<std::uint64_t>(i));
        MdpModel model = generate_unichain_mdp(ns, na, deltas[i % 4], rng);
        UnichainResult res = check_unichain(model);
        if (!res.estimate || !res.exhaustive)
            return {false, fmt("instance %d: no exhaustive mixing certificate", i)};
        const double ratio = mixing_contraction_check(
            model, *res.estimate, 1000, static_cast<std::uint64_t>(i));
        worst_excess =
            std::max(worst_excess, ratio - res.estimate->contraction_factor());
    }
    return {worst_excess <= kMixingSlack,
            fmt("20 instances x 1000 trials, worst ratio excess %.1e <= %.0e",
                worst_excess, kMixingSlack)};
}

// ---- criterion 8: perturbation gap halves with T --------------------------
Gate criterion_perturbation() {
    const long T = 1000;
    double worst_ratio = 1e300, worst_gap = 1e300;
    int instances = 0;
    for (std::uint64_t seed = 501; instances < 10; ++seed) {
        oracle::CoupledFixture fix = oracle::small_dual_coupled_instance(seed);
        if (!fix.ok) continue;
        ++instances;
        // Fold the fixture's rhs into the tables so the coupling reads <= 0:
        // subtracting rhs/2 from every entry of each MDP's coupling table
        // shifts <sum_k g_k, theta> by exactly rhs (occupancies sum to one).
        auto mean_g = fix.mean_g;
        for (auto& g : mean_g[0]) g.array() -= fix.rhs(0) / 2.0;
        StationarySolution tight = best_stationary(fix.models, fix.mean_f, mean_g);
        StationarySolution loose_T = relaxed_stationary(fix.models, fix.mean_f,
                                                        mean_g, 1.0 / T);
        StationarySolution loose_2T = relaxed_stationary(fix.models, fix.mean_f,
                                                         mean_g, 1.0 / (2 * T));
        if (tight.status != LpStatus::optimal ||
            loose_T.status != LpStatus::optimal ||
            loose_2T.status != LpStatus::optimal)
            return {false, fmt("instance %llu failed to solve",
                               static_cast<unsigned long long>(seed))};
        const double gap_T = tight.value - loose_T.value;
        const double gap_2T = tight.value - loose_2T.value;
        worst_gap = std::min(worst_gap, std::min(gap_T, gap_2T));
        if (gap_2T > 0.0)
            worst_ratio = std::min(worst_ratio, gap_T / gap_2T);
        else if (gap_T > 0.0)
            return {false, fmt("gap vanished at doubled T on instance %llu",
                               static_cast<unsigned long long>(seed))};
    }
    const bool ok = worst_gap >= 0.0 && worst_ratio >= kGapHalvingFactor;
    return {ok, fmt("10 active instances, min gap %.1e >= 0, min halving ratio "
                    "%.3f >= %.1f",
                    worst_gap, worst_ratio, kGapHalvingFactor)};
}

// ---- criterion 9: byte-identical repetition -------------------------------
Gate criterion_determinism() {
    RunRecord a = run_experiment(reference(), 1000, 1, false);
    RunRecord b = run_experiment(reference(), 1000, 1, false);
    RunRecord c = run_experiment(reference(), 1000, 2, false);
    const bool ok = a.csv() == b.csv() && a.summary_json() == b.summary_json() &&
                    a.csv() != c.csv();
    return {ok, fmt("%zu-byte csv identical across repeats, distinct across seeds",
                    a.csv().size())};
}

struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds; 0 = none stated
    Gate (*eval)();
};

const Criterion kCriteria[] = {
    {1, "per-slot invariant suite, T=1e4, slack 1e-6", kBudget1,
     criterion_invariant_suite},
    {2, "projection vs active-set oracle, 500 pairs, tol 1e-6", kBudget2,
     criterion_projection},
    {3, "LP vs enumeration 1e-9 / grid 1e-3 / duality 1e-6", 0.0, criterion_lp},
    {4, "queue growth ~ sqrtT, 3 horizons x 10 seeds", kBudget4,
     criterion_queue_growth},
    {5, "regret sublinearity, slope in [0.2, 0.7]", kBudget5, criterion_regret},
    {6, "constraint violation decay and sqrtT cap", 0.0, criterion_violation},
    {7, "mixing contraction, 20 instances x 1000 trials", 0.0, criterion_mixing},
    {8, "perturbation gap halves when T doubles", 0.0, criterion_perturbation},
    {9, "byte-identical csv across repeated runs", 0.0, criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0, ran = 0;
    for (const Criterion& crit : kCriteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), crit.id) == selected.end())
            continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Gate gate;
        try {
            gate = crit.eval();
        } catch (const std::exception& e) {
            gate = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        bool pass = gate.pass;
        std::string note = gate.detail;
        if (pass && crit.budget > 0.0 && elapsed > crit.budget) {
            pass = false;
            note += fmt(" [over %.0fs budget]", crit.budget);
        }
        std::printf("[%d/9] %-55s %s  (%6.1fs)  %s\n", crit.id, crit.name,
                    pass ? "PASS" : "FAIL", elapsed, note.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    std::printf("ACCEPTANCE: %d/%d PASS\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
