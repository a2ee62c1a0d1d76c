#include "ocmdp/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <optional>

#include "ocmdp/controller.hpp"
#include "ocmdp/mixing.hpp"
#include "ocmdp/projection.hpp"
#include "ocmdp/rng.hpp"
#include "ocmdp/simplex.hpp"
#include "ocmdp/stationary.hpp"

namespace ocmdp {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTagRun = 0x72756e00ULL;  // controller sampling stream

void append_number(std::string& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out += buf;
}

}  // namespace

std::string RunRecord::csv() const {
    std::string out;
    out.reserve(rows.size() * 64 + 256);
    out += "t";
    for (int k = 0; k < num_mdps; ++k)
        out += ",s" + std::to_string(k) + ",a" + std::to_string(k);
    out += ",f_real";
    for (int i = 0; i < num_constraints; ++i) out += ",g_real_" + std::to_string(i);
    out += ",f_dot";
    for (int i = 0; i < num_constraints; ++i) out += ",g_dot_" + std::to_string(i);
    out += ",q_norm,max_step,cum_f_real";
    for (int i = 0; i < num_constraints; ++i)
        out += ",cum_g_real_" + std::to_string(i);
    out += ",cum_f_dot";
    for (int i = 0; i < num_constraints; ++i) out += ",cum_g_dot_" + std::to_string(i);
    out += "\n";
    for (const RunRow& row : rows) {
        out += std::to_string(row.t);
        for (int k = 0; k < num_mdps; ++k) {
            out += "," + std::to_string(row.states[static_cast<std::size_t>(k)]);
            out += "," + std::to_string(row.actions[static_cast<std::size_t>(k)]);
        }
        auto field = [&](double x) {
            out += ',';
            append_number(out, x);
        };
        field(row.f_real);
        for (int i = 0; i < num_constraints; ++i) field(row.g_real(i));
        field(row.f_dot);
        for (int i = 0; i < num_constraints; ++i) field(row.g_dot(i));
        field(row.q_norm);
        field(row.max_step);
        field(row.cum_f_real);
        for (int i = 0; i < num_constraints; ++i) field(row.cum_g_real(i));
        field(row.cum_f_dot);
        for (int i = 0; i < num_constraints; ++i) field(row.cum_g_dot(i));
        out += "\n";
    }
    return out;
}

std::string RunRecord::summary_json() const {
    json j;
    j["schema_version"] = 1;
    j["scenario_name"] = scenario_name;
    j["scenario_hash"] = scenario_hash;
    j["T"] = T;
    j["seed"] = seed;
    j["V"] = V;
    j["alpha"] = alpha;
    j["num_mdps"] = num_mdps;
    j["num_constraints"] = num_constraints;
    j["checked"] = checked;
    j["checked_slots"] = checked_slots;
    j["total_f_real"] = total_f_real;
    j["total_f_dot"] = total_f_dot;
    json gr = json::array(), gd = json::array();
    for (int i = 0; i < num_constraints; ++i) {
        gr.push_back(total_g_real(i));
        gd.push_back(total_g_dot(i));
    }
    j["total_g_real"] = gr;
    j["total_g_dot"] = gd;
    j["max_q_norm"] = max_q_norm;
    return j.dump(2) + "\n";
}

RunRecord run_experiment(const Scenario& scenario, long T, std::uint64_t seed,
                         bool check, const InvariantCheckerConfig* check_cfg) {
    scenario.validate();
    if (T < 1) throw ValidationError("run_experiment: T must be >= 1");
    const ScenarioConfig& cfg = scenario.config;
    const int K = cfg.num_mdps;
    const int m = cfg.num_constraints;

    ControllerParams params = ControllerParams::auto_config(T);
    // The scenario's validate() already certified every model unichain.
    Controller ctl(scenario.models, m, cfg.psi, params, false);
    std::optional<InvariantChecker> checker;
    if (check) {
        InvariantCheckerConfig cc = check_cfg ? *check_cfg : InvariantCheckerConfig{};
        cc.psi = cfg.psi;
        checker.emplace(scenario.models, m, params, cc);
        ctl.attach_checker(&*checker);
    }

    FunctionStream stream(scenario, seed, T);
    auto rng = make_engine(cfg.seed, seed, kTagRun);

    RunRecord rec;
    rec.scenario_name = cfg.name;
    rec.scenario_hash = scenario.hash();
    rec.T = T;
    rec.seed = seed;
    rec.V = params.V;
    rec.alpha = params.alpha;
    rec.num_mdps = K;
    rec.num_constraints = m;
    rec.checked = check;
    rec.total_g_real = Eigen::VectorXd::Zero(m);
    rec.total_g_dot = Eigen::VectorXd::Zero(m);
    rec.rows.reserve(static_cast<std::size_t>(T));

    std::vector<int> states(static_cast<std::size_t>(K), 0);
    for (long t = 0; t < T; ++t) {
        ctl.begin_slot(states, rng);
        SlotRecord slot = ctl.end_slot(stream.at(t));

        RunRow row;
        row.t = t;
        row.states = slot.states;
        row.actions = slot.actions;
        for (int k = 0; k < K; ++k) {
            row.f_real += slot.f_real[static_cast<std::size_t>(k)];
            row.f_dot += slot.f_dot[static_cast<std::size_t>(k)];
        }
        row.g_real = slot.g_real.rowwise().sum();
        row.g_dot = slot.g_dot.rowwise().sum();
        row.q_norm = slot.q_norm;
        row.max_step = 0.0;
        for (double s : slot.step_norms) row.max_step = std::max(row.max_step, s);

        rec.total_f_real += row.f_real;
        rec.total_f_dot += row.f_dot;
        rec.total_g_real += row.g_real;
        rec.total_g_dot += row.g_dot;
        row.cum_f_real = rec.total_f_real;
        row.cum_f_dot = rec.total_f_dot;
        row.cum_g_real = rec.total_g_real;
        row.cum_g_dot = rec.total_g_dot;
        rec.max_q_norm = std::max(rec.max_q_norm, row.q_norm);
        rec.rows.push_back(std::move(row));

        for (int k = 0; k < K; ++k)
            states[static_cast<std::size_t>(k)] = sample_next_state(
                scenario.models[static_cast<std::size_t>(k)],
                slot.states[static_cast<std::size_t>(k)],
                slot.actions[static_cast<std::size_t>(k)], rng);
    }
    rec.checked_slots = check ? checker->slots_checked() : 0;
    return rec;
}

RegretReport compute_regret(const RunRecord& record, const Scenario& scenario,
                            const StationarySolution& baseline) {
    if (record.scenario_hash != scenario.hash())
        throw ValidationError("compute_regret: record belongs to a different scenario "
                              "(hash mismatch)");
    if (baseline.status != LpStatus::optimal)
        throw ValidationError("compute_regret: baseline LP is not optimal");
    RegretReport rep;
    rep.benchmark_per_slot = baseline.value;
    const double bench = static_cast<double>(record.T) * baseline.value;
    rep.imaginary = record.total_f_dot - bench;
    rep.realized = record.total_f_real - bench;
    rep.violations = record.total_g_real.cwiseMax(0.0);
    rep.violations_expected = record.total_g_dot.cwiseMax(0.0);
    return rep;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DimensionError("fit_loglog_slope: need >= 2 matching points");
    const int n = static_cast<int>(x.size());
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(x.size()), ly(y.size());
    for (int j = 0; j < n; ++j) {
        if (!(x[static_cast<std::size_t>(j)] > 0.0))
            throw ValidationError("fit_loglog_slope: x values must be positive");
        lx[static_cast<std::size_t>(j)] = std::log(x[static_cast<std::size_t>(j)]);
        ly[static_cast<std::size_t>(j)] =
            std::log(std::max(y[static_cast<std::size_t>(j)], 1.0));
        mx += lx[static_cast<std::size_t>(j)];
        my += ly[static_cast<std::size_t>(j)];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int j = 0; j < n; ++j) {
        const double dx = lx[static_cast<std::size_t>(j)] - mx;
        sxx += dx * dx;
        sxy += dx * (ly[static_cast<std::size_t>(j)] - my);
    }
    if (sxx <= 0.0) throw ValidationError("fit_loglog_slope: degenerate x values");
    return sxy / sxx;
}

std::string SweepResult::json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["slope"] = slope;
    j["complete"] = complete();
    j["errors"] = errors;
    j["constants"] = {{"C", constants.C},
                      {"regret", constants.regret_const},
                      {"violation", constants.violation_const}};
    nlohmann::json cells_json = nlohmann::json::array();
    for (const SweepCell& c : cells) {
        nlohmann::json jc;
        jc["T"] = c.T;
        jc["seeds"] = c.seeds;
        jc["mean_imaginary_regret"] = c.mean_imaginary_regret;
        jc["mean_realized_regret"] = c.mean_realized_regret;
        nlohmann::json v = nlohmann::json::array();
        for (int i = 0; i < c.mean_violation.size(); ++i)
            v.push_back(c.mean_violation(i));
        jc["mean_violation"] = v;
        jc["mean_max_q"] = c.mean_max_q;
        jc["max_max_q"] = c.max_max_q;
        cells_json.push_back(jc);
    }
    j["cells"] = cells_json;
    return j.dump(2) + "\n";
}

SweepResult sweep_horizons(const Scenario& scenario, const std::vector<long>& horizons,
                           int seeds, int workers) {
    scenario.validate();
    if (horizons.size() < 3)
        throw ValidationError("sweep needs at least three horizons");
    for (std::size_t j = 1; j < horizons.size(); ++j)
        if (horizons[j] <= horizons[j - 1])
            throw ValidationError("sweep horizons must be strictly increasing");
    if (seeds < 5) throw ValidationError("sweep needs at least five seeds per horizon");
    if (workers < 1) throw ValidationError("sweep needs workers >= 1");

    StationarySolution baseline =
        best_stationary(scenario.models, scenario.mean_f, scenario.mean_g);
    if (baseline.status != LpStatus::optimal)
        throw ValidationError("sweep: baseline LP failed to solve");

    struct Job {
        long T;
        std::uint64_t seed;
        bool ok = false;
        double imaginary = 0.0, realized = 0.0, max_q = 0.0;
        Eigen::VectorXd violations;
        std::string error;
    };
    std::vector<Job> jobs;
    for (long T : horizons)
        for (int r = 1; r <= seeds; ++r)
            jobs.push_back({T, static_cast<std::uint64_t>(r), false, 0, 0, 0, {}, {}});

    auto run_job = [&](Job& job) {
        try {
            RunRecord rec = run_experiment(scenario, job.T, job.seed, false);
            RegretReport rep = compute_regret(rec, scenario, baseline);
            job.imaginary = rep.imaginary;
            job.realized = rep.realized;
            job.violations = rep.violations;
            job.max_q = rec.max_q_norm;
            job.ok = true;
        } catch (const std::exception& e) {
            job.error = "T=" + std::to_string(job.T) +
                        " seed=" + std::to_string(job.seed) + ": " + e.what();
        }
    };

    if (workers == 1) {
        for (Job& job : jobs) run_job(job);  // serial reference path
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(jobs[j]);
    }

    // Deterministic fold in (T, seed) order -- jobs are already laid out that
    // way, so aggregation is independent of execution interleaving.
    SweepResult result;
    const int m = scenario.config.num_constraints;
    result.constants = theory_constants(
        m, scenario.config.num_mdps, scenario.config.psi,
        m == 0 ? 1.0 : scenario.certificate.eta, scenario.config.sizes);
    std::size_t idx = 0;
    for (long T : horizons) {
        SweepCell cell;
        cell.T = T;
        cell.seeds = seeds;
        cell.mean_violation = Eigen::VectorXd::Zero(m);
        bool all_ok = true;
        for (int r = 0; r < seeds; ++r, ++idx) {
            const Job& job = jobs[idx];
            if (!job.ok) {
                all_ok = false;
                result.errors.push_back(job.error);
                continue;
            }
            cell.mean_imaginary_regret += job.imaginary;
            cell.mean_realized_regret += job.realized;
            cell.mean_violation += job.violations;
            cell.mean_max_q += job.max_q;
            cell.max_max_q = std::max(cell.max_max_q, job.max_q);
        }
        if (!all_ok) continue;  // partial result: drop the cell, keep the rest
        cell.mean_imaginary_regret /= seeds;
        cell.mean_realized_regret /= seeds;
        cell.mean_violation /= seeds;
        cell.mean_max_q /= seeds;
        result.cells.push_back(std::move(cell));
    }

    if (result.cells.size() >= 2) {
        std::vector<double> xs, ys;
        for (const SweepCell& c : result.cells) {
            xs.push_back(static_cast<double>(c.T));
            ys.push_back(c.mean_imaginary_regret);
        }
        result.slope = fit_loglog_slope(xs, ys);
    }
    return result;
}

VerifyReport verify_suite(const Scenario& scenario, long T, std::uint64_t seed) {
    VerifyReport report;
    auto record = [&](const char* module, const char* invariant, auto&& body) {
        try {
            body();
            report.passed.push_back(std::string(module) + "/" + invariant);
        } catch (const std::exception& e) {
            report.issues.push_back({module, invariant, e.what()});
        }
    };

    record("scenario-env", "scenario-valid", [&] { scenario.validate(); });

    record("mdp-core", "model-validation", [&] {
        for (const auto& model : scenario.models) model.validate();
    });

    record("mixing", "mixing-certificate", [&] {
        for (const auto& model : scenario.models) {
            UnichainResult res = check_unichain(model);
            if (!res.estimate)
                throw ValidationError("no mixing certificate found for a model");
            const double ratio =
                mixing_contraction_check(model, *res.estimate, 200, seed);
            if (res.exhaustive && ratio > res.estimate->contraction_factor() + 1e-12)
                throw ValidationError(
                    "observed contraction " + std::to_string(ratio) + " exceeds e^(-1/tau) = " +
                    std::to_string(res.estimate->contraction_factor()));
        }
    });

    record("polytope-projection", "projection-kkt", [&] {
        auto rng = make_engine(seed, 0x70726f6aULL);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        for (const auto& model : scenario.models) {
            PolyhedronSpec spec = build_polyhedron(model);
            for (int rep = 0; rep < 20; ++rep) {
                Eigen::VectorXd y(model.table_size());
                for (int j = 0; j < y.size(); ++j) y(j) = unif(rng);
                ProjectionReport pr = project_theta(spec, y);
                if (pr.kkt_residual > 1e-9)
                    throw ValidationError("projection KKT residual " +
                                          std::to_string(pr.kkt_residual));
                ProjectionReport again = project_theta(spec, pr.point);
                if ((again.point - pr.point).norm() > 1e-9)
                    throw ValidationError("projection is not idempotent");
            }
        }
    });

    record("ocmdp-controller", "per-slot-bounds", [&] {
        RunRecord rec = run_experiment(scenario, T, seed, true);
        if (rec.checked_slots != T - 1)
            throw ValidationError("checker covered " + std::to_string(rec.checked_slots) +
                                  " of " + std::to_string(T - 1) + " slots");
    });

    record("baseline-lp", "lp-certificates", [&] {
        LinearProgram lp = assemble_coupled_lp(scenario.models, scenario.mean_f,
                                               scenario.mean_g,
                                               Eigen::VectorXd::Zero(
                                                   scenario.config.num_constraints));
        LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal)
            throw ValidationError("coupled baseline LP did not reach optimality");
        if (sol.primal_residual(lp) > 1e-8)
            throw ValidationError("LP primal residual " +
                                  std::to_string(sol.primal_residual(lp)));
        if (sol.duals_ineq.size() > 0 && sol.duals_ineq.minCoeff() < -1e-9)
            throw ValidationError("negative inequality dual");
        if (sol.complementary_slackness(lp) > 1e-6)
            throw ValidationError("complementary slackness residual " +
                                  std::to_string(sol.complementary_slackness(lp)));
    });

    if (scenario.config.num_constraints > 0) {
        record("scenario-env", "slater-margin", [&] {
            if (!scenario.certificate.valid())
                throw ValidationError("certificate margin eta <= 0");
            for (std::size_t i = 0; i < scenario.mean_g.size(); ++i) {
                double total = 0.0;
                for (std::size_t k = 0; k < scenario.models.size(); ++k)
                    total += scenario.mean_g[i][k].dot(scenario.certificate.theta_tilde[k]);
                if (total > -scenario.certificate.eta + 1e-6)
                    throw ValidationError("witness violates its certified margin");
            }
        });

        record("baseline-lp", "perturbation-gap", [&] {
            PerturbationGapReport gap = perturbation_gap_check(
                scenario.models, scenario.mean_f, scenario.mean_g, 0.01,
                scenario.config.psi, scenario.certificate.eta);
            if (!gap.ok)
                throw ValidationError("relaxation gap " + std::to_string(gap.gap) +
                                      " outside [0, " + std::to_string(gap.bound) + "]");
        });
    }

    return report;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OCMDP_WORKERS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed > 0)
            return static_cast<int>(std::min(parsed, 256L));
    }
    return std::max(1, omp_get_max_threads());
}

}  // namespace ocmdp
