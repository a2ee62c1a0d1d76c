// Command-line harness around the library: generate scenarios, run the
// online controller, sweep horizons, solve the stationary benchmark, and run
// the end-to-end verification suite.  Exit codes: 0 success, 1 usage or
// validation failure, 2 invariant violation during a checked run, 3 sweep
// finished with failed jobs.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "ocmdp/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ocmdp::ScenarioConfig config_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ocmdp::ValidationError("cannot open config file: " + path);
    json j = json::parse(in);
    ocmdp::ScenarioConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.num_mdps = j.value("num_mdps", cfg.num_mdps);
    cfg.num_constraints = j.value("num_constraints", cfg.num_constraints);
    cfg.psi = j.value("psi", cfg.psi);
    if (j.contains("sizes"))
        for (const auto& pair : j.at("sizes"))
            cfg.sizes.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    if (j.contains("penalty_process"))
        cfg.penalty_process = ocmdp::penalty_process_from_string(
            j.at("penalty_process").get<std::string>());
    if (j.contains("constraint_noise"))
        cfg.constraint_noise = ocmdp::constraint_noise_mode_from_string(
            j.at("constraint_noise").get<std::string>());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sigma_f = j.value("sigma_f", cfg.sigma_f);
    cfg.sigma_g = j.value("sigma_g", cfg.sigma_g);
    cfg.period = j.value("period", cfg.period);
    cfg.phase_noise = j.value("phase_noise", cfg.phase_noise);
    cfg.swap_prob = j.value("swap_prob", cfg.swap_prob);
    cfg.delta = j.value("delta", cfg.delta);
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ocmdp::ValidationError("cannot open output file: " + path);
    out << content;
    if (!out) throw ocmdp::ValidationError("write failed: " + path);
}

json duals_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

int cmd_gen(const std::string& out_dir, const std::string& config_path,
            const std::string& builtin, std::uint64_t seed, bool seed_given,
            int servers, double price_amplitude, double arrival_rate) {
    ocmdp::Scenario scn;
    if (!config_path.empty()) {
        ocmdp::ScenarioConfig cfg = config_from_json(config_path);
        if (seed_given) cfg.seed = seed;
        scn = ocmdp::build_scenario(cfg);
    } else if (builtin == "reference") {
        scn = ocmdp::reference_scenario(seed_given ? seed : 2026);
    } else if (builtin == "datacenter") {
        scn = ocmdp::datacenter_scenario(servers, price_amplitude, arrival_rate,
                                         seed_given ? seed : 2026);
    } else {
        throw ocmdp::ValidationError("unknown builtin scenario: " + builtin);
    }
    ocmdp::save_scenario(out_dir, scn);
    std::printf("scenario  %s\n", scn.config.name.c_str());
    std::printf("hash      %s\n", scn.hash().c_str());
    std::printf("mdps      %d   constraints %d   psi %g\n", scn.config.num_mdps,
                scn.config.num_constraints, scn.config.psi);
    if (scn.config.num_constraints > 0)
        std::printf("slater    eta = %.6f\n", scn.certificate.eta);
    std::printf("saved to  %s\n", out_dir.c_str());
    return 0;
}

int cmd_run(const std::string& scenario_dir, long T, std::uint64_t seed, bool check,
            const std::string& out_dir) {
    ocmdp::Scenario scn = ocmdp::load_scenario(scenario_dir);
    ocmdp::RunRecord rec;
    try {
        rec = ocmdp::run_experiment(scn, T, seed, check);
    } catch (const ocmdp::InvariantViolation& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 2;
    }
    fs::create_directories(out_dir);
    const std::string stem =
        "run_T" + std::to_string(T) + "_seed" + std::to_string(seed);
    write_file(out_dir + "/" + stem + ".csv", rec.csv());
    write_file(out_dir + "/" + stem + ".json", rec.summary_json());

    ocmdp::StationarySolution base =
        ocmdp::best_stationary(scn.models, scn.mean_f, scn.mean_g);
    ocmdp::RegretReport rep = ocmdp::compute_regret(rec, scn, base);
    std::printf("T=%ld seed=%llu  F_T=%.4f  (%.6f/slot, benchmark %.6f/slot)\n", T,
                static_cast<unsigned long long>(seed), rec.total_f_real,
                rec.total_f_real / static_cast<double>(T), rep.benchmark_per_slot);
    std::printf("regret  imaginary=%.4f  realized=%.4f  max||Q||=%.4f\n",
                rep.imaginary, rep.realized, rec.max_q_norm);
    for (int i = 0; i < rep.violations.size(); ++i)
        std::printf("constraint %d  G_T=%.4f  violation=%.4f\n", i,
                    rec.total_g_real(i), rep.violations(i));
    if (check) std::printf("checked %ld/%ld slots, all bounds held\n",
                           rec.checked_slots, T - 1);
    std::printf("wrote %s/%s.{csv,json}\n", out_dir.c_str(), stem.c_str());
    return 0;
}

int cmd_sweep(const std::string& scenario_dir, const std::vector<long>& horizons,
              int seeds, int workers, const std::string& out_file) {
    ocmdp::Scenario scn = ocmdp::load_scenario(scenario_dir);
    const int pool = ocmdp::resolve_workers(workers);
    ocmdp::SweepResult res = ocmdp::sweep_horizons(scn, horizons, seeds, pool);
    write_file(out_file, res.json());
    std::printf("%-10s %16s %16s %12s %12s\n", "T", "mean imag regret",
                "mean real regret", "mean max||Q||", "||Q||/sqrtT");
    for (const ocmdp::SweepCell& c : res.cells)
        std::printf("%-10ld %16.4f %16.4f %12.4f %12.4f\n", c.T,
                    c.mean_imaginary_regret, c.mean_realized_regret, c.mean_max_q,
                    c.mean_max_q / std::sqrt(static_cast<double>(c.T)));
    std::printf("log-log slope of mean imaginary regret: %.4f\n", res.slope);
    std::printf("queue-scale constant C = %.4f  (workers: %d)\n", res.constants.C,
                pool);
    std::printf("wrote %s\n", out_file.c_str());
    if (!res.complete()) {
        for (const std::string& err : res.errors)
            std::fprintf(stderr, "failed job: %s\n", err.c_str());
        return 3;
    }
    return 0;
}

int cmd_baseline(const std::string& scenario_dir, double slack, bool slack_given,
                 const std::string& out_file) {
    ocmdp::Scenario scn = ocmdp::load_scenario(scenario_dir);
    ocmdp::StationarySolution base =
        ocmdp::best_stationary(scn.models, scn.mean_f, scn.mean_g);
    if (base.status != ocmdp::LpStatus::optimal)
        throw ocmdp::ValidationError("stationary benchmark LP did not solve");
    json j;
    j["schema_version"] = 1;
    j["scenario_hash"] = scn.hash();
    j["value_per_slot"] = base.value;
    j["duals"] = duals_json(base.duals);
    j["lp_iterations"] = base.lp_iterations;
    std::printf("benchmark value  %.6f per slot\n", base.value);
    for (int i = 0; i < base.duals.size(); ++i)
        std::printf("constraint %d dual  %.6f%s\n", i, base.duals(i),
                    base.duals(i) > 1e-9 ? "  (binding)" : "");
    if (slack_given) {
        ocmdp::PerturbationGapReport gap = ocmdp::perturbation_gap_check(
            scn.models, scn.mean_f, scn.mean_g, slack,
            scn.config.psi, scn.certificate.eta);
        j["relaxed"] = {{"slack", gap.slack},
                        {"value_per_slot", gap.relaxed},
                        {"gap", gap.gap},
                        {"bound", gap.bound},
                        {"ok", gap.ok}};
        std::printf("relaxed by %g: value %.6f, gap %.6g (bound %.6g) %s\n", slack,
                    gap.relaxed, gap.gap, gap.bound, gap.ok ? "ok" : "VIOLATED");
        if (!gap.ok) {
            write_file(out_file, j.dump(2) + "\n");
            return 1;
        }
    }
    write_file(out_file, j.dump(2) + "\n");
    std::printf("wrote %s\n", out_file.c_str());
    return 0;
}

int cmd_check(const std::string& scenario_dir, long T, std::uint64_t seed) {
    ocmdp::Scenario scn = ocmdp::load_scenario(scenario_dir);
    ocmdp::VerifyReport rep = ocmdp::verify_suite(scn, T, seed);
    for (const std::string& name : rep.passed)
        std::printf("[ ok ] %s\n", name.c_str());
    for (const ocmdp::VerifyIssue& iss : rep.issues)
        std::printf("[FAIL] %s/%s: %s\n", iss.module.c_str(), iss.invariant.c_str(),
                    iss.message.c_str());
    std::printf("%zu passed, %zu failed\n", rep.passed.size(), rep.issues.size());
    return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online control of weakly coupled constrained MDPs"};
    app.require_subcommand(1);

    // gen ------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a scenario and save it");
    std::string gen_out, gen_config, gen_builtin;
    std::uint64_t gen_seed = 2026;
    int gen_servers = 3;
    double gen_price = 0.8, gen_arrivals = 1.2;
    gen->add_option("--out", gen_out, "output directory")->required();
    auto* opt_config =
        gen->add_option("--config", gen_config, "scenario config JSON file");
    auto* opt_builtin =
        gen->add_option("--builtin", gen_builtin,
                        "built-in scenario: reference | datacenter");
    opt_config->excludes(opt_builtin);
    auto* opt_seed = gen->add_option("--seed", gen_seed, "scenario seed");
    gen->add_option("--servers", gen_servers, "datacenter: fleet size");
    gen->add_option("--price-amplitude", gen_price,
                    "datacenter: price wave amplitude");
    gen->add_option("--arrival-rate", gen_arrivals,
                    "datacenter: mean arrival load");

    // run ------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run the online controller");
    std::string run_scenario, run_out = ".";
    long run_T = 1000;
    std::uint64_t run_seed = 1;
    bool run_check = false;
    run->add_option("--scenario", run_scenario, "scenario directory")->required();
    run->add_option("--T", run_T, "horizon (slots)")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_seed, "run seed");
    run->add_flag("--check", run_check,
                  "verify every per-slot bound while running");
    run->add_option("--out", run_out, "output directory for csv/json");

    // sweep ----------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "horizon x seed grid");
    std::string sweep_scenario, sweep_out = "sweep.json";
    std::vector<long> sweep_T;
    int sweep_seeds = 10, sweep_workers = 0;
    sweep->add_option("--scenario", sweep_scenario, "scenario directory")
        ->required();
    sweep->add_option("--T", sweep_T, "horizons, e.g. --T 1000,4000,16000")
        ->required()
        ->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "runs per horizon");
    sweep->add_option("--workers", sweep_workers,
                      "parallel jobs (0 = OCMDP_WORKERS or OpenMP default)");
    sweep->add_option("--out", sweep_out, "result JSON path");

    // baseline -------------------------------------------------------------
    auto* baseline =
        app.add_subcommand("baseline", "solve the stationary benchmark LP");
    std::string base_scenario, base_out = "baseline.json";
    double base_slack = 0.0;
    baseline->add_option("--scenario", base_scenario, "scenario directory")
        ->required();
    auto* opt_slack = baseline->add_option(
        "--slack", base_slack, "also solve the slack-relaxed program");
    baseline->add_option("--out", base_out, "result JSON path");

    // check ----------------------------------------------------------------
    auto* check = app.add_subcommand("check", "end-to-end verification suite");
    std::string check_scenario;
    long check_T = 1000;
    std::uint64_t check_seed = 1;
    check->add_option("--scenario", check_scenario, "scenario directory")
        ->required();
    check->add_option("--T", check_T, "checked-run horizon")
        ->check(CLI::PositiveNumber);
    check->add_option("--seed", check_seed, "checked-run seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (gen_config.empty() && gen_builtin.empty())
                throw ocmdp::ValidationError("gen needs --config or --builtin");
            return cmd_gen(gen_out, gen_config, gen_builtin, gen_seed,
                           opt_seed->count() > 0, gen_servers, gen_price,
                           gen_arrivals);
        }
        if (run->parsed())
            return cmd_run(run_scenario, run_T, run_seed, run_check, run_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_scenario, sweep_T, sweep_seeds, sweep_workers,
                             sweep_out);
        if (baseline->parsed())
            return cmd_baseline(base_scenario, base_slack, opt_slack->count() > 0,
                                base_out);
        if (check->parsed()) return cmd_check(check_scenario, check_T, check_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
