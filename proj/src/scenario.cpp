#include "ocmdp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "ocmdp/projection.hpp"
#include "ocmdp/rng.hpp"
#include "ocmdp/simplex.hpp"
#include "ocmdp/stationary.hpp"

namespace ocmdp {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTagSlot = 0x736c6f74ULL;    // per-slot noise stream
constexpr std::uint64_t kTagJitter = 0x6a697474ULL;  // wave jitter (scenario-level)
constexpr std::uint64_t kTagRegime = 0x72656769ULL;  // regime walk (run-level)
constexpr std::uint64_t kTagBuild = 0x6275696cULL;   // instance generation
constexpr std::uint64_t kTagPath = 0x70617468ULL;    // run path derivation

constexpr double kTwoPi = 6.283185307179586476925286766559;

double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double gauss_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

/// Slot-in-period wave jitter; part of the scenario's fixed adversarial
/// choice, so it derives from the scenario seed only.
std::vector<double> wave_jitter(std::uint64_t scenario_seed, long period,
                                double amplitude) {
    auto rng = make_engine(scenario_seed, kTagJitter);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> jitter(static_cast<std::size_t>(period));
    for (auto& j : jitter) j = amplitude * unif(rng);
    return jitter;
}

double wave_value(double center, double amp, double phase, long t, long period,
                  const std::vector<double>& jitter, double psi) {
    // Reduce the slot index first so slots one period apart produce the
    // identical argument (sin is not bitwise 2-pi-periodic in floating point).
    const long u = t % period;
    const double arg =
        kTwoPi * (static_cast<double>(u) + jitter[static_cast<std::size_t>(u)]) /
            static_cast<double>(period) +
        phase;
    return std::clamp(center + amp * std::sin(arg), -psi, psi);
}

/// Certified time-averaged penalty means for each process family.  The wave
/// is deterministic, so its period average is computed exactly by summation;
/// the two-point regime process averages its two clipped levels; iid noise
/// uses the closed-form post-clip expectation.
std::vector<Eigen::VectorXd> certified_penalty_means(
    const ScenarioConfig& cfg, const std::vector<Eigen::VectorXd>& center_f,
    const std::vector<Eigen::VectorXd>& amp_f,
    const std::vector<Eigen::VectorXd>& phase_f) {
    std::vector<Eigen::VectorXd> means;
    const std::vector<double> jitter =
        cfg.penalty_process == PenaltyProcess::sinusoidal_adversarial
            ? wave_jitter(cfg.seed, cfg.period, cfg.phase_noise)
            : std::vector<double>{};
    for (std::size_t k = 0; k < center_f.size(); ++k) {
        Eigen::VectorXd m(center_f[k].size());
        for (int j = 0; j < m.size(); ++j) {
            switch (cfg.penalty_process) {
                case PenaltyProcess::iid:
                    m(j) = clipped_gaussian_mean(center_f[k](j), cfg.sigma_f, cfg.psi);
                    break;
                case PenaltyProcess::sinusoidal_adversarial: {
                    double total = 0.0;
                    for (long u = 0; u < cfg.period; ++u)
                        total += wave_value(center_f[k](j), amp_f[k](j), phase_f[k](j),
                                            u, cfg.period, jitter, cfg.psi);
                    m(j) = total / static_cast<double>(cfg.period);
                    break;
                }
                case PenaltyProcess::markov_modulated: {
                    const double hi =
                        std::clamp(center_f[k](j) + amp_f[k](j), -cfg.psi, cfg.psi);
                    const double lo =
                        std::clamp(center_f[k](j) - amp_f[k](j), -cfg.psi, cfg.psi);
                    m(j) = 0.5 * (hi + lo);
                    break;
                }
            }
        }
        means.push_back(m);
    }
    return means;
}

std::vector<std::vector<Eigen::VectorXd>> certified_constraint_means(
    const ScenarioConfig& cfg,
    const std::vector<std::vector<Eigen::VectorXd>>& center_g) {
    std::vector<std::vector<Eigen::VectorXd>> means(center_g.size());
    for (std::size_t i = 0; i < center_g.size(); ++i)
        for (const auto& center : center_g[i]) {
            Eigen::VectorXd m(center.size());
            for (int j = 0; j < m.size(); ++j)
                m(j) = clipped_gaussian_mean(center(j), cfg.sigma_g, cfg.psi);
            means[i].push_back(m);
        }
    return means;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int j = 0; j < v.size(); ++j) a.push_back(v(j));
    return a;
}

Eigen::VectorXd vec_from_json(const json& a, const char* what) {
    if (!a.is_array()) throw ValidationError(std::string(what) + ": expected array");
    Eigen::VectorXd v(static_cast<int>(a.size()));
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (!a[j].is_number())
            throw ValidationError(std::string(what) + ": expected numeric entries");
        v(static_cast<int>(j)) = a[j].get<double>();
    }
    return v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + path.string());
    out << text;
    if (!out.good()) throw ValidationError("write failure: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": JSON parse failure: " + e.what());
    }
}

void hash_append(std::string& buf, double x) {
    char tmp[40];
    std::snprintf(tmp, sizeof(tmp), "%.17g;", x);
    buf += tmp;
}

void hash_append(std::string& buf, const Eigen::VectorXd& v) {
    for (int j = 0; j < v.size(); ++j) hash_append(buf, v(j));
}

}  // namespace

std::string to_string(PenaltyProcess p) {
    switch (p) {
        case PenaltyProcess::iid: return "iid";
        case PenaltyProcess::sinusoidal_adversarial: return "sinusoidal-adversarial";
        case PenaltyProcess::markov_modulated: return "markov-modulated";
    }
    throw ValidationError("unknown penalty process value");
}

PenaltyProcess penalty_process_from_string(const std::string& s) {
    if (s == "iid") return PenaltyProcess::iid;
    if (s == "sinusoidal-adversarial") return PenaltyProcess::sinusoidal_adversarial;
    if (s == "markov-modulated") return PenaltyProcess::markov_modulated;
    throw ValidationError("unknown penalty process: " + s);
}

std::string to_string(ConstraintNoiseMode m) {
    switch (m) {
        case ConstraintNoiseMode::per_entry: return "per-entry";
        case ConstraintNoiseMode::shared: return "shared";
    }
    throw ValidationError("unknown constraint noise mode value");
}

ConstraintNoiseMode constraint_noise_mode_from_string(const std::string& s) {
    if (s == "per-entry") return ConstraintNoiseMode::per_entry;
    if (s == "shared") return ConstraintNoiseMode::shared;
    throw ValidationError("unknown constraint noise mode: " + s);
}

void ScenarioConfig::validate() const {
    if (num_mdps < 1) throw ValidationError("scenario needs at least one MDP");
    if (num_constraints < 0) throw ValidationError("negative constraint count");
    if (!(psi > 0.0)) throw ValidationError("psi must be positive");
    if (sizes.size() != static_cast<std::size_t>(num_mdps))
        throw DimensionError("size list does not match the MDP count");
    for (const auto& [ns, na] : sizes)
        if (ns < 1 || na < 1) throw ValidationError("MDP sizes must be >= 1");
    if (sigma_f < 0.0 || sigma_g < 0.0) throw ValidationError("negative noise std");
    if (period < 1) throw ValidationError("wave period must be >= 1");
    if (phase_noise < 0.0) throw ValidationError("negative phase noise");
    if (swap_prob < 0.0 || swap_prob > 1.0)
        throw ValidationError("swap probability outside [0, 1]");
    if (!(delta > 0.0) || delta > 1.0)
        throw ValidationError("mixture weight delta outside (0, 1]");
}

MdpModel generate_unichain_mdp(int num_states, int num_actions, double delta,
                               std::mt19937_64& rng) {
    if (num_states < 1 || num_actions < 1)
        throw DimensionError("generate_unichain_mdp: sizes must be >= 1");
    if (!(delta > 0.0) || delta > 1.0)
        throw ValidationError("generate_unichain_mdp: delta outside (0, 1]");
    std::uniform_real_distribution<double> positive(0.1, 1.0);
    std::uniform_real_distribution<double> any(0.0, 1.0);
    Eigen::MatrixXd base(num_states, num_states);
    for (int s = 0; s < num_states; ++s) {
        double total = 0.0;
        for (int j = 0; j < num_states; ++j) {
            base(s, j) = positive(rng);
            total += base(s, j);
        }
        base.row(s) /= total;
    }
    std::vector<Eigen::MatrixXd> kernels;
    for (int a = 0; a < num_actions; ++a) {
        Eigen::MatrixXd q(num_states, num_states);
        for (int s = 0; s < num_states; ++s) {
            double total = 0.0;
            for (int j = 0; j < num_states; ++j) {
                q(s, j) = any(rng);
                total += q(s, j);
            }
            if (total < 1e-9)
                q.row(s).setConstant(1.0 / num_states);
            else
                q.row(s) /= total;
        }
        kernels.push_back(delta * base + (1.0 - delta) * q);
    }
    return MdpModel(num_states, num_actions, std::move(kernels));
}

double clipped_gaussian_mean(double mu, double sigma, double bound) {
    if (!(bound > 0.0)) throw ValidationError("clipped_gaussian_mean: bound <= 0");
    if (sigma < 0.0) throw ValidationError("clipped_gaussian_mean: sigma < 0");
    if (sigma == 0.0) return std::clamp(mu, -bound, bound);
    const double lo = (-bound - mu) / sigma;
    const double hi = (bound - mu) / sigma;
    return -bound * gauss_cdf(lo) + bound * (1.0 - gauss_cdf(hi)) +
           mu * (gauss_cdf(hi) - gauss_cdf(lo)) -
           sigma * (gauss_pdf(hi) - gauss_pdf(lo));
}

FunctionStream::FunctionStream(const Scenario& scenario, std::uint64_t run_seed,
                               long horizon)
    : scenario_(&scenario),
      path_seed_(mix_seed(scenario.config.seed, run_seed, kTagPath)),
      horizon_(horizon) {
    if (horizon < 1) throw ValidationError("function stream horizon must be >= 1");
    const ScenarioConfig& cfg = scenario.config;
    if (cfg.penalty_process == PenaltyProcess::sinusoidal_adversarial)
        phase_noise_ = wave_jitter(cfg.seed, cfg.period, cfg.phase_noise);
    if (cfg.penalty_process == PenaltyProcess::markov_modulated) {
        regime_.resize(static_cast<std::size_t>(horizon));
        auto rng = make_engine(path_seed_, kTagRegime);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::int8_t state = 1;
        for (long t = 0; t < horizon; ++t) {
            if (t > 0 && unif(rng) < cfg.swap_prob) state = static_cast<std::int8_t>(-state);
            regime_[static_cast<std::size_t>(t)] = state;
        }
    }
}

int FunctionStream::regime(long t) const {
    if (regime_.empty()) return 1;
    if (t < 0 || t >= horizon_) throw DimensionError("regime: slot outside horizon");
    return regime_[static_cast<std::size_t>(t)];
}

Eigen::VectorXd FunctionStream::penalty_table(int k, long t,
                                              std::mt19937_64& slot_rng) const {
    const ScenarioConfig& cfg = scenario_->config;
    const Eigen::VectorXd& center = scenario_->center_f[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& amp = scenario_->amp_f[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& phase = scenario_->phase_f[static_cast<std::size_t>(k)];
    Eigen::VectorXd f(center.size());
    switch (cfg.penalty_process) {
        case PenaltyProcess::iid: {
            std::normal_distribution<double> gauss(0.0, cfg.sigma_f);
            for (int j = 0; j < f.size(); ++j)
                f(j) = std::clamp(center(j) + gauss(slot_rng), -cfg.psi, cfg.psi);
            break;
        }
        case PenaltyProcess::sinusoidal_adversarial:
            for (int j = 0; j < f.size(); ++j)
                f(j) = wave_value(center(j), amp(j), phase(j), t, cfg.period,
                                  phase_noise_, cfg.psi);
            break;
        case PenaltyProcess::markov_modulated: {
            const double sign = regime_[static_cast<std::size_t>(t)];
            for (int j = 0; j < f.size(); ++j)
                f(j) = std::clamp(center(j) + sign * amp(j), -cfg.psi, cfg.psi);
            break;
        }
    }
    return f;
}

FunctionSample FunctionStream::at(long t) const {
    if (t < 0 || t >= horizon_)
        throw DimensionError("function stream: slot outside horizon");
    const ScenarioConfig& cfg = scenario_->config;
    auto slot_rng = make_engine(path_seed_, kTagSlot, static_cast<std::uint64_t>(t));
    FunctionSample s;
    for (int k = 0; k < cfg.num_mdps; ++k)
        s.f.push_back(penalty_table(k, t, slot_rng));
    std::normal_distribution<double> gauss(0.0, cfg.sigma_g);
    s.g.resize(static_cast<std::size_t>(cfg.num_constraints));
    for (int i = 0; i < cfg.num_constraints; ++i) {
        double shared = 0.0;
        if (cfg.constraint_noise == ConstraintNoiseMode::shared) shared = gauss(slot_rng);
        for (int k = 0; k < cfg.num_mdps; ++k) {
            const Eigen::VectorXd& center =
                scenario_->center_g[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            Eigen::VectorXd g(center.size());
            for (int j = 0; j < g.size(); ++j) {
                const double noise = cfg.constraint_noise == ConstraintNoiseMode::shared
                                         ? shared
                                         : gauss(slot_rng);
                g(j) = std::clamp(center(j) + noise, -cfg.psi, cfg.psi);
            }
            s.g[static_cast<std::size_t>(i)].push_back(g);
        }
    }
    return s;
}

FunctionSample sample_functions(const Scenario& scenario, std::uint64_t run_seed,
                                long t) {
    return FunctionStream(scenario, run_seed, t + 1).at(t);
}

SlaterCertificate certify_slater(
    const std::vector<MdpModel>& models,
    const std::vector<std::vector<Eigen::VectorXd>>& mean_g) {
    if (models.empty()) throw DimensionError("certify_slater: no models");
    SlaterCertificate cert;
    if (mean_g.empty()) {
        cert.eta = std::numeric_limits<double>::infinity();
        for (const auto& model : models)
            cert.theta_tilde.push_back(
                policy_to_theta(model,
                                PolicyTable::uniform(model.num_states, model.num_actions))
                    .v);
        return cert;
    }
    const int m = static_cast<int>(mean_g.size());
    int total = 0, eq_rows = 0;
    std::vector<PolyhedronSpec> specs;
    for (const auto& model : models) {
        specs.push_back(build_polyhedron(model));
        total += model.table_size();
        eq_rows += model.num_states;
    }
    for (const auto& row : mean_g) {
        if (row.size() != models.size())
            throw DimensionError("certify_slater: mean_g MDP count mismatch");
        for (std::size_t k = 0; k < models.size(); ++k)
            if (row[k].size() != models[k].table_size())
                throw DimensionError("certify_slater: mean_g table size mismatch");
    }

    // Variables: concatenated occupancies then the margin eta (all >= 0).
    LinearProgram lp;
    const int n = total + 1;
    lp.c = Eigen::VectorXd::Zero(n);
    lp.c(n - 1) = -1.0;  // maximize eta
    lp.A_eq = Eigen::MatrixXd::Zero(eq_rows, n);
    lp.b_eq = Eigen::VectorXd::Zero(eq_rows);
    int row0 = 0, col0 = 0;
    for (const auto& spec : specs) {
        lp.A_eq.block(row0, col0, spec.A.rows(), spec.A.cols()) = spec.A;
        lp.b_eq.segment(row0, spec.b.size()) = spec.b;
        row0 += static_cast<int>(spec.A.rows());
        col0 += static_cast<int>(spec.A.cols());
    }
    lp.G = Eigen::MatrixXd::Zero(m, n);
    lp.h = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
        int off = 0;
        for (std::size_t k = 0; k < models.size(); ++k) {
            lp.G.block(i, off, 1, models[k].table_size()) =
                mean_g[static_cast<std::size_t>(i)][k].transpose();
            off += models[k].table_size();
        }
        lp.G(i, n - 1) = 1.0;
    }

    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
        cert.eta = -1.0;  // no strictly feasible point exists
        return cert;
    }
    cert.eta = -sol.value;
    int off = 0;
    for (const auto& model : models) {
        cert.theta_tilde.push_back(sol.x.segment(off, model.table_size()));
        off += model.table_size();
    }
    return cert;
}

Scenario build_scenario(const ScenarioConfig& cfg, int max_tries) {
    cfg.validate();
    if (max_tries < 1) throw ValidationError("build_scenario: max_tries < 1");
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        auto rng = make_engine(cfg.seed, kTagBuild, static_cast<std::uint64_t>(attempt));
        std::uniform_real_distribution<double> center_dist(0.05, 0.7);
        std::uniform_real_distribution<double> g_dist(-0.5, 0.5);
        std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);

        Scenario scn;
        scn.config = cfg;
        for (const auto& [ns, na] : cfg.sizes)
            scn.models.push_back(generate_unichain_mdp(ns, na, cfg.delta, rng));
        for (const auto& model : scn.models) {
            const int n = model.table_size();
            Eigen::VectorXd center(n), amp(n), phase(n);
            for (int j = 0; j < n; ++j) {
                center(j) = center_dist(rng) * cfg.psi;
                phase(j) = cfg.penalty_process == PenaltyProcess::sinusoidal_adversarial
                               ? phase_dist(rng)
                               : 0.0;
            }
            switch (cfg.penalty_process) {
                case PenaltyProcess::iid: amp.setZero(); break;
                case PenaltyProcess::sinusoidal_adversarial:
                    amp.setConstant(0.1 * cfg.psi);
                    break;
                case PenaltyProcess::markov_modulated:
                    amp.setConstant(0.15 * cfg.psi);
                    break;
            }
            scn.center_f.push_back(center);
            scn.amp_f.push_back(amp);
            scn.phase_f.push_back(phase);
        }
        scn.center_g.resize(static_cast<std::size_t>(cfg.num_constraints));
        for (int i = 0; i < cfg.num_constraints; ++i)
            for (const auto& model : scn.models) {
                Eigen::VectorXd center(model.table_size());
                for (int j = 0; j < center.size(); ++j)
                    center(j) = g_dist(rng) * cfg.psi;
                scn.center_g[static_cast<std::size_t>(i)].push_back(center);
            }
        scn.mean_f = certified_penalty_means(cfg, scn.center_f, scn.amp_f, scn.phase_f);
        scn.mean_g = certified_constraint_means(cfg, scn.center_g);
        scn.certificate = certify_slater(scn.models, scn.mean_g);
        if (cfg.num_constraints == 0 || scn.certificate.valid()) {
            scn.validate();
            return scn;
        }
    }
    throw ValidationError("build_scenario: no strictly feasible instance after " +
                          std::to_string(max_tries) + " attempts");
}

Scenario reference_scenario(std::uint64_t seed) {
    Scenario scn;
    ScenarioConfig& cfg = scn.config;
    cfg.name = "reference";
    cfg.num_mdps = 2;
    cfg.num_constraints = 2;
    cfg.psi = 1.0;
    cfg.sizes = {{3, 2}, {3, 2}};
    cfg.penalty_process = PenaltyProcess::sinusoidal_adversarial;
    cfg.constraint_noise = ConstraintNoiseMode::per_entry;
    cfg.seed = seed;
    cfg.sigma_g = 0.15;
    cfg.period = 50;
    cfg.phase_noise = 0.2;

    Eigen::MatrixXd p10(3, 3), p11(3, 3), p20(3, 3), p21(3, 3);
    p10 << 0.70, 0.20, 0.10, 0.30, 0.50, 0.20, 0.25, 0.25, 0.50;
    p11 << 0.40, 0.40, 0.20, 0.15, 0.70, 0.15, 0.20, 0.30, 0.50;
    p20 << 0.60, 0.25, 0.15, 0.20, 0.60, 0.20, 0.30, 0.20, 0.50;
    p21 << 0.25, 0.50, 0.25, 0.40, 0.35, 0.25, 0.15, 0.35, 0.50;
    scn.models.emplace_back(3, 2, std::vector<Eigen::MatrixXd>{p10, p11});
    scn.models.emplace_back(3, 2, std::vector<Eigen::MatrixXd>{p20, p21});

    // MDP 1: action 0 is expensive but relieves both constraints; action 1 is
    // cheap and loads them.  MDP 2: action 1 is far cheaper, so the optimal
    // point sits away from the uniform start (a long transient), with mild
    // constraint coupling.
    Eigen::VectorXd f1(6), f2(6), g11(6), g21(6), g12(6), g22(6);
    f1 << 0.50, 0.35, 0.47, 0.38, 0.53, 0.32;
    f2 << 0.80, 0.05, 0.78, 0.07, 0.82, 0.03;
    g11 << -0.50, 0.45, -0.50, 0.45, -0.50, 0.45;
    g21 << -0.40, 0.20, -0.40, 0.20, -0.40, 0.20;
    g12 << 0.10, -0.05, 0.10, -0.05, 0.10, -0.05;
    g22 << 0.02, -0.02, 0.02, -0.02, 0.02, -0.02;
    scn.center_f = {f1, f2};
    scn.amp_f = {Eigen::VectorXd::Constant(6, 0.15), Eigen::VectorXd::Constant(6, 0.15)};
    Eigen::VectorXd ph1(6), ph2(6);
    ph1 << 0.0, 0.7, 1.4, 2.1, 2.8, 3.5;
    ph2 << 0.35, 1.05, 1.75, 2.45, 3.15, 3.85;
    scn.phase_f = {ph1, ph2};
    scn.center_g = {{g11, g12}, {g21, g22}};

    scn.mean_f = certified_penalty_means(cfg, scn.center_f, scn.amp_f, scn.phase_f);
    scn.mean_g = certified_constraint_means(cfg, scn.center_g);
    scn.certificate = certify_slater(scn.models, scn.mean_g);
    if (!scn.certificate.valid())
        throw ValidationError("reference scenario lost strict feasibility");
    scn.validate();
    return scn;
}

Scenario datacenter_scenario(int num_servers, double price_amplitude,
                             double arrival_rate, std::uint64_t seed) {
    if (num_servers < 1) throw ValidationError("need at least one server");
    if (price_amplitude < 0.0) throw ValidationError("negative price amplitude");
    if (arrival_rate < 0.0) throw ValidationError("negative arrival rate");
    const double base_price = std::max(0.5, price_amplitude);
    const double service_rate = 1.0;
    const double smoothing = 0.01;

    Scenario scn;
    ScenarioConfig& cfg = scn.config;
    cfg.name = "datacenter";
    cfg.num_mdps = num_servers;
    cfg.num_constraints = 1;
    cfg.psi = std::max({1.0, base_price + price_amplitude,
                        service_rate + arrival_rate / num_servers + 0.5});
    cfg.sizes.assign(static_cast<std::size_t>(num_servers), {3, 2});
    cfg.penalty_process = PenaltyProcess::sinusoidal_adversarial;
    cfg.constraint_noise = ConstraintNoiseMode::shared;
    cfg.seed = seed;
    cfg.sigma_g = 0.1;
    cfg.period = 100;
    cfg.phase_noise = 0.25;

    // States: 0 = active, 1 = idle, 2 = setup.  Action 0 stays, action 1
    // toggles (sleep from active, wake via setup from idle); setup always
    // falls through to active.  Rows get smoothing leakage so every kernel
    // entry is positive and the unichain scan certifies r = 1.
    Eigen::MatrixXd stay(3, 3), toggle(3, 3);
    stay << 1, 0, 0, 0, 1, 0, 1, 0, 0;
    toggle << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const Eigen::MatrixXd leak = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
    stay = (1.0 - smoothing) * stay + smoothing * leak;
    toggle = (1.0 - smoothing) * toggle + smoothing * leak;

    Eigen::VectorXd center_f(6), amp_f(6), center_g(6);
    center_f << base_price, base_price, 0, 0, 0, 0;
    amp_f << price_amplitude, price_amplitude, 0, 0, 0, 0;
    const double arrival_share = arrival_rate / num_servers;
    center_g << arrival_share - service_rate, arrival_share - service_rate,
        arrival_share, arrival_share, arrival_share, arrival_share;

    scn.center_g.resize(1);
    for (int k = 0; k < num_servers; ++k) {
        scn.models.emplace_back(3, 2, std::vector<Eigen::MatrixXd>{stay, toggle});
        scn.center_f.push_back(center_f);
        scn.amp_f.push_back(amp_f);
        scn.phase_f.push_back(Eigen::VectorXd::Zero(6));  // one shared market price
        scn.center_g[0].push_back(center_g);
    }
    scn.mean_f = certified_penalty_means(cfg, scn.center_f, scn.amp_f, scn.phase_f);
    scn.mean_g = certified_constraint_means(cfg, scn.center_g);
    scn.certificate = certify_slater(scn.models, scn.mean_g);
    if (!scn.certificate.valid())
        throw ValidationError(
            "datacenter scenario infeasible: arrival rate exceeds what the fleet "
            "can serve strictly");
    scn.validate();
    return scn;
}

void Scenario::validate() const {
    config.validate();
    const auto K = static_cast<std::size_t>(config.num_mdps);
    const auto m = static_cast<std::size_t>(config.num_constraints);
    if (models.size() != K) throw DimensionError("scenario: model count mismatch");
    auto check_tables = [&](const std::vector<Eigen::VectorXd>& tables,
                            const char* what) {
        if (tables.size() != K)
            throw DimensionError(std::string("scenario: ") + what + " count mismatch");
        for (std::size_t k = 0; k < K; ++k)
            if (tables[k].size() != models[k].table_size())
                throw DimensionError(std::string("scenario: ") + what +
                                     " table size mismatch");
    };
    for (std::size_t k = 0; k < K; ++k) {
        models[k].validate();
        if (models[k].num_states != config.sizes[k].first ||
            models[k].num_actions != config.sizes[k].second)
            throw DimensionError("scenario: model size differs from config");
    }
    check_tables(center_f, "center_f");
    check_tables(amp_f, "amp_f");
    check_tables(phase_f, "phase_f");
    check_tables(mean_f, "mean_f");
    if (center_g.size() != m || mean_g.size() != m)
        throw DimensionError("scenario: constraint table count mismatch");
    for (std::size_t i = 0; i < m; ++i) {
        check_tables(center_g[i], "center_g");
        check_tables(mean_g[i], "mean_g");
    }
    for (std::size_t k = 0; k < K; ++k)
        if (amp_f[k].minCoeff() < 0.0)
            throw ValidationError("scenario: negative wave amplitude");
    if (m > 0) {
        if (!certificate.valid())
            throw ValidationError("scenario: missing strict-feasibility certificate");
        if (certificate.theta_tilde.size() != K)
            throw DimensionError("scenario: certificate witness count mismatch");
        for (std::size_t k = 0; k < K; ++k) {
            OccupancyVector theta{certificate.theta_tilde[k]};
            if (theta.feasibility_residual(models[k]) > 1e-6)
                throw ValidationError("scenario: certificate witness infeasible");
        }
        for (std::size_t i = 0; i < m; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                total += mean_g[i][k].dot(certificate.theta_tilde[k]);
            if (total > -certificate.eta + 1e-6)
                throw ValidationError("scenario: certificate margin not honored");
        }
    }
}

std::string Scenario::hash() const {
    std::string buf;
    buf.reserve(4096);
    buf += config.name;
    buf += ';';
    buf += std::to_string(config.num_mdps) + ";" +
           std::to_string(config.num_constraints) + ";";
    hash_append(buf, config.psi);
    for (const auto& [ns, na] : config.sizes)
        buf += std::to_string(ns) + "," + std::to_string(na) + ";";
    buf += to_string(config.penalty_process) + ";";
    buf += to_string(config.constraint_noise) + ";";
    buf += std::to_string(config.seed) + ";";
    hash_append(buf, config.sigma_f);
    hash_append(buf, config.sigma_g);
    buf += std::to_string(config.period) + ";";
    hash_append(buf, config.phase_noise);
    hash_append(buf, config.swap_prob);
    hash_append(buf, config.delta);
    for (const auto& model : models)
        for (const auto& kernel : model.kernel)
            for (int s = 0; s < kernel.rows(); ++s)
                for (int j = 0; j < kernel.cols(); ++j) hash_append(buf, kernel(s, j));
    for (const auto& v : center_f) hash_append(buf, v);
    for (const auto& v : amp_f) hash_append(buf, v);
    for (const auto& v : phase_f) hash_append(buf, v);
    for (const auto& row : center_g)
        for (const auto& v : row) hash_append(buf, v);
    for (const auto& v : mean_f) hash_append(buf, v);
    for (const auto& row : mean_g)
        for (const auto& v : row) hash_append(buf, v);

    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : buf) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

void save_scenario(const std::string& dir, const Scenario& scenario) {
    scenario.validate();
    namespace fs = std::filesystem;
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "models", ec);
    if (ec) throw ValidationError("cannot create scenario directory: " + dir);

    const ScenarioConfig& cfg = scenario.config;
    json meta;
    meta["schema_version"] = 1;
    meta["name"] = cfg.name;
    json jc;
    jc["num_mdps"] = cfg.num_mdps;
    jc["num_constraints"] = cfg.num_constraints;
    jc["psi"] = cfg.psi;
    json sizes = json::array();
    for (const auto& [ns, na] : cfg.sizes) sizes.push_back({ns, na});
    jc["sizes"] = sizes;
    jc["penalty_process"] = to_string(cfg.penalty_process);
    jc["constraint_noise"] = to_string(cfg.constraint_noise);
    jc["seed"] = cfg.seed;
    jc["sigma_f"] = cfg.sigma_f;
    jc["sigma_g"] = cfg.sigma_g;
    jc["period"] = cfg.period;
    jc["phase_noise"] = cfg.phase_noise;
    jc["swap_prob"] = cfg.swap_prob;
    jc["delta"] = cfg.delta;
    meta["config"] = jc;
    meta["hash"] = scenario.hash();
    write_file(root / "scenario.json", meta.dump(2) + "\n");

    for (std::size_t k = 0; k < scenario.models.size(); ++k)
        write_file(root / "models" / ("mdp_" + std::to_string(k) + ".json"),
                   model_to_json(scenario.models[k]) + "\n");

    json means;
    means["schema_version"] = 1;
    means["note"] =
        "Generator families are this harness's choice (only boundedness and "
        "slotwise independence of the constraint noise are assumed upstream). "
        "mean_g entries are exact post-clipping expectations; mean_f is the "
        "process time average (exact wave period average, stationary regime "
        "average, or post-clip mean).";
    auto tables_to_json = [](const std::vector<Eigen::VectorXd>& tables) {
        json a = json::array();
        for (const auto& v : tables) a.push_back(vec_to_json(v));
        return a;
    };
    means["center_f"] = tables_to_json(scenario.center_f);
    means["amp_f"] = tables_to_json(scenario.amp_f);
    means["phase_f"] = tables_to_json(scenario.phase_f);
    means["mean_f"] = tables_to_json(scenario.mean_f);
    json cg = json::array(), mg = json::array();
    for (const auto& row : scenario.center_g) cg.push_back(tables_to_json(row));
    for (const auto& row : scenario.mean_g) mg.push_back(tables_to_json(row));
    means["center_g"] = cg;
    means["mean_g"] = mg;
    write_file(root / "means.json", means.dump(2) + "\n");

    json cert;
    cert["schema_version"] = 1;
    cert["infinite"] = std::isinf(scenario.certificate.eta);
    cert["eta"] = std::isinf(scenario.certificate.eta) ? 0.0 : scenario.certificate.eta;
    cert["theta_tilde"] = tables_to_json(scenario.certificate.theta_tilde);
    write_file(root / "certificate.json", cert.dump(2) + "\n");
}

Scenario load_scenario(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    json meta = parse_json(read_file(root / "scenario.json"), "scenario.json");
    if (!meta.contains("schema_version") || meta["schema_version"].get<int>() != 1)
        throw ValidationError("scenario.json: unsupported schema version");
    if (!meta.contains("config") || !meta.contains("hash"))
        throw ValidationError("scenario.json: missing config or hash");
    const json& jc = meta["config"];

    Scenario scn;
    ScenarioConfig& cfg = scn.config;
    try {
        cfg.name = meta.value("name", std::string("unnamed"));
        cfg.num_mdps = jc.at("num_mdps").get<int>();
        cfg.num_constraints = jc.at("num_constraints").get<int>();
        cfg.psi = jc.at("psi").get<double>();
        for (const auto& pair : jc.at("sizes"))
            cfg.sizes.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
        cfg.penalty_process =
            penalty_process_from_string(jc.at("penalty_process").get<std::string>());
        cfg.constraint_noise =
            constraint_noise_mode_from_string(jc.at("constraint_noise").get<std::string>());
        cfg.seed = jc.at("seed").get<std::uint64_t>();
        cfg.sigma_f = jc.at("sigma_f").get<double>();
        cfg.sigma_g = jc.at("sigma_g").get<double>();
        cfg.period = jc.at("period").get<long>();
        cfg.phase_noise = jc.at("phase_noise").get<double>();
        cfg.swap_prob = jc.at("swap_prob").get<double>();
        cfg.delta = jc.at("delta").get<double>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario.json: bad config: ") + e.what());
    }

    for (int k = 0; k < cfg.num_mdps; ++k)
        scn.models.push_back(model_from_json(
            read_file(root / "models" / ("mdp_" + std::to_string(k) + ".json"))));

    json means = parse_json(read_file(root / "means.json"), "means.json");
    auto tables_from_json = [](const json& a, const char* what) {
        if (!a.is_array()) throw ValidationError(std::string(what) + ": expected array");
        std::vector<Eigen::VectorXd> tables;
        for (const auto& v : a) tables.push_back(vec_from_json(v, what));
        return tables;
    };
    try {
        scn.center_f = tables_from_json(means.at("center_f"), "center_f");
        scn.amp_f = tables_from_json(means.at("amp_f"), "amp_f");
        scn.phase_f = tables_from_json(means.at("phase_f"), "phase_f");
        scn.mean_f = tables_from_json(means.at("mean_f"), "mean_f");
        for (const auto& row : means.at("center_g"))
            scn.center_g.push_back(tables_from_json(row, "center_g"));
        for (const auto& row : means.at("mean_g"))
            scn.mean_g.push_back(tables_from_json(row, "mean_g"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("means.json: ") + e.what());
    }

    json cert = parse_json(read_file(root / "certificate.json"), "certificate.json");
    try {
        scn.certificate.eta = cert.at("infinite").get<bool>()
                                  ? std::numeric_limits<double>::infinity()
                                  : cert.at("eta").get<double>();
        scn.certificate.theta_tilde =
            tables_from_json(cert.at("theta_tilde"), "theta_tilde");
    } catch (const json::exception& e) {
        throw ValidationError(std::string("certificate.json: ") + e.what());
    }

    scn.validate();
    const std::string stored = meta["hash"].get<std::string>();
    if (scn.hash() != stored)
        throw ValidationError("scenario content hash mismatch: stored " + stored +
                              ", recomputed " + scn.hash());
    return scn;
}

}  // namespace ocmdp
