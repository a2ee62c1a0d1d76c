#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ocmdp/controller.hpp"
#include "ocmdp/model.hpp"

namespace ocmdp {

/// How the penalty tables evolve over time.  Constraint tables are always
/// i.i.d. noise around fixed centers; the penalty path may instead be an
/// arbitrary-looking deterministic wave or a regime-switching process.
enum class PenaltyProcess { iid, sinusoidal_adversarial, markov_modulated };

/// How per-slot constraint noise is drawn: an independent draw per table
/// entry, or one draw per constraint shared by every entry (used when the
/// noise models a single global quantity such as an arrival count).
enum class ConstraintNoiseMode { per_entry, shared };

std::string to_string(PenaltyProcess p);
PenaltyProcess penalty_process_from_string(const std::string& s);
std::string to_string(ConstraintNoiseMode m);
ConstraintNoiseMode constraint_noise_mode_from_string(const std::string& s);

/// Generation recipe for a weakly coupled instance.  The concrete tables of a
/// generated Scenario are stored explicitly; the config carries only the
/// process parameters and the seed that drives every random stream.
struct ScenarioConfig {
    std::string name = "unnamed";
    int num_mdps = 1;
    int num_constraints = 0;
    double psi = 1.0;  // uniform bound: every emitted table entry lies in [-psi, psi]
    std::vector<std::pair<int, int>> sizes;  // (|S|, |A|) per MDP
    PenaltyProcess penalty_process = PenaltyProcess::iid;
    ConstraintNoiseMode constraint_noise = ConstraintNoiseMode::per_entry;
    std::uint64_t seed = 0;

    double sigma_f = 0.1;      // iid penalty noise std deviation
    double sigma_g = 0.15;     // constraint noise std deviation
    long period = 50;          // sinusoidal wave period (slots)
    double phase_noise = 0.2;  // per-slot wave jitter amplitude (slots)
    double swap_prob = 0.05;   // regime flip probability (markov-modulated)
    double delta = 0.2;        // ergodic-mixture weight for generated kernels

    /// Throws ValidationError / DimensionError on K < 1, m < 0, psi <= 0,
    /// size list mismatch, or out-of-range process parameters.
    void validate() const;
};

/// Strict-feasibility certificate: a product occupancy point whose expected
/// constraint totals are all <= -eta.  m == 0 scenarios carry the trivial
/// certificate eta = +infinity.
struct SlaterCertificate {
    double eta = 0.0;
    std::vector<Eigen::VectorXd> theta_tilde;

    bool valid() const { return eta > 0.0; }
};

/// A fully generated instance: models, the generator's center/amplitude/phase
/// tables, and the certified expectations the LP baselines consume.  mean_g
/// is the exact post-clipping expectation of the noise process; mean_f is the
/// process's time average (exact period average for the wave, stationary
/// regime average for the switching process, post-clip mean for iid).
struct Scenario {
    ScenarioConfig config;
    std::vector<MdpModel> models;

    std::vector<Eigen::VectorXd> center_f;  // wave / noise centers, per MDP
    std::vector<Eigen::VectorXd> amp_f;     // per-entry wave or regime amplitude
    std::vector<Eigen::VectorXd> phase_f;   // per-entry wave phase (radians)
    std::vector<std::vector<Eigen::VectorXd>> center_g;  // [constraint][MDP]

    std::vector<Eigen::VectorXd> mean_f;
    std::vector<std::vector<Eigen::VectorXd>> mean_g;

    SlaterCertificate certificate;

    /// Shape checks, model validation, and a recheck of the certificate
    /// against mean_g (margin honored within 1e-6).  Throws on failure.
    void validate() const;

    /// Stable content hash (hex string) over config, kernels, and tables;
    /// used to detect scenario/baseline mismatches downstream.
    std::string hash() const;
};

/// Kernels P_a = delta * P_hat + (1 - delta) * Q_a with P_hat a fixed
/// entrywise-positive stochastic matrix and Q_a random stochastic.  Every
/// entry of every P_a is >= delta * (min entry of P_hat) > 0, so the
/// unichain scan certifies the model at r = 1.  The draw order is fixed
/// (P_hat rows first, then each Q_a), so calls with identical engines and
/// different delta share the same P_hat.
MdpModel generate_unichain_mdp(int num_states, int num_actions, double delta,
                               std::mt19937_64& rng);

/// E[clip(X, -bound, bound)] for X ~ N(mu, sigma^2), evaluated in closed form
/// via the Gaussian CDF; sigma == 0 degenerates to clamping mu.
double clipped_gaussian_mean(double mu, double sigma, double bound);

/// Oblivious function path for one run.  The whole path is a pure function of
/// (scenario seed, run seed): wave phases and jitter derive from the scenario
/// seed alone (the adversarial component is the scenario's fixed choice), the
/// i.i.d. noise and regime streams mix in the run seed.  Construction
/// precomputes the regime walk, so at(t) is O(table size) random access for
/// any t below the horizon.
class FunctionStream {
  public:
    FunctionStream(const Scenario& scenario, std::uint64_t run_seed, long horizon);

    /// Tables for slot t (0-based).  Throws DimensionError outside [0, horizon).
    FunctionSample at(long t) const;

    long horizon() const { return horizon_; }
    /// Regime sign (+1/-1) at slot t (markov-modulated only; +1 otherwise).
    int regime(long t) const;

  private:
    const Scenario* scenario_;
    std::uint64_t path_seed_;
    long horizon_;
    std::vector<double> phase_noise_;   // slot-in-period jitter, scenario-seeded
    std::vector<std::int8_t> regime_;   // per-slot regime sign

    Eigen::VectorXd penalty_table(int k, long t, std::mt19937_64& slot_rng) const;
};

/// One-off convenience wrapper around FunctionStream (rebuilds the stream; use
/// the class directly inside loops).
FunctionSample sample_functions(const Scenario& scenario, std::uint64_t run_seed,
                                long t);

/// Maximizes eta subject to sum_k <mean_g[i][k], theta_k> <= -eta over the
/// product of occupancy polytopes.  Returns the trivial certificate when
/// mean_g is empty; an infeasible or zero-margin program yields eta <= 0
/// (certificate invalid) so callers can regenerate the scenario.
SlaterCertificate certify_slater(const std::vector<MdpModel>& models,
                                 const std::vector<std::vector<Eigen::VectorXd>>& mean_g);

/// Generates a random instance from the recipe: mixture kernels, uniform
/// random centers, certified means, Slater certificate.  Redraws (bumping an
/// attempt salt) until the certificate is strictly feasible; throws
/// ValidationError when max_tries attempts all fail.
Scenario build_scenario(const ScenarioConfig& cfg, int max_tries = 50);

/// Hand-built acceptance instance: two 3-state/2-action MDPs, two coupling
/// constraints, psi = 1, sinusoidal penalties (period 50) and iid constraint
/// noise (sigma 0.15).  MDP 1 trades a cheap action against both constraints
/// (the first binds at the optimum); MDP 2 starts far from its optimum and
/// couples weakly.  The certified Slater margin exceeds 0.2.
Scenario reference_scenario(std::uint64_t seed = 2026);

/// Server-fleet instance: each server is a 3-state (active/idle/setup) MDP
/// with a forced setup->active transition, smoothed by epsilon = 0.01 leakage
/// so the unichain scan certifies it.  Penalty = price(t) on active pairs
/// (shared sinusoidal price); single constraint = arrivals minus active
/// service with one shared noise draw per slot.
Scenario datacenter_scenario(int num_servers, double price_amplitude,
                             double arrival_rate, std::uint64_t seed);

/// Directory layout: scenario.json (config + hash), models/mdp_<k>.json,
/// means.json (centers, amplitudes, phases, certified means), and
/// certificate.json.  save refuses invalid scenarios; load revalidates and
/// rejects content whose recomputed hash differs from the stored one.
void save_scenario(const std::string& dir, const Scenario& scenario);
Scenario load_scenario(const std::string& dir);

}  // namespace ocmdp
