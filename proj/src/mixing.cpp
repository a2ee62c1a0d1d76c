#include "ocmdp/mixing.hpp"

#include <cmath>

#include "ocmdp/rng.hpp"
#include "ocmdp/stationary.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ocmdp {

namespace {

// Transition matrix of a pure policy given as a state -> action map.
Eigen::MatrixXd pure_transition(const MdpModel& model, const std::vector<int>& actions) {
    Eigen::MatrixXd P(model.num_states, model.num_states);
    for (int s = 0; s < model.num_states; ++s)
        P.row(s) = model.kernel[actions[s]].row(s);
    return P;
}

// Decodes sequence index -> r policy maps (mixed-radix, last step fastest).
void decode_sequence(long idx, int r, int num_states, int num_actions, long policy_count,
                     std::vector<std::vector<int>>& seq) {
    for (int step = r - 1; step >= 0; --step) {
        long pidx = idx % policy_count;
        idx /= policy_count;
        long rem = pidx;
        for (int s = num_states - 1; s >= 0; --s) {
            seq[step][s] = static_cast<int>(rem % num_actions);
            rem /= num_actions;
        }
    }
}

struct ScanOutcome {
    double min_entry = 1.0;
    bool positive = true;
    std::vector<std::vector<int>> witness;
};

// Scans products of r pure-policy matrices, either all of them or a seeded
// sample, tracking the smallest entry seen and a witness if any entry is zero.
ScanOutcome scan_products(const MdpModel& model, int r, long sequence_count,
                          bool exhaustive, int sample_count, std::uint64_t seed) {
    const int n = model.num_states;
    long policy_count = 1;
    for (int s = 0; s < n; ++s) policy_count *= model.num_actions;

    ScanOutcome out;
    std::vector<std::vector<int>> seq(r, std::vector<int>(n, 0));
    const long draws = exhaustive ? sequence_count : sample_count;
    auto rng = make_engine(seed, static_cast<std::uint64_t>(r), 0x6d69786eULL);
    std::uniform_int_distribution<long> pick(0, sequence_count - 1);

    for (long i = 0; i < draws; ++i) {
        const long idx = exhaustive ? i : pick(rng);
        decode_sequence(idx, r, n, model.num_actions, policy_count, seq);
        Eigen::MatrixXd prod = pure_transition(model, seq[0]);
        for (int step = 1; step < r; ++step)
            prod = prod * pure_transition(model, seq[step]);
        const double m = prod.minCoeff();
        if (m <= 0.0) {
            out.positive = false;
            out.witness = seq;
            return out;
        }
        out.min_entry = std::min(out.min_entry, m);
    }
    return out;
}

}  // namespace

UnichainResult check_unichain(const MdpModel& model, int r_max, long enumeration_cap,
                              int sample_count, std::uint64_t sample_seed) {
    if (r_max <= 0) throw DimensionError("check_unichain: r_max must be positive");
    UnichainResult result;
    for (int r = 1; r <= r_max; ++r) {
        // sequence_count = |A|^(|S| r), saturating to avoid overflow.
        double log_count = model.num_states * static_cast<double>(r) *
                           std::log((double)model.num_actions);
        bool exhaustive = log_count <= std::log((double)enumeration_cap) + 1e-12;
        long sequence_count;
        if (exhaustive) {
            sequence_count = 1;
            for (int i = 0; i < model.num_states * r; ++i)
                sequence_count *= model.num_actions;
            exhaustive = sequence_count <= enumeration_cap;
        } else {
            sequence_count = enumeration_cap;  // only used as a sampling range
        }
        ScanOutcome scan = scan_products(model, r, sequence_count, exhaustive,
                                         sample_count, sample_seed);
        if (scan.positive) {
            result.estimate = MixingEstimate::from_delta(
                r, std::min(1.0, model.num_states * scan.min_entry));
            result.exhaustive = exhaustive;
            return result;
        }
        result.witness = scan.witness;  // deepest failing sequence so far
    }
    return result;  // estimate empty: not certified unichain up to r_max
}

double mixing_contraction_check(const MdpModel& model, const MixingEstimate& est,
                                int trials, std::uint64_t seed, int workers) {
    if (est.r <= 0) throw DimensionError("mixing_contraction_check: estimate has r <= 0");
    const int n = model.num_states;

    auto one_trial = [&](int trial) -> double {
        auto rng = make_engine(seed, static_cast<std::uint64_t>(trial), 0x636f6eULL);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::VectorXd d1(n), d2(n);
        for (int i = 0; i < n; ++i) d1(i) = unif(rng);
        for (int i = 0; i < n; ++i) d2(i) = unif(rng);
        d1 /= d1.sum();
        d2 /= d2.sum();
        Eigen::VectorXd diff = d1 - d2;
        const double base = diff.cwiseAbs().sum();
        if (base < 1e-12) return 0.0;
        for (int step = 0; step < est.r; ++step) {
            Eigen::MatrixXd probs(n, model.num_actions);
            for (int s = 0; s < n; ++s) {
                for (int a = 0; a < model.num_actions; ++a) probs(s, a) = unif(rng);
                probs.row(s) /= probs.row(s).sum();
            }
            Eigen::MatrixXd P = policy_transition_matrix(model, PolicyTable(probs));
            diff = P.transpose() * diff;
        }
        return diff.cwiseAbs().sum() / base;
    };

    double worst = 0.0;
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t) worst = std::max(worst, one_trial(t));
    } else {
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers) reduction(max : worst) schedule(static)
        for (int t = 0; t < trials; ++t) worst = std::max(worst, one_trial(t));
#else
        for (int t = 0; t < trials; ++t) worst = std::max(worst, one_trial(t));
#endif
    }
    return worst;
}

}  // namespace ocmdp
