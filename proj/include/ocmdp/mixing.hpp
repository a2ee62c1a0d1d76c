#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ocmdp/model.hpp"

namespace ocmdp {

/// Result of the uniform-mixing scan.  When `estimate` is empty the model
/// failed: `witness` holds a pure-policy sequence (one action map per step)
/// whose r_max-step product still has a zero entry.
struct UnichainResult {
    std::optional<MixingEstimate> estimate;
    std::vector<std::vector<int>> witness;  // policy sequence, outer index = step
    bool exhaustive = false;                // whether the scan covered every sequence
};

/// Scans r = 1..r_max for the first block length at which every product of r
/// pure-policy transition matrices is entrywise positive.  Sequences are
/// enumerated exhaustively while |A|^(|S| r) <= enumeration_cap and sampled
/// (sample_count draws) beyond that.  delta = |S| * min scanned entry.
UnichainResult check_unichain(const MdpModel& model, int r_max = 8,
                              long enumeration_cap = 1000000,
                              int sample_count = 10000,
                              std::uint64_t sample_seed = 0);

/// Monte Carlo check of the r-step l1 contraction guarantee: draws random
/// distribution pairs and random *randomized* policy sequences of length
/// est.r, and returns the maximum observed contraction ratio
/// ||(d1 - d2) P_1 ... P_r||_1 / ||d1 - d2||_1.  The guarantee is
/// ratio <= est.contraction_factor() + 1e-12 whenever est came from an
/// exhaustive scan.  workers = 1 runs the serial reference path; the parallel
/// path partitions trials by index and is seed-stable.
double mixing_contraction_check(const MdpModel& model, const MixingEstimate& est,
                                int trials = 1000, std::uint64_t seed = 0,
                                int workers = 1);

}  // namespace ocmdp
