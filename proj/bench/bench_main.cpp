// Times the OpenMP pools against the serial reference paths on identical
// workloads and confirms the outputs match bit for bit.  Two kernels carry a
// workers knob: the horizon sweep (parallel unit = one (T, seed) run) and the
// Monte Carlo mixing check (parallel unit = a block of trials).
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "ocmdp/harness.hpp"
#include "ocmdp/mixing.hpp"

using namespace ocmdp;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s %10.3fs %12.3fs %9.2fx   %s\n", name, serial_s, parallel_s,
                serial_s / parallel_s, identical ? "outputs identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int scale = 1;
    if (argc > 1) scale = std::max(1, std::atoi(argv[1]));
    const int threads = omp_get_max_threads();
    std::printf("OpenMP max threads: %d   workload scale: %d\n\n", threads, scale);
    std::printf("%-22s %11s %13s %10s\n", "kernel", "serial", "parallel",
                "speedup");

    Scenario scn = reference_scenario();
    bool all_match = true;

    {
        const std::vector<long> horizons{200L * scale, 400L * scale, 800L * scale};
        const int seeds = 6;
        auto t0 = clock_type::now();
        SweepResult serial = sweep_horizons(scn, horizons, seeds, 1);
        const double serial_s = seconds_since(t0);
        t0 = clock_type::now();
        SweepResult pooled = sweep_horizons(scn, horizons, seeds, threads);
        const double parallel_s = seconds_since(t0);
        const bool identical = serial.json() == pooled.json();
        all_match = all_match && identical;
        report("horizon sweep", serial_s, parallel_s, identical);
    }

    {
        const int trials = 20000 * scale;
        const MdpModel& model = scn.models[0];
        UnichainResult unichain = check_unichain(model);
        if (!unichain.estimate) {
            std::fprintf(stderr, "reference model lost its mixing certificate\n");
            return 1;
        }
        auto t0 = clock_type::now();
        const double serial_ratio =
            mixing_contraction_check(model, *unichain.estimate, trials, 7, 1);
        const double serial_s = seconds_since(t0);
        t0 = clock_type::now();
        const double pooled_ratio =
            mixing_contraction_check(model, *unichain.estimate, trials, 7, threads);
        const double parallel_s = seconds_since(t0);
        const bool identical = serial_ratio == pooled_ratio;
        all_match = all_match && identical;
        report("mixing monte carlo", serial_s, parallel_s, identical);
    }

    if (!all_match) {
        std::printf("\nFAIL: a parallel path diverged from its serial reference\n");
        return 1;
    }
    std::printf("\nall parallel outputs equal their serial references\n");
    return 0;
}
