#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ocmdp {

/// Worker count for parallel kernels: OCMDP_WORKERS if set (>=1), otherwise
/// the OpenMP default.  A value of 1 selects the serial reference path.
inline int worker_count() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("OCMDP_WORKERS")) {
        try {
            int v = std::stoi(env);
            if (v >= 1) n = v;
        } catch (...) {
            // Malformed values fall back to the default.
        }
    }
    return n;
}

}  // namespace ocmdp
