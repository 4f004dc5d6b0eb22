// OpenMP-backed parallel loop with a serial reference path.
//
// Every call site writes result i into a preallocated slot, so the output is
// bit-identical whether the loop runs serially (jobs == 1) or on the OpenMP
// path. Tests exercise both paths against each other; bench/ times them.
#pragma once

#include <cstddef>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sess {

/// Number of workers used when jobs <= 0 is requested.
inline int default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs f(i) for i in [0, n). jobs == 1 selects the serial reference path;
/// jobs <= 0 means "all cores". Iterations must be independent.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    if (jobs <= 0) jobs = default_jobs();
#ifdef _OPENMP
    if (jobs > 1 && n > 1) {
        const auto in = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
        for (std::int64_t i = 0; i < in; ++i) {
            f(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) f(i);
}

} // namespace sess
