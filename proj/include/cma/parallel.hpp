#pragma once

#include <atomic>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cma {

// Batch kernels (boundary scans, extrapolation ladders, verification sweeps)
// write into preallocated slots, so results are bit-identical whether they run
// on the OpenMP path or the serial reference path. The switch is global and
// can be driven from the CLI; tests compare both paths.
inline std::atomic<bool>& parallel_flag() {
    static std::atomic<bool> enabled{true};
    return enabled;
}

inline bool parallel_enabled() { return parallel_flag().load(std::memory_order_relaxed); }
inline void set_parallel_enabled(bool on) { parallel_flag().store(on, std::memory_order_relaxed); }

// Serial reference implementation, kept as the comparison baseline.
template <class F> void serial_for(int n, F&& body) {
    for (int i = 0; i < n; ++i) body(i);
}

// OpenMP kernel. Exceptions cannot cross the parallel region, so the first
// one is captured and rethrown after the join.
template <class F> void parallel_for(int n, F&& body) {
#ifdef _OPENMP
    if (parallel_enabled() && n > 1) {
        std::exception_ptr first;
        std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                body(i);
            } catch (...) {
                if (!failed.exchange(true)) first = std::current_exception();
            }
        }
        if (first) std::rethrow_exception(first);
        return;
    }
#endif
    serial_for(n, body);
}

} // namespace cma
