#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace refpred {

// Worker budget for all parallel loops. 0 means hardware default.
void set_max_threads(int n);
int max_threads();

namespace detail {
inline int& thread_budget() {
    static int budget = 0;
    return budget;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::thread_budget() = n < 0 ? 0 : n; }

inline int max_threads() {
#ifdef _OPENMP
    const int budget = detail::thread_budget();
    return budget > 0 ? budget : omp_get_max_threads();
#else
    return 1;
#endif
}

// Index-parallel loop. Each index is visited exactly once and body(i) must
// write only to state owned by index i, so the result is schedule-independent.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& body) {
#ifdef _OPENMP
    if (n > 1 && max_threads() > 1 && !omp_in_parallel()) {
#pragma omp parallel for schedule(static) num_threads(max_threads())
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

inline constexpr std::size_t kReduceBlock = 2048;

// Deterministic parallel sum: the index space is cut into fixed-size blocks,
// each block is summed serially, and block results are combined in block
// order. The result is bit-identical for any thread count.
template <typename Fn>
double blocked_sum(std::size_t n, Fn&& term) {
    if (n == 0) return 0.0;
    const std::size_t n_blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(n_blocks, 0.0);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::size_t lo = b * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[b] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// Deterministic vector accumulation with the same blocked scheme:
// body(i, acc) adds row i's contribution into acc[0..dim).
template <typename Fn>
void blocked_accumulate(std::size_t n, std::size_t dim, Fn&& body, double* out) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = 0.0;
    if (n == 0) return;
    const std::size_t n_blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(n_blocks * dim, 0.0);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::size_t lo = b * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        double* acc = partial.data() + b * dim;
        for (std::size_t i = lo; i < hi; ++i) body(i, acc);
    });
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double* acc = partial.data() + b * dim;
        for (std::size_t j = 0; j < dim; ++j) out[j] += acc[j];
    }
}

}  // namespace refpred
