#include "u2net/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace u2net {

namespace {

int g_override = 0;

int default_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("U2_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

} // namespace

int thread_count() {
    if (g_override > 0) return g_override;
    static const int n = default_threads();
    return n;
}

void set_thread_count(int n) {
    g_override = n > 0 ? n : 0;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

} // namespace u2net
