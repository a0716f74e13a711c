#ifndef U2NET_PARALLEL_HPP
#define U2NET_PARALLEL_HPP

namespace u2net {

// Number of worker threads used by the compute kernels. Defaults to the
// hardware concurrency, capped by the U2_THREADS environment variable when
// set. All kernels partition work so that every output element is written
// by exactly one thread; results do not depend on the thread count.
int thread_count();

// Override the thread cap programmatically (0 = reset to default).
void set_thread_count(int n);

} // namespace u2net

#endif
