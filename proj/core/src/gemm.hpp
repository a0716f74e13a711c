#ifndef U2NET_SRC_GEMM_HPP
#define U2NET_SRC_GEMM_HPP

#include <cstdint>

// Internal row-major matrix kernels backing conv2d. Accumulation over the
// inner dimension is strictly ascending for every output element, so results
// are identical for any thread count and match a plain nested-loop oracle
// (the build disables FP contraction).
namespace u2net::detail {

// C[m][n] += sum_k A[m][k] * B[k][n]
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k,
             const T* a, const T* b, T* c);

// C[m][n] += sum_k A[m][k] * B[n][k]
template <typename T>
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k,
             const T* a, const T* b, T* c);

} // namespace u2net::detail

#endif
