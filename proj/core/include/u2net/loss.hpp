#ifndef U2NET_LOSS_HPP
#define U2NET_LOSS_HPP

#include <array>

#include "u2net/network.hpp"
#include "u2net/ops.hpp"

namespace u2net {

// Deep-supervision weights: one per side map plus one for the fused map.
// All default to 1.
struct LossWeights {
    std::array<double, 6> side{1, 1, 1, 1, 1, 1};
    double fuse = 1;
};

// Weighted sum of seven binary cross-entropy terms, one per side map and
// one for the fused map, each in the requested normalization mode. When
// `terms` is given it receives the seven unweighted term values
// (s1..s6 then fused) for diagnostics.
template <typename T>
Tensor<T> total_loss(const SaliencyOutputs<T>& outputs, const Tensor<T>& ground_truth,
                     const LossWeights& weights, LossReduction mode,
                     std::array<double, 7>* terms = nullptr);

} // namespace u2net

#endif
