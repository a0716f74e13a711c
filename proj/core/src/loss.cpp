#include "u2net/loss.hpp"

namespace u2net {

template <typename T>
Tensor<T> total_loss(const SaliencyOutputs<T>& outputs, const Tensor<T>& ground_truth,
                     const LossWeights& weights, LossReduction mode,
                     std::array<double, 7>* terms) {
    Tensor<T> total;
    auto accumulate = [&](const Tensor<T>& prob, double w, int slot) {
        Tensor<T> term = bce_loss(prob, ground_truth, mode);
        if (terms) (*terms)[static_cast<std::size_t>(slot)] = static_cast<double>(term.item());
        if (w != 1.0) term = scale(term, static_cast<T>(w));
        total = total.defined() ? add(total, term) : term;
    };
    for (int i = 0; i < 6; ++i)
        accumulate(outputs.side_probs[static_cast<std::size_t>(i)], weights.side[static_cast<std::size_t>(i)], i);
    accumulate(outputs.fused_prob, weights.fuse, 6);
    return total;
}

template Tensor<float> total_loss<float>(const SaliencyOutputs<float>&, const Tensor<float>&,
                                         const LossWeights&, LossReduction, std::array<double, 7>*);
template Tensor<double> total_loss<double>(const SaliencyOutputs<double>&, const Tensor<double>&,
                                           const LossWeights&, LossReduction, std::array<double, 7>*);

} // namespace u2net
