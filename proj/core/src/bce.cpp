#include <cmath>
#include <vector>

#include "u2net/ops.hpp"

namespace u2net {

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target, LossReduction reduction) {
    if (pred.shape() != target.shape())
        throw ConfigError("bce_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                          shape_str(target.shape()));
    const auto pv = pred.values();
    const auto gv = target.values();
    const T lo = static_cast<T>(kBceClamp);
    const T hi = T(1) - static_cast<T>(kBceClamp);

    T sum = T(0);
    for (std::size_t i = 0; i < pv.size(); ++i) {
        T p = pv[i]; // NaN predictions stay NaN so divergence is reportable
        if (p < lo) p = lo;
        else if (p > hi) p = hi;
        const T g = gv[i];
        sum -= g * std::log(p) + (T(1) - g) * std::log(T(1) - p);
    }
    const auto count = static_cast<T>(pv.size());
    const T value = reduction == LossReduction::mean ? sum / count : sum;

    Tensor<T> p_t = pred, g_t = target;
    return detail::make_result<T>(
        Shape{1}, {value}, {pred, target},
        [p_t, g_t, lo, hi, count, reduction](detail::TensorNode<T>& node) mutable {
            if (!p_t.requires_grad()) return;
            auto gin = p_t.grad();
            const auto pv = p_t.values();
            const auto gv = g_t.values();
            T gout = node.grad[0];
            if (reduction == LossReduction::mean) gout /= count;
            for (std::size_t i = 0; i < pv.size(); ++i) {
                // Zero slope where the clamp is active.
                if (pv[i] < lo || pv[i] > hi) continue;
                const T p = pv[i];
                const T g = gv[i];
                gin[i] += gout * (-g / p + (T(1) - g) / (T(1) - p));
            }
        });
}

template Tensor<float> bce_loss<float>(const Tensor<float>&, const Tensor<float>&, LossReduction);
template Tensor<double> bce_loss<double>(const Tensor<double>&, const Tensor<double>&, LossReduction);

} // namespace u2net
