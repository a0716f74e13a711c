#ifndef U2NET_OPS_HPP
#define U2NET_OPS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "u2net/tensor.hpp"

namespace u2net {

// ---------------------------------------------------------------------------
// Convolution

struct Conv2dOpts {
    int stride = 1;
    int padding = 0;
    int dilation = 1;
};

// Cross-correlation of an NCHW input with OIHW weights.
//   H_out = floor((H + 2*padding - dilation*(k-1) - 1) / stride) + 1
// Differentiable w.r.t. input, weight and bias. Accumulation per output
// site runs in (channel, kh, kw) order with the bias seeding the sum, so
// 64-bit results are bit-identical to a direct nested-loop evaluation.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const std::optional<Tensor<T>>& bias, const Conv2dOpts& opts);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Conv2dOpts& opts) {
    return conv2d(input, weight, std::optional<Tensor<T>>{}, opts);
}

// ---------------------------------------------------------------------------
// Pooling / resampling

// 2x2 max pooling, stride 2, ceiling mode: H_out = ceil(H/2). Windows that
// stick out take the max over in-bounds entries only. Gradient routes to
// the first argmax in row-major order.
template <typename T>
Tensor<T> maxpool2(const Tensor<T>& input);

// Bilinear resize to (out_h, out_w) with half-pixel centers:
//   src = (dst + 0.5) * in/out - 0.5, clamped to [0, in-1].
// Gradient is the transposed interpolation.
template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& input, std::int64_t out_h, std::int64_t out_w);

// ---------------------------------------------------------------------------
// Structure

// Channel concatenation of two NCHW tensors agreeing on N, H, W.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> relu(const Tensor<T>& x); // subgradient at 0 is 0

// Strictly inside (0,1): saturated outputs are nudged to the nearest
// representable value inside the open interval.
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// Hadamard product of equal-shape tensors.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

// Sum of x * w with w held constant (test/loss helper).
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, const std::vector<T>& w);

// a + scale * b as a scalar combination (loss assembly helper).
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
struct BatchNorm2d {
    Tensor<T> gamma;                // [C], trainable
    Tensor<T> beta;                 // [C], trainable
    std::vector<T> running_mean;    // [C]
    std::vector<T> running_var;     // [C]
    T momentum = T(0.1);
    T eps = T(1e-5);
    bool training = true;

    static BatchNorm2d make(std::int64_t channels);
};

// Training mode normalizes by batch statistics over (N,H,W) per channel and
// folds them into the running estimates; inference mode uses the running
// estimates. Differentiable w.r.t. input, gamma, beta.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, BatchNorm2d<T>& params);

// ---------------------------------------------------------------------------
// Loss

enum class LossReduction { sum, mean };

// Binary cross-entropy between probabilities and a {0,1} target:
//   sum form: -sum(G log P + (1-G) log(1-P))
// with P clamped to [1e-7, 1-1e-7] before the logs. The mean form divides
// by the element count.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   LossReduction reduction = LossReduction::sum);

inline constexpr double kBceClamp = 1e-7;

} // namespace u2net

#endif
