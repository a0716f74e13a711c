#ifndef U2NET_AUGMENT_HPP
#define U2NET_AUGMENT_HPP

#include "u2net/rng.hpp"
#include "u2net/tensor.hpp"

namespace u2net {

// One training example: image 1x3xHxW in [0,1] and mask 1x1xHxW in {0,1},
// spatially aligned.
template <typename T>
struct SamplePair {
    Tensor<T> image;
    Tensor<T> mask;
};

enum class FlipMode { none, vertical, horizontal };

struct AugmentConfig {
    std::int64_t resize = 320;
    std::int64_t crop = 288;
    FlipMode flip = FlipMode::vertical;
    double flip_prob = 0.5;
};

// Plain (non-differentiable) value transforms shared by the pipeline.
template <typename T>
Tensor<T> resize_bilinear_value(const Tensor<T>& x, std::int64_t h, std::int64_t w);
template <typename T>
Tensor<T> resize_nearest_value(const Tensor<T>& x, std::int64_t h, std::int64_t w);
template <typename T>
Tensor<T> flip_vertical(const Tensor<T>& x);
template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& x);
template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t y0, std::int64_t x0,
               std::int64_t h, std::int64_t w);

// Resize both to the square resize size (image bilinear, mask nearest so it
// stays binary), flip with the configured probability (one decision applied
// to both), then take a uniform random crop at identical offsets.
template <typename T>
SamplePair<T> augment(const SamplePair<T>& sample, const AugmentConfig& cfg, Rng& rng);

} // namespace u2net

#endif
