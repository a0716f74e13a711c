#include "u2net/augment.hpp"

#include <algorithm>
#include <cmath>

#include "u2net/ops.hpp"

namespace u2net {

template <typename T>
Tensor<T> resize_bilinear_value(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
    NoGradGuard guard;
    return upsample_bilinear(x, h, w);
}

template <typename T>
Tensor<T> resize_nearest_value(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
    const std::int64_t n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    const auto in = x.values();
    std::vector<T> out(static_cast<std::size_t>(n * c * h * w));
    std::vector<std::int64_t> ys(static_cast<std::size_t>(h)), xs(static_cast<std::size_t>(w));
    for (std::int64_t d = 0; d < h; ++d)
        ys[static_cast<std::size_t>(d)] = std::min<std::int64_t>(
            ih - 1, static_cast<std::int64_t>(std::floor((static_cast<double>(d) + 0.5) *
                                                         static_cast<double>(ih) / static_cast<double>(h))));
    for (std::int64_t d = 0; d < w; ++d)
        xs[static_cast<std::size_t>(d)] = std::min<std::int64_t>(
            iw - 1, static_cast<std::int64_t>(std::floor((static_cast<double>(d) + 0.5) *
                                                         static_cast<double>(iw) / static_cast<double>(w))));
    for (std::int64_t pl = 0; pl < n * c; ++pl) {
        const T* src = in.data() + pl * ih * iw;
        T* dst = out.data() + pl * h * w;
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t xo = 0; xo < w; ++xo)
                dst[y * w + xo] = src[ys[static_cast<std::size_t>(y)] * iw +
                                      xs[static_cast<std::size_t>(xo)]];
    }
    return Tensor<T>::from_data(Shape{n, c, h, w}, std::move(out));
}

namespace {

template <typename T>
Tensor<T> flip_axis(const Tensor<T>& x, bool rows) {
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto in = x.values();
    std::vector<T> out(in.size());
    for (std::int64_t pl = 0; pl < n * c; ++pl) {
        const T* src = in.data() + pl * h * w;
        T* dst = out.data() + pl * h * w;
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t xo = 0; xo < w; ++xo)
                dst[y * w + xo] = rows ? src[(h - 1 - y) * w + xo] : src[y * w + (w - 1 - xo)];
    }
    return Tensor<T>::from_data(x.shape(), std::move(out));
}

} // namespace

template <typename T>
Tensor<T> flip_vertical(const Tensor<T>& x) {
    return flip_axis(x, true);
}

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& x) {
    return flip_axis(x, false);
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t y0, std::int64_t x0,
               std::int64_t h, std::int64_t w) {
    const std::int64_t n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    if (y0 < 0 || x0 < 0 || y0 + h > ih || x0 + w > iw)
        throw ConfigError("crop window out of bounds");
    const auto in = x.values();
    std::vector<T> out(static_cast<std::size_t>(n * c * h * w));
    for (std::int64_t pl = 0; pl < n * c; ++pl) {
        const T* src = in.data() + pl * ih * iw;
        T* dst = out.data() + pl * h * w;
        for (std::int64_t y = 0; y < h; ++y)
            std::copy_n(src + (y0 + y) * iw + x0, w, dst + y * w);
    }
    return Tensor<T>::from_data(Shape{n, c, h, w}, std::move(out));
}

template <typename T>
SamplePair<T> augment(const SamplePair<T>& sample, const AugmentConfig& cfg, Rng& rng) {
    if (sample.image.dim(2) < 1 || sample.image.dim(3) < 1)
        throw ConfigError("augment: empty image");
    if (sample.image.dim(2) != sample.mask.dim(2) || sample.image.dim(3) != sample.mask.dim(3))
        throw ConfigError("augment: image and mask sizes differ");
    if (cfg.crop > cfg.resize)
        throw ConfigError("augment: crop size exceeds resize size");

    SamplePair<T> out;
    out.image = resize_bilinear_value(sample.image, cfg.resize, cfg.resize);
    out.mask = resize_nearest_value(sample.mask, cfg.resize, cfg.resize);

    if (cfg.flip != FlipMode::none && rng.bernoulli(cfg.flip_prob)) {
        const bool rows = cfg.flip == FlipMode::vertical;
        out.image = rows ? flip_vertical(out.image) : flip_horizontal(out.image);
        out.mask = rows ? flip_vertical(out.mask) : flip_horizontal(out.mask);
    }

    const std::int64_t span = cfg.resize - cfg.crop;
    const std::int64_t y0 = span > 0 ? rng.uniform_int(0, span) : 0;
    const std::int64_t x0 = span > 0 ? rng.uniform_int(0, span) : 0;
    out.image = crop(out.image, y0, x0, cfg.crop, cfg.crop);
    out.mask = crop(out.mask, y0, x0, cfg.crop, cfg.crop);
    return out;
}

#define U2NET_INSTANTIATE(T)                                                               \
    template Tensor<T> resize_bilinear_value<T>(const Tensor<T>&, std::int64_t, std::int64_t); \
    template Tensor<T> resize_nearest_value<T>(const Tensor<T>&, std::int64_t, std::int64_t);  \
    template Tensor<T> flip_vertical<T>(const Tensor<T>&);                                 \
    template Tensor<T> flip_horizontal<T>(const Tensor<T>&);                               \
    template Tensor<T> crop<T>(const Tensor<T>&, std::int64_t, std::int64_t, std::int64_t, \
                               std::int64_t);                                              \
    template SamplePair<T> augment<T>(const SamplePair<T>&, const AugmentConfig&, Rng&);

U2NET_INSTANTIATE(float)
U2NET_INSTANTIATE(double)
#undef U2NET_INSTANTIATE

template struct SamplePair<float>;
template struct SamplePair<double>;

} // namespace u2net
