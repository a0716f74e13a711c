#include <algorithm>
#include <cmath>
#include <vector>

#include "u2net/ops.hpp"
#include "u2net/parallel.hpp"

namespace u2net {

namespace {

// Per-axis source taps for half-pixel-center bilinear mapping.
struct AxisTap {
    std::int64_t lo, hi;
    double w_hi; // weight of hi; lo gets 1 - w_hi
};

std::vector<AxisTap> axis_taps(std::int64_t in, std::int64_t out) {
    std::vector<AxisTap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t d = 0; d < out; ++d) {
        double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto lo = static_cast<std::int64_t>(std::floor(src));
        const auto hi = std::min(lo + 1, in - 1);
        taps[static_cast<std::size_t>(d)] = {lo, hi, src - static_cast<double>(lo)};
    }
    return taps;
}

} // namespace

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& input, std::int64_t out_h, std::int64_t out_w) {
    if (input.rank() != 4)
        throw ConfigError("upsample_bilinear: input must be NCHW, got " + shape_str(input.shape()));
    if (out_h < 1 || out_w < 1)
        throw ConfigError("upsample_bilinear: target size must be at least 1x1");
    const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);

    const auto ytaps = std::make_shared<std::vector<AxisTap>>(axis_taps(h, out_h));
    const auto xtaps = std::make_shared<std::vector<AxisTap>>(axis_taps(w, out_w));

    const auto in = input.values();
    std::vector<T> out(static_cast<std::size_t>(n * c * out_h * out_w));
    const std::int64_t planes = n * c;
#pragma omp parallel for schedule(static) if (planes > 1 && thread_count() > 1)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const T* src = in.data() + pl * h * w;
        T* dst = out.data() + pl * out_h * out_w;
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
            const auto& ty = (*ytaps)[static_cast<std::size_t>(oy)];
            const T wy1 = static_cast<T>(ty.w_hi), wy0 = T(1) - wy1;
            const T* r0 = src + ty.lo * w;
            const T* r1 = src + ty.hi * w;
            for (std::int64_t ox = 0; ox < out_w; ++ox) {
                const auto& tx = (*xtaps)[static_cast<std::size_t>(ox)];
                const T wx1 = static_cast<T>(tx.w_hi), wx0 = T(1) - wx1;
                dst[oy * out_w + ox] =
                    wy0 * (wx0 * r0[tx.lo] + wx1 * r0[tx.hi]) +
                    wy1 * (wx0 * r1[tx.lo] + wx1 * r1[tx.hi]);
            }
        }
    }

    Tensor<T> in_t = input;
    return detail::make_result<T>(
        Shape{n, c, out_h, out_w}, std::move(out), {input},
        [in_t, ytaps, xtaps, h, w, out_h, out_w](detail::TensorNode<T>& node) mutable {
            if (!in_t.requires_grad()) return;
            auto gin = in_t.grad();
            const auto& gout = node.grad;
            const std::int64_t planes = in_t.dim(0) * in_t.dim(1);
#pragma omp parallel for schedule(static) if (planes > 1 && thread_count() > 1)
            for (std::int64_t pl = 0; pl < planes; ++pl) {
                T* gsrc = gin.data() + pl * h * w;
                const T* gdst = gout.data() + pl * out_h * out_w;
                for (std::int64_t oy = 0; oy < out_h; ++oy) {
                    const auto& ty = (*ytaps)[static_cast<std::size_t>(oy)];
                    const T wy1 = static_cast<T>(ty.w_hi), wy0 = T(1) - wy1;
                    for (std::int64_t ox = 0; ox < out_w; ++ox) {
                        const auto& tx = (*xtaps)[static_cast<std::size_t>(ox)];
                        const T wx1 = static_cast<T>(tx.w_hi), wx0 = T(1) - wx1;
                        const T g = gdst[oy * out_w + ox];
                        gsrc[ty.lo * w + tx.lo] += wy0 * wx0 * g;
                        gsrc[ty.lo * w + tx.hi] += wy0 * wx1 * g;
                        gsrc[ty.hi * w + tx.lo] += wy1 * wx0 * g;
                        gsrc[ty.hi * w + tx.hi] += wy1 * wx1 * g;
                    }
                }
            }
        });
}

template Tensor<float> upsample_bilinear<float>(const Tensor<float>&, std::int64_t, std::int64_t);
template Tensor<double> upsample_bilinear<double>(const Tensor<double>&, std::int64_t, std::int64_t);

} // namespace u2net
