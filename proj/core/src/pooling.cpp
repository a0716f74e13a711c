#include <vector>

#include "u2net/ops.hpp"
#include "u2net/parallel.hpp"

namespace u2net {

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& input) {
    if (input.rank() != 4)
        throw ConfigError("maxpool2: input must be NCHW, got " + shape_str(input.shape()));
    const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h < 1 || w < 1) throw ConfigError("maxpool2: empty spatial extent");
    const std::int64_t oh = (h + 1) / 2;
    const std::int64_t ow = (w + 1) / 2;

    const auto in = input.values();
    std::vector<T> out(static_cast<std::size_t>(n * c * oh * ow));
    // Flat input index of the max per output site, for gradient routing.
    auto argmax = std::make_shared<std::vector<std::int64_t>>(out.size());

    const std::int64_t planes = n * c;
#pragma omp parallel for schedule(static) if (planes > 1 && thread_count() > 1)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const T* src = in.data() + pl * h * w;
        T* dst = out.data() + pl * oh * ow;
        std::int64_t* amax = argmax->data() + pl * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t y0 = oy * 2, x0 = ox * 2;
                const std::int64_t y1 = std::min(y0 + 2, h), x1 = std::min(x0 + 2, w);
                T best = src[y0 * w + x0];
                std::int64_t best_at = y0 * w + x0;
                for (std::int64_t y = y0; y < y1; ++y)
                    for (std::int64_t x = x0; x < x1; ++x) {
                        const T v = src[y * w + x];
                        if (v > best) { best = v; best_at = y * w + x; }
                    }
                dst[oy * ow + ox] = best;
                amax[oy * ow + ox] = pl * h * w + best_at;
            }
        }
    }

    Tensor<T> in_t = input;
    return detail::make_result<T>(
        Shape{n, c, oh, ow}, std::move(out), {input},
        [in_t, argmax](detail::TensorNode<T>& node) mutable {
            if (!in_t.requires_grad()) return;
            auto gin = in_t.grad();
            const auto& gout = node.grad;
            for (std::size_t i = 0; i < gout.size(); ++i)
                gin[static_cast<std::size_t>((*argmax)[i])] += gout[i];
        });
}

template Tensor<float> maxpool2<float>(const Tensor<float>&);
template Tensor<double> maxpool2<double>(const Tensor<double>&);

} // namespace u2net
