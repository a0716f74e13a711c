#include <cmath>
#include <limits>
#include <vector>

#include "u2net/ops.hpp"

namespace u2net {

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    const auto in = x.values();
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);

    Tensor<T> x_t = x;
    return detail::make_result<T>(
        x.shape(), std::move(out), {x},
        [x_t](detail::TensorNode<T>& node) mutable {
            if (!x_t.requires_grad()) return;
            auto gin = x_t.grad();
            const auto xin = x_t.values();
            const auto& gout = node.grad;
            for (std::size_t i = 0; i < gout.size(); ++i)
                if (xin[i] > T(0)) gin[i] += gout[i];
        });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    const auto in = x.values();
    std::vector<T> out(in.size());
    // Nudge saturated outputs off the interval ends so downstream logs and
    // the (0,1) invariant stay valid in the storage precision. The clamp
    // comparisons let a NaN input stay NaN instead of laundering it.
    const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
    const T lo = std::numeric_limits<T>::min();
    for (std::size_t i = 0; i < in.size(); ++i) {
        T v = T(1) / (T(1) + std::exp(-in[i]));
        if (v < lo) v = lo;
        else if (v > hi) v = hi;
        out[i] = v;
    }

    auto saved = std::make_shared<std::vector<T>>(out);
    Tensor<T> x_t = x;
    return detail::make_result<T>(
        x.shape(), std::move(out), {x},
        [x_t, saved](detail::TensorNode<T>& node) mutable {
            if (!x_t.requires_grad()) return;
            auto gin = x_t.grad();
            const auto& gout = node.grad;
            for (std::size_t i = 0; i < gout.size(); ++i) {
                const T s = (*saved)[i];
                gin[i] += gout[i] * s * (T(1) - s);
            }
        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ConfigError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];

    Tensor<T> a_t = a, b_t = b;
    return detail::make_result<T>(
        a.shape(), std::move(out), {a, b},
        [a_t, b_t](detail::TensorNode<T>& node) mutable {
            const auto& gout = node.grad;
            if (a_t.requires_grad()) {
                auto g = a_t.grad();
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += gout[i];
            }
            if (b_t.requires_grad()) {
                auto g = b_t.grad();
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += gout[i];
            }
        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ConfigError("mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];

    Tensor<T> a_t = a, b_t = b;
    return detail::make_result<T>(
        a.shape(), std::move(out), {a, b},
        [a_t, b_t](detail::TensorNode<T>& node) mutable {
            const auto& gout = node.grad;
            if (a_t.requires_grad()) {
                auto g = a_t.grad();
                const auto bv2 = b_t.values();
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += gout[i] * bv2[i];
            }
            if (b_t.requires_grad()) {
                auto g = b_t.grad();
                const auto av2 = a_t.values();
                for (std::size_t i = 0; i < gout.size(); ++i) g[i] += gout[i] * av2[i];
            }
        });
}

template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, const std::vector<T>& w) {
    if (static_cast<std::int64_t>(w.size()) != x.numel())
        throw ConfigError("weighted_sum: weight count != element count");
    const auto xv = x.values();
    T acc = T(0);
    for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * w[i];

    auto wp = std::make_shared<std::vector<T>>(w);
    Tensor<T> x_t = x;
    return detail::make_result<T>(
        Shape{1}, {acc}, {x},
        [x_t, wp](detail::TensorNode<T>& node) mutable {
            if (!x_t.requires_grad()) return;
            auto gin = x_t.grad();
            const T g = node.grad[0];
            for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += g * (*wp)[i];
        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
    const auto xv = x.values();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * factor;

    Tensor<T> x_t = x;
    return detail::make_result<T>(
        x.shape(), std::move(out), {x},
        [x_t, factor](detail::TensorNode<T>& node) mutable {
            if (!x_t.requires_grad()) return;
            auto gin = x_t.grad();
            const auto& gout = node.grad;
            for (std::size_t i = 0; i < gout.size(); ++i) gin[i] += gout[i] * factor;
        });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 4 || b.rank() != 4)
        throw ConfigError("concat_channels: inputs must be NCHW");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
        throw ConfigError("concat_channels: N/H/W mismatch " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
    const std::int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::int64_t hw = a.dim(2) * a.dim(3);

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<T> out(static_cast<std::size_t>(n * (ca + cb) * hw));
    for (std::int64_t img = 0; img < n; ++img) {
        T* dst = out.data() + img * (ca + cb) * hw;
        std::copy_n(av.data() + img * ca * hw, ca * hw, dst);
        std::copy_n(bv.data() + img * cb * hw, cb * hw, dst + ca * hw);
    }

    Tensor<T> a_t = a, b_t = b;
    return detail::make_result<T>(
        Shape{n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b},
        [a_t, b_t, n, ca, cb, hw](detail::TensorNode<T>& node) mutable {
            const auto& gout = node.grad;
            for (std::int64_t img = 0; img < n; ++img) {
                const T* src = gout.data() + img * (ca + cb) * hw;
                if (a_t.requires_grad()) {
                    auto g = a_t.grad();
                    T* dst = g.data() + img * ca * hw;
                    for (std::int64_t i = 0; i < ca * hw; ++i) dst[i] += src[i];
                }
                if (b_t.requires_grad()) {
                    auto g = b_t.grad();
                    T* dst = g.data() + img * cb * hw;
                    for (std::int64_t i = 0; i < cb * hw; ++i) dst[i] += src[ca * hw + i];
                }
            }
        });
}

#define U2NET_INSTANTIATE(T)                                                       \
    template Tensor<T> relu<T>(const Tensor<T>&);                                  \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                               \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> weighted_sum<T>(const Tensor<T>&, const std::vector<T>&);   \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                              \
    template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);

U2NET_INSTANTIATE(float)
U2NET_INSTANTIATE(double)
#undef U2NET_INSTANTIATE

} // namespace u2net
