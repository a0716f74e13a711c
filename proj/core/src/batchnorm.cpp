#include <cmath>
#include <vector>

#include "u2net/ops.hpp"
#include "u2net/parallel.hpp"

namespace u2net {

template <typename T>
BatchNorm2d<T> BatchNorm2d<T>::make(std::int64_t channels) {
    BatchNorm2d<T> bn;
    bn.gamma = Tensor<T>::full(Shape{channels}, T(1), true);
    bn.beta = Tensor<T>::zeros(Shape{channels}, true);
    bn.running_mean.assign(static_cast<std::size_t>(channels), T(0));
    bn.running_var.assign(static_cast<std::size_t>(channels), T(1));
    return bn;
}

template struct BatchNorm2d<float>;
template struct BatchNorm2d<double>;

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, BatchNorm2d<T>& params) {
    if (input.rank() != 4)
        throw ConfigError("batchnorm2d: input must be NCHW, got " + shape_str(input.shape()));
    const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (c != params.gamma.dim(0))
        throw ConfigError("batchnorm2d: channel count " + std::to_string(c) +
                          " != parameter channels " + std::to_string(params.gamma.dim(0)));
    const std::int64_t hw = h * w;
    const std::int64_t red = n * hw; // reduction size per channel

    const auto in = input.values();
    const auto gv = params.gamma.values();
    const auto bv = params.beta.values();

    const bool training = params.training;
    auto xhat = std::make_shared<std::vector<T>>(in.size());
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(c));
    std::vector<T> out(in.size());

#pragma omp parallel for schedule(static) if (c > 1 && thread_count() > 1)
    for (std::int64_t ch = 0; ch < c; ++ch) {
        T mean, var;
        if (training) {
            T sum = T(0);
            for (std::int64_t img = 0; img < n; ++img) {
                const T* p = in.data() + (img * c + ch) * hw;
                for (std::int64_t i = 0; i < hw; ++i) sum += p[i];
            }
            mean = sum / static_cast<T>(red);
            T sq = T(0);
            for (std::int64_t img = 0; img < n; ++img) {
                const T* p = in.data() + (img * c + ch) * hw;
                for (std::int64_t i = 0; i < hw; ++i) {
                    const T d = p[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / static_cast<T>(red); // biased, used for normalization
            const T m = params.momentum;
            params.running_mean[ch] = (T(1) - m) * params.running_mean[ch] + m * mean;
            const T var_unbiased = red > 1 ? sq / static_cast<T>(red - 1) : var;
            params.running_var[ch] = (T(1) - m) * params.running_var[ch] + m * var_unbiased;
        } else {
            mean = params.running_mean[static_cast<std::size_t>(ch)];
            var = params.running_var[static_cast<std::size_t>(ch)];
        }
        const T istd = T(1) / std::sqrt(var + params.eps);
        (*inv_std)[static_cast<std::size_t>(ch)] = istd;
        const T g = gv[static_cast<std::size_t>(ch)];
        const T b = bv[static_cast<std::size_t>(ch)];
        for (std::int64_t img = 0; img < n; ++img) {
            const T* p = in.data() + (img * c + ch) * hw;
            T* xh = xhat->data() + (img * c + ch) * hw;
            T* o = out.data() + (img * c + ch) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
                xh[i] = (p[i] - mean) * istd;
                o[i] = g * xh[i] + b;
            }
        }
    }

    Tensor<T> in_t = input;
    Tensor<T> gamma = params.gamma;
    Tensor<T> beta = params.beta;
    return detail::make_result<T>(
        input.shape(), std::move(out), {input, params.gamma, params.beta},
        [in_t, gamma, beta, xhat, inv_std, n, c, hw, red, training]
        (detail::TensorNode<T>& node) mutable {
            const auto& gout = node.grad;
            const auto gv = gamma.values();

            std::span<T> gin, ggamma, gbeta;
            const bool need_in = in_t.requires_grad();
            if (need_in) gin = in_t.grad();
            if (gamma.requires_grad()) ggamma = gamma.grad();
            if (beta.requires_grad()) gbeta = beta.grad();

#pragma omp parallel for schedule(static) if (c > 1 && thread_count() > 1)
            for (std::int64_t ch = 0; ch < c; ++ch) {
                T sum_dy = T(0), sum_dy_xh = T(0);
                for (std::int64_t img = 0; img < n; ++img) {
                    const T* dy = gout.data() + (img * c + ch) * hw;
                    const T* xh = xhat->data() + (img * c + ch) * hw;
                    for (std::int64_t i = 0; i < hw; ++i) {
                        sum_dy += dy[i];
                        sum_dy_xh += dy[i] * xh[i];
                    }
                }
                if (!ggamma.empty()) ggamma[ch] += sum_dy_xh;
                if (!gbeta.empty()) gbeta[ch] += sum_dy;
                if (!need_in) continue;

                const T g = gv[static_cast<std::size_t>(ch)];
                const T istd = (*inv_std)[static_cast<std::size_t>(ch)];
                if (training) {
                    // Batch statistics depend on x: subtract the mean paths.
                    const T mean_dy = sum_dy / static_cast<T>(red);
                    const T mean_dy_xh = sum_dy_xh / static_cast<T>(red);
                    for (std::int64_t img = 0; img < n; ++img) {
                        const T* dy = gout.data() + (img * c + ch) * hw;
                        const T* xh = xhat->data() + (img * c + ch) * hw;
                        T* gi = gin.data() + (img * c + ch) * hw;
                        for (std::int64_t i = 0; i < hw; ++i)
                            gi[i] += g * istd * (dy[i] - mean_dy - xh[i] * mean_dy_xh);
                    }
                } else {
                    for (std::int64_t img = 0; img < n; ++img) {
                        const T* dy = gout.data() + (img * c + ch) * hw;
                        T* gi = gin.data() + (img * c + ch) * hw;
                        for (std::int64_t i = 0; i < hw; ++i) gi[i] += g * istd * dy[i];
                    }
                }
            }
        });
}

template Tensor<float> batchnorm2d<float>(const Tensor<float>&, BatchNorm2d<float>&);
template Tensor<double> batchnorm2d<double>(const Tensor<double>&, BatchNorm2d<double>&);

} // namespace u2net
