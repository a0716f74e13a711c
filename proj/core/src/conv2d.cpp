#include <algorithm>
#include <memory>
#include <string>

#include "gemm.hpp"
#include "u2net/ops.hpp"
#include "u2net/parallel.hpp"

namespace u2net {

namespace {

struct ConvDims {
    std::int64_t n, c_in, h, w;
    std::int64_t c_out, kh, kw;
    std::int64_t out_h, out_w;
    std::int64_t k;   // c_in * kh * kw
    std::int64_t s;   // out_h * out_w
};

ConvDims resolve_dims(const Shape& in, const Shape& wt, const Conv2dOpts& o) {
    if (in.size() != 4) throw ConfigError("conv2d: input must be NCHW, got " + shape_str(in));
    if (wt.size() != 4) throw ConfigError("conv2d: weight must be OIKK, got " + shape_str(wt));
    if (o.stride <= 0) throw ConfigError("conv2d: stride must be positive");
    if (o.dilation <= 0) throw ConfigError("conv2d: dilation must be positive");
    if (o.padding < 0) throw ConfigError("conv2d: padding must be non-negative");
    if (in[1] != wt[1])
        throw ConfigError("conv2d: input channels " + std::to_string(in[1]) +
                          " != weight input channels " + std::to_string(wt[1]));

    ConvDims d{};
    d.n = in[0]; d.c_in = in[1]; d.h = in[2]; d.w = in[3];
    d.c_out = wt[0]; d.kh = wt[2]; d.kw = wt[3];
    const std::int64_t eff_h = o.dilation * (d.kh - 1) + 1;
    const std::int64_t eff_w = o.dilation * (d.kw - 1) + 1;
    if (d.h + 2 * o.padding < eff_h || d.w + 2 * o.padding < eff_w)
        throw ConfigError("conv2d: kernel (effective " + std::to_string(eff_h) + "x" +
                          std::to_string(eff_w) + ") exceeds padded input " + shape_str(in));
    d.out_h = (d.h + 2 * o.padding - eff_h) / o.stride + 1;
    d.out_w = (d.w + 2 * o.padding - eff_w) / o.stride + 1;
    d.k = d.c_in * d.kh * d.kw;
    d.s = d.out_h * d.out_w;
    return d;
}

// Unpacks one image into a [K x S] patch matrix, rows ordered (ci, kh, kw)
// so GEMM accumulation matches the nested-loop tap order. Out-of-bounds
// taps are zero. Stride-1 rows split into zero/copy/zero segments. Every
// element of `col` is written.
template <typename T>
void im2col(const T* img, const ConvDims& d, const Conv2dOpts& o, T* col) {
#pragma omp parallel for schedule(static) if (d.k * d.s > 16384 && thread_count() > 1)
    for (std::int64_t row = 0; row < d.k; ++row) {
        const std::int64_t ci = row / (d.kh * d.kw);
        const std::int64_t rem = row % (d.kh * d.kw);
        const std::int64_t ky = rem / d.kw;
        const std::int64_t kx = rem % d.kw;
        const T* plane = img + ci * d.h * d.w;
        T* out = col + row * d.s;
        const std::int64_t x_off = kx * o.dilation - o.padding;
        const std::int64_t ox_lo = std::max<std::int64_t>(0, -x_off);
        const std::int64_t ox_hi = std::min(d.out_w, d.w - x_off);
        for (std::int64_t oy = 0; oy < d.out_h; ++oy) {
            const std::int64_t iy = oy * o.stride - o.padding + ky * o.dilation;
            if (iy < 0 || iy >= d.h) {
                std::fill(out, out + d.out_w, T(0));
                out += d.out_w;
                continue;
            }
            const T* src = plane + iy * d.w;
            if (o.stride == 1) {
                const std::int64_t lo = std::min(ox_lo, d.out_w);
                const std::int64_t hi = std::clamp(ox_hi, lo, d.out_w);
                std::fill(out, out + lo, T(0));
                if (hi > lo) std::copy(src + lo + x_off, src + hi + x_off, out + lo);
                std::fill(out + hi, out + d.out_w, T(0));
                out += d.out_w;
            } else {
                for (std::int64_t ox = 0; ox < d.out_w; ++ox) {
                    const std::int64_t ix = ox * o.stride + x_off;
                    *out++ = (ix >= 0 && ix < d.w) ? src[ix] : T(0);
                }
            }
        }
    }
}

// Scatter-adds a [K x S] patch-gradient matrix back into one image; the
// generic input-gradient path for strided convolutions.
template <typename T>
void col2im_add(const T* col, const ConvDims& d, const Conv2dOpts& o, T* img) {
#pragma omp parallel for schedule(static) if (d.k * d.s > 16384 && thread_count() > 1)
    for (std::int64_t ci = 0; ci < d.c_in; ++ci) {
        T* plane = img + ci * d.h * d.w;
        for (std::int64_t ky = 0; ky < d.kh; ++ky) {
            for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                const T* src = col + ((ci * d.kh + ky) * d.kw + kx) * d.s;
                const std::int64_t x_off = kx * o.dilation - o.padding;
                const std::int64_t ox_lo = std::max<std::int64_t>(0, -x_off);
                const std::int64_t ox_hi = std::min(d.out_w, d.w - x_off);
                for (std::int64_t oy = 0; oy < d.out_h; ++oy) {
                    const std::int64_t iy = oy * o.stride - o.padding + ky * o.dilation;
                    if (iy < 0 || iy >= d.h) { src += d.out_w; continue; }
                    T* dst = plane + iy * d.w;
                    if (o.stride == 1) {
                        T* __restrict__ base = dst + x_off;
                        for (std::int64_t ox = ox_lo; ox < ox_hi; ++ox) base[ox] += src[ox];
                    } else {
                        for (std::int64_t ox = 0; ox < d.out_w; ++ox) {
                            const std::int64_t ix = ox * o.stride + x_off;
                            if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
                        }
                    }
                    src += d.out_w;
                }
            }
        }
    }
}

template <typename T>
using Scratch = std::unique_ptr<T[]>;

template <typename T>
Scratch<T> scratch(std::int64_t n) {
    return std::make_unique_for_overwrite<T[]>(static_cast<std::size_t>(n));
}

} // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const std::optional<Tensor<T>>& bias, const Conv2dOpts& opts) {
    const ConvDims d = resolve_dims(input.shape(), weight.shape(), opts);
    if (bias) {
        if (bias->rank() != 1 || bias->dim(0) != d.c_out)
            throw ConfigError("conv2d: bias must be [" + std::to_string(d.c_out) + "]");
    }

    const auto in = input.values();
    const auto wt = weight.values();
    std::vector<T> out(static_cast<std::size_t>(d.n * d.c_out * d.s));
    Scratch<T> col = scratch<T>(d.k * d.s);

    for (std::int64_t img = 0; img < d.n; ++img) {
        im2col(in.data() + img * d.c_in * d.h * d.w, d, opts, col.get());
        T* dst = out.data() + img * d.c_out * d.s;
        if (bias) {
            const auto bv = bias->values();
            for (std::int64_t oc = 0; oc < d.c_out; ++oc)
                std::fill(dst + oc * d.s, dst + (oc + 1) * d.s, bv[oc]);
        }
        detail::gemm_nn(d.c_out, d.s, d.k, wt.data(), col.get(), dst);
    }

    std::vector<Tensor<T>> parents{input, weight};
    if (bias) parents.push_back(*bias);
    Conv2dOpts o = opts;
    Tensor<T> in_t = input;
    Tensor<T> w_t = weight;
    Tensor<T> b_t = bias ? *bias : Tensor<T>{};

    return detail::make_result<T>(
        Shape{d.n, d.c_out, d.out_h, d.out_w}, std::move(out), std::move(parents),
        [d, o, in_t, w_t, b_t](detail::TensorNode<T>& node) mutable {
            const auto& gout = node.grad;
            const bool need_in = in_t.requires_grad();
            const bool need_w = w_t.requires_grad();
            const bool need_b = b_t.defined() && b_t.requires_grad();

            Scratch<T> col;
            if (need_w) col = scratch<T>(d.k * d.s);

            // Input gradients: for stride 1 the scatter is itself a stride-1
            // convolution of the output gradient with the flipped,
            // channel-transposed kernel, which runs straight through the
            // GEMM path. Strided convolutions take the col2im route.
            const int back_pad = o.dilation * static_cast<int>(d.kh - 1) - o.padding;
            const bool conv_back = o.stride == 1 && d.kh == d.kw && back_pad >= 0;
            Scratch<T> w_back, gcol, dcol, wt_t;
            ConvDims bd{};
            Conv2dOpts bo{};
            if (need_in && conv_back) {
                w_back = scratch<T>(d.k * d.c_out);
                const auto wv = w_t.values();
                // w_back[ci][oc][ky][kx] = w[oc][ci][kh-1-ky][kw-1-kx]
                for (std::int64_t oc = 0; oc < d.c_out; ++oc)
                    for (std::int64_t ci = 0; ci < d.c_in; ++ci)
                        for (std::int64_t ky = 0; ky < d.kh; ++ky)
                            for (std::int64_t kx = 0; kx < d.kw; ++kx)
                                w_back[static_cast<std::size_t>(
                                    ((ci * d.c_out + oc) * d.kh + (d.kh - 1 - ky)) * d.kw +
                                    (d.kw - 1 - kx))] =
                                    wv[static_cast<std::size_t>(((oc * d.c_in + ci) * d.kh + ky) *
                                                                d.kw + kx)];
                bd.n = 1;
                bd.c_in = d.c_out;
                bd.h = d.out_h;
                bd.w = d.out_w;
                bd.c_out = d.c_in;
                bd.kh = d.kh;
                bd.kw = d.kw;
                bd.out_h = d.h;
                bd.out_w = d.w;
                bd.k = d.c_out * d.kh * d.kw;
                bd.s = d.h * d.w;
                bo.stride = 1;
                bo.padding = back_pad;
                bo.dilation = o.dilation;
                gcol = scratch<T>(bd.k * bd.s);
            } else if (need_in) {
                wt_t = scratch<T>(d.k * d.c_out);
                const auto wv = w_t.values();
                for (std::int64_t oc = 0; oc < d.c_out; ++oc)
                    for (std::int64_t p = 0; p < d.k; ++p)
                        wt_t[static_cast<std::size_t>(p * d.c_out + oc)] =
                            wv[static_cast<std::size_t>(oc * d.k + p)];
                dcol = scratch<T>(d.k * d.s);
            }

            std::span<T> gin, gw;
            if (need_in) gin = in_t.grad();
            if (need_w) gw = w_t.grad();

            for (std::int64_t img = 0; img < d.n; ++img) {
                const T* go = gout.data() + img * d.c_out * d.s;
                if (need_w) {
                    im2col(in_t.values().data() + img * d.c_in * d.h * d.w, d, o, col.get());
                    detail::gemm_nt(d.c_out, d.k, d.s, go, col.get(), gw.data());
                }
                if (need_in && conv_back) {
                    im2col(go, bd, bo, gcol.get());
                    detail::gemm_nn(bd.c_out, bd.s, bd.k, w_back.get(), gcol.get(),
                                    gin.data() + img * d.c_in * d.h * d.w);
                } else if (need_in) {
                    std::fill(dcol.get(), dcol.get() + d.k * d.s, T(0));
                    detail::gemm_nn(d.k, d.s, d.c_out, wt_t.get(), go, dcol.get());
                    col2im_add(dcol.get(), d, o, gin.data() + img * d.c_in * d.h * d.w);
                }
                if (need_b) {
                    auto gb = b_t.grad();
                    for (std::int64_t oc = 0; oc < d.c_out; ++oc) {
                        T acc = T(0);
                        const T* row = go + oc * d.s;
                        for (std::int64_t i = 0; i < d.s; ++i) acc += row[i];
                        gb[oc] += acc;
                    }
                }
            }
        });
}

template Tensor<float> conv2d<float>(const Tensor<float>&, const Tensor<float>&,
                                     const std::optional<Tensor<float>>&, const Conv2dOpts&);
template Tensor<double> conv2d<double>(const Tensor<double>&, const Tensor<double>&,
                                       const std::optional<Tensor<double>>&, const Conv2dOpts&);

} // namespace u2net
