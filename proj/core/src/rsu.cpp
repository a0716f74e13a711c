#include "u2net/rsu.hpp"

#include <algorithm>

namespace u2net {

void RsuSpec::validate() const {
    if (height < 2) throw ConfigError("RSU height must be >= 2, got " + std::to_string(height));
    if (c_in < 1 || mid < 1 || c_out < 1)
        throw ConfigError("RSU channel counts must be >= 1: " + str());
}

std::string RsuSpec::str() const {
    return "RSU-" + std::to_string(height) + (dilated ? "F" : "") + "(" +
           std::to_string(c_in) + "," + std::to_string(mid) + "," + std::to_string(c_out) + ")";
}

template <typename T>
ConvUnit<T> ConvUnit<T>::make(std::int64_t c_in, std::int64_t c_out, int dilation,
                              bool with_bn, Rng& rng) {
    ConvUnit<T> unit;
    unit.weight = xavier_init<T>(Shape{c_out, c_in, 3, 3}, rng);
    unit.bias = Tensor<T>::zeros(Shape{c_out}, true);
    unit.dilation = dilation;
    if (with_bn) unit.bn = BatchNorm2d<T>::make(c_out);
    return unit;
}

template <typename T>
Tensor<T> ConvUnit<T>::operator()(const Tensor<T>& x) {
    Conv2dOpts opts;
    opts.padding = dilation; // 3x3 kernel: resolution preserved
    opts.dilation = dilation;
    Tensor<T> y = conv2d(x, weight, std::optional<Tensor<T>>(bias), opts);
    if (bn) y = batchnorm2d(y, *bn);
    return relu(y);
}

template <typename T>
const Tensor<T>& RsuTrace<T>::at(const std::string& name) const {
    for (const auto& [n, t] : maps)
        if (n == name) return t;
    throw UsageError("RsuTrace: no map named " + name);
}

template <typename T>
RsuBlock<T> RsuBlock<T>::build(const RsuSpec& spec, Rng& rng, bool with_batchnorm) {
    spec.validate();
    RsuBlock<T> block;
    block.spec_ = spec;
    const int L = spec.height;

    block.conv_in_ = ConvUnit<T>::make(spec.c_in, spec.c_out, 1, with_batchnorm, rng);

    // Encoder ladder: e_1 takes F1(x); dilations stay 1 in the standard form
    // and double per level (1, 2, 4, ...) in the dilated form.
    block.encoders_.reserve(static_cast<std::size_t>(L - 1));
    for (int i = 1; i <= L - 1; ++i) {
        const std::int64_t ci = i == 1 ? spec.c_out : spec.mid;
        const int dil = spec.dilated ? (1 << (i - 1)) : 1;
        block.encoders_.push_back(ConvUnit<T>::make(ci, spec.mid, dil, with_batchnorm, rng));
    }

    const int bottom_dil = spec.dilated ? (1 << (L - 1)) : 2;
    block.bottom_ = ConvUnit<T>::make(spec.mid, spec.mid, bottom_dil, with_batchnorm, rng);

    // Decoder mirror: d_{L-1} .. d_2 map 2M -> M, d_1 maps 2M -> c_out.
    block.decoders_.reserve(static_cast<std::size_t>(L - 1));
    for (int i = L - 1; i >= 1; --i) {
        const std::int64_t co = i == 1 ? spec.c_out : spec.mid;
        const int dil = spec.dilated ? (1 << (i - 1)) : 1;
        block.decoders_.push_back(ConvUnit<T>::make(2 * spec.mid, co, dil, with_batchnorm, rng));
    }
    return block;
}

template <typename T>
Tensor<T> RsuBlock<T>::forward(const Tensor<T>& x, RsuTrace<T>* trace) {
    if (x.rank() != 4)
        throw ConfigError("rsu_forward: input must be NCHW, got " + shape_str(x.shape()));
    if (x.dim(1) != spec_.c_in)
        throw ConfigError(spec_.str() + ": input has " + std::to_string(x.dim(1)) +
                          " channels, expected " + std::to_string(spec_.c_in));
    const int L = spec_.height;
    const bool pooled = !spec_.dilated;

    auto record = [&](const std::string& name, const Tensor<T>& t) {
        if (trace) trace->maps.emplace_back(name, t);
    };

    Tensor<T> x0 = conv_in_(x);
    record("x0", x0);

    std::vector<Tensor<T>> enc;
    enc.reserve(encoders_.size());
    Tensor<T> cur = x0;
    for (int i = 0; i < L - 1; ++i) {
        if (pooled && i > 0) cur = maxpool2(cur);
        cur = encoders_[static_cast<std::size_t>(i)](cur);
        enc.push_back(cur);
        record("e" + std::to_string(i + 1), cur);
    }

    Tensor<T> b = bottom_(enc.back());
    record("b", b);

    // d_{L-1} sees the bottom at its own resolution; deeper decoder outputs
    // are upsampled to the symmetric encoder map's actual size.
    Tensor<T> d = decoders_[0](concat_channels(b, enc.back()));
    record("d" + std::to_string(L - 1), d);
    for (int j = 1; j < L - 1; ++j) {
        const Tensor<T>& skip = enc[static_cast<std::size_t>(L - 2 - j)];
        Tensor<T> up = d;
        if (d.dim(2) != skip.dim(2) || d.dim(3) != skip.dim(3))
            up = upsample_bilinear(d, skip.dim(2), skip.dim(3));
        d = decoders_[static_cast<std::size_t>(j)](concat_channels(up, skip));
        record("d" + std::to_string(L - 1 - j), d);
    }

    return add(d, x0);
}

template <typename T>
void RsuBlock<T>::set_training(bool on) {
    auto apply = [on](ConvUnit<T>& u) {
        if (u.bn) u.bn->training = on;
    };
    apply(conv_in_);
    for (auto& e : encoders_) apply(e);
    apply(bottom_);
    for (auto& d : decoders_) apply(d);
}

namespace {

template <typename T>
void collect_unit_params(ConvUnit<T>& u, const std::string& prefix,
                         std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".weight", u.weight});
    out.push_back({prefix + ".bias", u.bias});
    if (u.bn) {
        out.push_back({prefix + ".bn.gamma", u.bn->gamma});
        out.push_back({prefix + ".bn.beta", u.bn->beta});
    }
}

template <typename T>
void collect_unit_buffers(ConvUnit<T>& u, const std::string& prefix,
                          std::vector<NamedBuffer<T>>& out) {
    if (u.bn) {
        out.push_back({prefix + ".bn.running_mean", &u.bn->running_mean});
        out.push_back({prefix + ".bn.running_var", &u.bn->running_var});
    }
}

template <typename T, typename Fn>
void for_each_unit(RsuBlock<T>& block, const std::string& prefix, Fn&& fn) {
    fn(block.conv_in(), prefix + ".conv_in");
    const int L = block.spec().height;
    for (int i = 0; i < L - 1; ++i)
        fn(block.encoders()[static_cast<std::size_t>(i)], prefix + ".enc" + std::to_string(i + 1));
    fn(block.bottom(), prefix + ".bottom");
    for (int i = 0; i < L - 1; ++i)
        fn(block.decoders()[static_cast<std::size_t>(i)],
           prefix + ".dec" + std::to_string(L - 1 - i));
}

} // namespace

template <typename T>
void RsuBlock<T>::collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    for_each_unit(*this, prefix, [&out](ConvUnit<T>& u, const std::string& p) {
        collect_unit_params(u, p, out);
    });
}

template <typename T>
void RsuBlock<T>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
    for_each_unit(*this, prefix, [&out](ConvUnit<T>& u, const std::string& p) {
        collect_unit_buffers(u, p, out);
    });
}

int rsu_receptive_field(const RsuSpec& spec) {
    spec.validate();
    const int L = spec.height;
    long long rf = 1;
    long long stride = 1;
    rf += 2; // input convolution, dilation 1, stride product 1
    for (int i = 1; i <= L - 1; ++i) {
        if (!spec.dilated && i >= 2) stride *= 2;
        const long long dil = spec.dilated ? (1LL << (i - 1)) : 1;
        rf += 2 * dil * stride;
    }
    const long long bottom_dil = spec.dilated ? (1LL << (L - 1)) : 2;
    rf += 2 * bottom_dil * stride;
    return static_cast<int>(rf);
}

template struct ConvUnit<float>;
template struct ConvUnit<double>;
template struct RsuTrace<float>;
template struct RsuTrace<double>;
template class RsuBlock<float>;
template class RsuBlock<double>;

} // namespace u2net
