#ifndef U2NET_RSU_HPP
#define U2NET_RSU_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "u2net/init.hpp"
#include "u2net/ops.hpp"
#include "u2net/params.hpp"
#include "u2net/tensor.hpp"

namespace u2net {

// One residual U-block: height L (number of encoder layers), input/middle/
// output channel counts, and whether the block is the dilated ("F") variant
// that keeps every internal map at the input resolution.
struct RsuSpec {
    int height = 0;
    std::int64_t c_in = 0;
    std::int64_t mid = 0;
    std::int64_t c_out = 0;
    bool dilated = false;

    void validate() const;
    std::string str() const; // e.g. "RSU-4F(512,256,512)"
};

// Conv(3x3, padding = dilation) -> BatchNorm -> ReLU. The batch-norm stage
// can be dropped for ablation; the convolution always carries a bias.
template <typename T>
struct ConvUnit {
    Tensor<T> weight; // [c_out, c_in, k, k]
    Tensor<T> bias;   // [c_out]
    std::optional<BatchNorm2d<T>> bn;
    int dilation = 1;

    static ConvUnit make(std::int64_t c_in, std::int64_t c_out, int dilation,
                         bool with_bn, Rng& rng);
    Tensor<T> operator()(const Tensor<T>& x);

    std::int64_t out_channels() const { return weight.dim(0); }
};

// Internal activations of one forward pass, for shape instrumentation and
// receptive-field probing.
template <typename T>
struct RsuTrace {
    std::vector<std::pair<std::string, Tensor<T>>> maps;

    const Tensor<T>& at(const std::string& name) const;
};

template <typename T>
class RsuBlock {
public:
    RsuBlock() = default;

    static RsuBlock build(const RsuSpec& spec, Rng& rng, bool with_batchnorm = true);

    // Output keeps the input spatial size; output = U(F1(x)) + F1(x).
    Tensor<T> forward(const Tensor<T>& x, RsuTrace<T>* trace = nullptr);

    const RsuSpec& spec() const { return spec_; }
    void set_training(bool on);

    ConvUnit<T>& conv_in() { return conv_in_; }
    std::vector<ConvUnit<T>>& encoders() { return encoders_; }
    ConvUnit<T>& bottom() { return bottom_; }
    std::vector<ConvUnit<T>>& decoders() { return decoders_; } // d_{L-1} .. d_1

    void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out);
    void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);

private:
    RsuSpec spec_;
    ConvUnit<T> conv_in_;
    std::vector<ConvUnit<T>> encoders_; // e_1 .. e_{L-1}
    ConvUnit<T> bottom_;
    std::vector<ConvUnit<T>> decoders_; // d_{L-1} .. d_1
};

// Theoretical receptive field (one side, in input pixels) of the encoder-to-
// bottom path, composed layer by layer: a 3x3 conv adds 2 * dilation *
// stride_product and each pooling doubles the stride product.
int rsu_receptive_field(const RsuSpec& spec);

} // namespace u2net

#endif
