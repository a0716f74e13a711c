#ifndef U2NET_NETWORK_HPP
#define U2NET_NETWORK_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "u2net/params.hpp"
#include "u2net/rsu.hpp"

namespace u2net {

struct StageSpec {
    std::string name; // En_1..En_6, De_5..De_1
    RsuSpec rsu;
};

// Eleven-stage two-level U-structure: six encoder stages, five decoder
// stages, six side-output heads and a 1x1 fusion head.
struct NetworkConfig {
    std::vector<StageSpec> encoders; // En_1..En_6
    std::vector<StageSpec> decoders; // De_5..De_1
    std::vector<std::string> side_sources; // En_6, De_5..De_1
    std::int64_t input_size = 320;
    bool use_batchnorm = true;
    std::string rng_algorithm = "mt19937_64";

    void validate() const;
    const RsuSpec& stage(const std::string& name) const;
};

// Table-driven presets: "full" is the 176 MB configuration, "small" the
// 4.7 MB one with a 64-channel trunk and M=16 everywhere.
NetworkConfig preset_config(const std::string& name);

// Seven maps of one forward pass: side logits/probabilities s1..s6
// (s1 from De_1 ... s6 from En_6), all upsampled to the input size, plus
// the fused map from the 1x1 convolution over the concatenated logits.
template <typename T>
struct SaliencyOutputs {
    std::array<Tensor<T>, 6> side_logits;
    std::array<Tensor<T>, 6> side_probs;
    Tensor<T> fused_logit;
    Tensor<T> fused_prob;
};

template <typename T>
class Network {
public:
    Network() = default;

    static Network build(const NetworkConfig& config, std::uint64_t seed);

    // images: N x c_in x H x W with H, W >= 32 recommended (ceil-mode
    // pooling tolerates any size whose five halvings stay >= 1).
    SaliencyOutputs<T> forward(const Tensor<T>& images);

    // Testing path: resize to the configured input size, forward in
    // inference mode, return the fused probability map resized to
    // (orig_h, orig_w).
    Tensor<T> predict(const Tensor<T>& image, std::int64_t orig_h, std::int64_t orig_w);

    void set_training(bool on);
    bool training() const { return training_; }

    const NetworkConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }

    RsuBlock<T>& encoder(int i) { return encoders_[static_cast<std::size_t>(i)]; }
    RsuBlock<T>& decoder(int i) { return decoders_[static_cast<std::size_t>(i)]; } // 0 = De_5
    RsuBlock<T>& stage(const std::string& name);
    Tensor<T>& side_weight(int i) { return side_w_[static_cast<std::size_t>(i)]; } // 0 = s1 head
    Tensor<T>& side_bias(int i) { return side_b_[static_cast<std::size_t>(i)]; }
    Tensor<T>& fuse_weight() { return fuse_w_; }
    Tensor<T>& fuse_bias() { return fuse_b_; }

    std::vector<NamedParam<T>> parameters();
    std::vector<NamedBuffer<T>> buffers();

private:
    NetworkConfig config_;
    std::uint64_t seed_ = 0;
    bool training_ = true;
    std::vector<RsuBlock<T>> encoders_; // En_1..En_6
    std::vector<RsuBlock<T>> decoders_; // De_5..De_1
    std::array<Tensor<T>, 6> side_w_;   // heads for s1..s6
    std::array<Tensor<T>, 6> side_b_;
    Tensor<T> fuse_w_;
    Tensor<T> fuse_b_;
};

} // namespace u2net

#endif
