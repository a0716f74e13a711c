#include "u2net/network.hpp"

#include <algorithm>

namespace u2net {

namespace {

const std::vector<std::string> kEncoderNames = {"En_1", "En_2", "En_3", "En_4", "En_5", "En_6"};
const std::vector<std::string> kDecoderNames = {"De_5", "De_4", "De_3", "De_2", "De_1"};
const std::vector<std::string> kSideSources = {"En_6", "De_5", "De_4", "De_3", "De_2", "De_1"};

StageSpec stage(const char* name, int height, std::int64_t ci, std::int64_t m, std::int64_t co,
                bool dilated = false) {
    return {name, RsuSpec{height, ci, m, co, dilated}};
}

} // namespace

void NetworkConfig::validate() const {
    if (encoders.size() != 6)
        throw ConfigError("network needs exactly 6 encoder stages, got " +
                          std::to_string(encoders.size()));
    if (decoders.size() != 5)
        throw ConfigError("network needs exactly 5 decoder stages, got " +
                          std::to_string(decoders.size()));
    for (std::size_t i = 0; i < 6; ++i) {
        if (encoders[i].name != kEncoderNames[i])
            throw ConfigError("encoder stage " + std::to_string(i + 1) + " must be named " +
                              kEncoderNames[i]);
        encoders[i].rsu.validate();
    }
    for (std::size_t i = 0; i < 5; ++i) {
        if (decoders[i].name != kDecoderNames[i])
            throw ConfigError("decoder stage must be named " + kDecoderNames[i]);
        decoders[i].rsu.validate();
    }
    for (std::size_t i = 1; i < 6; ++i) {
        if (encoders[i].rsu.c_in != encoders[i - 1].rsu.c_out)
            throw ConfigError(encoders[i].name + " input channels != " +
                              encoders[i - 1].name + " output channels");
    }
    // Each decoder consumes the previous stage's output concatenated with
    // its symmetric encoder's output.
    for (std::size_t i = 0; i < 5; ++i) {
        const std::int64_t prev_out =
            i == 0 ? encoders[5].rsu.c_out : decoders[i - 1].rsu.c_out;
        const std::int64_t skip_out = encoders[4 - i].rsu.c_out;
        if (decoders[i].rsu.c_in != prev_out + skip_out)
            throw ConfigError(decoders[i].name + " input channels " +
                              std::to_string(decoders[i].rsu.c_in) + " != " +
                              std::to_string(prev_out) + " + " + std::to_string(skip_out));
    }
    if (side_sources != kSideSources)
        throw ConfigError("side outputs must be drawn from En_6, De_5..De_1 in that order");
    if (input_size < 32)
        throw ConfigError("input size must be >= 32, got " + std::to_string(input_size));
}

const RsuSpec& NetworkConfig::stage(const std::string& name) const {
    for (const auto& s : encoders)
        if (s.name == name) return s.rsu;
    for (const auto& s : decoders)
        if (s.name == name) return s.rsu;
    throw ConfigError("no stage named " + name);
}

NetworkConfig preset_config(const std::string& name) {
    NetworkConfig cfg;
    cfg.side_sources = kSideSources;
    if (name == "full") {
        cfg.encoders = {
            stage("En_1", 7, 3, 32, 64),
            stage("En_2", 6, 64, 32, 128),
            stage("En_3", 5, 128, 64, 256),
            stage("En_4", 4, 256, 128, 512),
            stage("En_5", 4, 512, 256, 512, true),
            stage("En_6", 4, 512, 256, 512, true),
        };
        cfg.decoders = {
            stage("De_5", 4, 1024, 256, 512, true),
            stage("De_4", 4, 1024, 128, 256),
            stage("De_3", 5, 512, 64, 128),
            stage("De_2", 6, 256, 32, 64),
            stage("De_1", 7, 128, 16, 64),
        };
    } else if (name == "small") {
        cfg.encoders = {
            stage("En_1", 7, 3, 16, 64),
            stage("En_2", 6, 64, 16, 64),
            stage("En_3", 5, 64, 16, 64),
            stage("En_4", 4, 64, 16, 64),
            stage("En_5", 4, 64, 16, 64, true),
            stage("En_6", 4, 64, 16, 64, true),
        };
        cfg.decoders = {
            stage("De_5", 4, 128, 16, 64, true),
            stage("De_4", 4, 128, 16, 64),
            stage("De_3", 5, 128, 16, 64),
            stage("De_2", 6, 128, 16, 64),
            stage("De_1", 7, 128, 16, 64),
        };
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected full or small)");
    }
    cfg.validate();
    return cfg;
}

template <typename T>
Network<T> Network<T>::build(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Network<T> net;
    net.config_ = config;
    net.seed_ = seed;
    Rng rng(seed);

    for (const auto& s : config.encoders)
        net.encoders_.push_back(RsuBlock<T>::build(s.rsu, rng, config.use_batchnorm));
    for (const auto& s : config.decoders)
        net.decoders_.push_back(RsuBlock<T>::build(s.rsu, rng, config.use_batchnorm));

    // Side heads are plain 3x3 convolutions feeding sigmoids directly.
    // Head i produces s_{i+1}; its source runs De_1..De_5 then En_6.
    for (int i = 0; i < 6; ++i) {
        const std::int64_t src_channels =
            i < 5 ? config.decoders[static_cast<std::size_t>(4 - i)].rsu.c_out
                  : config.encoders[5].rsu.c_out;
        net.side_w_[static_cast<std::size_t>(i)] =
            xavier_init<T>(Shape{1, src_channels, 3, 3}, rng);
        net.side_b_[static_cast<std::size_t>(i)] = Tensor<T>::zeros(Shape{1}, true);
    }
    net.fuse_w_ = xavier_init<T>(Shape{1, 6, 1, 1}, rng);
    net.fuse_b_ = Tensor<T>::zeros(Shape{1}, true);
    return net;
}

template <typename T>
SaliencyOutputs<T> Network<T>::forward(const Tensor<T>& images) {
    if (images.rank() != 4)
        throw ConfigError("forward: images must be NCHW, got " + shape_str(images.shape()));
    const std::int64_t in_h = images.dim(2), in_w = images.dim(3);

    // Encoder chain with a 2x2 pool after each of En_1..En_5.
    std::vector<Tensor<T>> enc_out;
    enc_out.reserve(6);
    Tensor<T> cur = images;
    for (int i = 0; i < 6; ++i) {
        if (i > 0) cur = maxpool2(cur);
        cur = encoders_[static_cast<std::size_t>(i)].forward(cur);
        enc_out.push_back(cur);
    }

    // Decoder chain; each stage consumes the previous output upsampled to
    // its symmetric encoder's actual size, concatenated with that encoder.
    std::vector<Tensor<T>> dec_out; // De_5..De_1
    dec_out.reserve(5);
    Tensor<T> prev = enc_out[5];
    for (int i = 0; i < 5; ++i) {
        const Tensor<T>& skip = enc_out[static_cast<std::size_t>(4 - i)];
        Tensor<T> up = prev;
        if (prev.dim(2) != skip.dim(2) || prev.dim(3) != skip.dim(3))
            up = upsample_bilinear(prev, skip.dim(2), skip.dim(3));
        prev = decoders_[static_cast<std::size_t>(i)].forward(concat_channels(up, skip));
        dec_out.push_back(prev);
    }

    // Side logits, upsampled to the input size before fusion and sigmoid.
    SaliencyOutputs<T> out;
    Conv2dOpts side_opts;
    side_opts.padding = 1;
    for (int i = 0; i < 6; ++i) {
        const Tensor<T>& src = i < 5 ? dec_out[static_cast<std::size_t>(4 - i)] : enc_out[5];
        Tensor<T> logit = conv2d(src, side_w_[static_cast<std::size_t>(i)],
                                 std::optional<Tensor<T>>(side_b_[static_cast<std::size_t>(i)]),
                                 side_opts);
        if (logit.dim(2) != in_h || logit.dim(3) != in_w)
            logit = upsample_bilinear(logit, in_h, in_w);
        out.side_logits[static_cast<std::size_t>(i)] = logit;
    }

    // Fusion consumes the logits, not the probabilities.
    Tensor<T> stacked = concat_channels(out.side_logits[0], out.side_logits[1]);
    for (int i = 2; i < 6; ++i)
        stacked = concat_channels(stacked, out.side_logits[static_cast<std::size_t>(i)]);
    out.fused_logit = conv2d(stacked, fuse_w_, std::optional<Tensor<T>>(fuse_b_), Conv2dOpts{});

    for (int i = 0; i < 6; ++i)
        out.side_probs[static_cast<std::size_t>(i)] =
            sigmoid(out.side_logits[static_cast<std::size_t>(i)]);
    out.fused_prob = sigmoid(out.fused_logit);
    return out;
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& image, std::int64_t orig_h, std::int64_t orig_w) {
    NoGradGuard guard;
    const bool was_training = training_;
    set_training(false);

    Tensor<T> resized = image;
    if (image.dim(2) != config_.input_size || image.dim(3) != config_.input_size)
        resized = upsample_bilinear(image, config_.input_size, config_.input_size);
    SaliencyOutputs<T> out = forward(resized);
    Tensor<T> map = out.fused_prob;
    if (map.dim(2) != orig_h || map.dim(3) != orig_w)
        map = upsample_bilinear(map, orig_h, orig_w);

    set_training(was_training);
    return map;
}

template <typename T>
void Network<T>::set_training(bool on) {
    training_ = on;
    for (auto& b : encoders_) b.set_training(on);
    for (auto& b : decoders_) b.set_training(on);
}

template <typename T>
RsuBlock<T>& Network<T>::stage(const std::string& name) {
    for (std::size_t i = 0; i < kEncoderNames.size(); ++i)
        if (name == kEncoderNames[i]) return encoders_[i];
    for (std::size_t i = 0; i < kDecoderNames.size(); ++i)
        if (name == kDecoderNames[i]) return decoders_[i];
    throw ConfigError("no stage named " + name);
}

template <typename T>
std::vector<NamedParam<T>> Network<T>::parameters() {
    std::vector<NamedParam<T>> out;
    for (std::size_t i = 0; i < encoders_.size(); ++i)
        encoders_[i].collect_params("en" + std::to_string(i + 1), out);
    for (std::size_t i = 0; i < decoders_.size(); ++i)
        decoders_[i].collect_params("de" + std::to_string(5 - i), out);
    for (int i = 0; i < 6; ++i) {
        out.push_back({"side" + std::to_string(i + 1) + ".weight",
                       side_w_[static_cast<std::size_t>(i)]});
        out.push_back({"side" + std::to_string(i + 1) + ".bias",
                       side_b_[static_cast<std::size_t>(i)]});
    }
    out.push_back({"fuse.weight", fuse_w_});
    out.push_back({"fuse.bias", fuse_b_});
    return out;
}

template <typename T>
std::vector<NamedBuffer<T>> Network<T>::buffers() {
    std::vector<NamedBuffer<T>> out;
    for (std::size_t i = 0; i < encoders_.size(); ++i)
        encoders_[i].collect_buffers("en" + std::to_string(i + 1), out);
    for (std::size_t i = 0; i < decoders_.size(); ++i)
        decoders_[i].collect_buffers("de" + std::to_string(5 - i), out);
    return out;
}

template struct SaliencyOutputs<float>;
template struct SaliencyOutputs<double>;
template class Network<float>;
template class Network<double>;

} // namespace u2net
