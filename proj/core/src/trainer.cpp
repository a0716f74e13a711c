#include "u2net/trainer.hpp"

#include <cmath>
#include <fstream>

#include "u2net/checkpoint.hpp"

namespace u2net {

void TrainConfig::validate() const {
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (crop > resize) throw ConfigError("crop size exceeds resize size");
    if (crop < 1) throw ConfigError("crop size must be >= 1");
    if (checkpoint_every > 0 && checkpoint_path.empty())
        throw ConfigError("checkpoint cadence set but no checkpoint path");
}

namespace {

// Stacks per-sample 1xCxHxW tensors into one NxCxHxW batch (plain values;
// augmented inputs are graph leaves).
template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items) {
    const std::int64_t n = static_cast<std::int64_t>(items.size());
    const std::int64_t c = items[0].dim(1), h = items[0].dim(2), w = items[0].dim(3);
    std::vector<T> data(static_cast<std::size_t>(n * c * h * w));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto src = items[static_cast<std::size_t>(i)].values();
        std::copy(src.begin(), src.end(), data.begin() + i * c * h * w);
    }
    return Tensor<T>::from_data(Shape{n, c, h, w}, std::move(data));
}

const char* kTermNames[7] = {"side1", "side2", "side3", "side4", "side5", "side6", "fuse"};

} // namespace

template <typename T>
TrainResult train(Network<T>& net, const std::vector<SamplePair<T>>& dataset,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw DataError("train: empty dataset");

    Rng rng(cfg.seed);
    AugmentConfig aug;
    aug.resize = cfg.resize;
    aug.crop = cfg.crop;
    aug.flip = cfg.flip;
    aug.flip_prob = cfg.flip_prob;

    auto params = net.parameters();
    std::vector<Tensor<T>> tensors;
    tensors.reserve(params.size());
    for (auto& p : params) tensors.push_back(p.tensor);
    Adam<T> opt(tensors, cfg.adam);

    net.set_training(true);
    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.iterations));

    for (std::int64_t iter = 1; iter <= cfg.iterations; ++iter) {
        std::vector<Tensor<T>> images, masks;
        images.reserve(static_cast<std::size_t>(cfg.batch_size));
        masks.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (std::int64_t b = 0; b < cfg.batch_size; ++b) {
            const auto idx = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1));
            SamplePair<T> s = augment(dataset[idx], aug, rng);
            images.push_back(s.image);
            masks.push_back(s.mask);
        }
        Tensor<T> batch_images = stack_batch(images);
        Tensor<T> batch_masks = stack_batch(masks);

        SaliencyOutputs<T> outputs = net.forward(batch_images);
        std::array<double, 7> terms{};
        Tensor<T> loss = total_loss(outputs, batch_masks, cfg.weights, cfg.loss_mode, &terms);
        const double loss_value = static_cast<double>(loss.item());
        for (int t = 0; t < 7; ++t) {
            if (std::isnan(terms[static_cast<std::size_t>(t)]))
                throw NumericError("NaN loss at iteration " + std::to_string(iter) +
                                   " in term " + kTermNames[t]);
        }

        loss.backward();
        opt.step();
        opt.zero_grad();

        result.history.push_back({iter, loss_value});
        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0)
            save_checkpoint(net, cfg.checkpoint_path + "." + std::to_string(iter));
        if (cfg.should_stop && cfg.should_stop(iter, loss_value)) break;
    }

    if (!cfg.checkpoint_path.empty()) {
        save_checkpoint(net, cfg.checkpoint_path);
        result.final_checkpoint = cfg.checkpoint_path;
    }
    return result;
}

void save_history_csv(const std::vector<TrainRecord>& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write loss history to " + path);
    os << "iteration,loss\n";
    for (const auto& r : history) os << r.iteration << "," << r.loss << "\n";
}

template TrainResult train<float>(Network<float>&, const std::vector<SamplePair<float>>&,
                                  const TrainConfig&);
template TrainResult train<double>(Network<double>&, const std::vector<SamplePair<double>>&,
                                   const TrainConfig&);

} // namespace u2net
