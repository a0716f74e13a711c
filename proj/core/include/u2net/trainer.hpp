#ifndef U2NET_TRAINER_HPP
#define U2NET_TRAINER_HPP

#include <functional>
#include <string>
#include <vector>

#include "u2net/augment.hpp"
#include "u2net/loss.hpp"
#include "u2net/network.hpp"
#include "u2net/optim.hpp"

namespace u2net {

struct TrainConfig {
    std::int64_t iterations = 1000;
    std::int64_t batch_size = 12;
    std::uint64_t seed = 0;
    std::int64_t resize = 320;
    std::int64_t crop = 288;
    FlipMode flip = FlipMode::vertical;
    double flip_prob = 0.5;
    AdamConfig adam{};
    LossReduction loss_mode = LossReduction::mean;
    LossWeights weights{};
    std::int64_t checkpoint_every = 0; // 0 = final checkpoint only
    std::string checkpoint_path;       // empty = no checkpoints written

    // Optional early-stop hook, polled after each iteration with the
    // iteration index and its loss. Returning true ends the run.
    std::function<bool(std::int64_t, double)> should_stop;

    void validate() const;
};

struct TrainRecord {
    std::int64_t iteration; // 1-based
    double loss;
};

struct TrainResult {
    std::vector<TrainRecord> history;
    std::string final_checkpoint; // path, or empty
};

// Minibatch loop: sample with replacement, augment, forward, deep-supervision
// loss, backward, Adam step, zero grads. Loss is recorded every iteration;
// a NaN in any loss term aborts with the iteration and term named.
template <typename T>
TrainResult train(Network<T>& net, const std::vector<SamplePair<T>>& dataset,
                  const TrainConfig& cfg);

// Writes `iteration,loss` rows.
void save_history_csv(const std::vector<TrainRecord>& history, const std::string& path);

} // namespace u2net

#endif
