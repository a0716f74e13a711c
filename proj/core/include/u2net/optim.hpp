#ifndef U2NET_OPTIM_HPP
#define U2NET_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "u2net/tensor.hpp"

namespace u2net {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Per-parameter Adam moments plus the shared step counter.
template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t t = 0;
};

// One bias-corrected Adam update of `param` from `grad` in place. The step
// counter is incremented before the update.
template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, AdamState<T>& state,
               const AdamConfig& cfg);

// Optimizer over a parameter set; step() reads each tensor's grad.
template <typename T>
class Adam {
public:
    Adam(std::vector<Tensor<T>> params, AdamConfig cfg = {});

    void step();
    void zero_grad();
    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor<T>> params_;
    std::vector<AdamState<T>> states_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

} // namespace u2net

#endif
