#include "u2net/optim.hpp"

#include <cmath>

namespace u2net {

template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, AdamState<T>& state,
               const AdamConfig& cfg) {
    if (param.size() != grad.size())
        throw ConfigError("adam_step: parameter/gradient size mismatch");
    if (state.m.empty()) state.m.assign(param.size(), T(0));
    if (state.v.empty()) state.v.assign(param.size(), T(0));
    if (state.m.size() != param.size() || state.v.size() != param.size())
        throw ConfigError("adam_step: moment buffers do not match parameter");

    state.t += 1;
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.t)));
    const T corr2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.t)));
    const T lr = static_cast<T>(cfg.lr);
    const T eps = static_cast<T>(cfg.eps);
    const T wd = static_cast<T>(cfg.weight_decay);

    for (std::size_t i = 0; i < param.size(); ++i) {
        T g = grad[i];
        if (wd != T(0)) g += wd * param[i];
        state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
        state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
        const T m_hat = state.m[i] / corr1;
        const T v_hat = state.v[i] / corr2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig cfg)
    : params_(std::move(params)), states_(params_.size()), cfg_(cfg) {}

template <typename T>
void Adam<T>::step() {
    t_ += 1;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        auto& st = states_[i];
        st.t = t_ - 1; // adam_step increments to t_
        adam_step(p.values(), std::span<const T>(p.grad()), st, cfg_);
    }
}

template <typename T>
void Adam<T>::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

template void adam_step<float>(std::span<float>, std::span<const float>,
                               AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>,
                                AdamState<double>&, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

} // namespace u2net
