#ifndef U2NET_PARAMS_HPP
#define U2NET_PARAMS_HPP

#include <string>
#include <vector>

#include "u2net/tensor.hpp"

namespace u2net {

template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T> tensor;
};

// Non-trainable per-channel buffers (batch-norm running statistics).
template <typename T>
struct NamedBuffer {
    std::string name;
    std::vector<T>* data = nullptr;
};

} // namespace u2net

#endif
