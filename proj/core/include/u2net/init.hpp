#ifndef U2NET_INIT_HPP
#define U2NET_INIT_HPP

#include "u2net/rng.hpp"
#include "u2net/tensor.hpp"

namespace u2net {

// Xavier/Glorot uniform bound for a weight shape: sqrt(6 / (fan_in + fan_out)).
// Conv weights [O,I,kh,kw] use fan_in = I*kh*kw, fan_out = O*kh*kw;
// rank-2 weights [O,I] use fan_in = I, fan_out = O.
double xavier_bound(const Shape& shape);

// Weight tensor sampled uniformly from [-a, a] with the bound above.
// Deterministic for a fixed rng state.
template <typename T>
Tensor<T> xavier_init(Shape shape, Rng& rng, bool requires_grad = true);

} // namespace u2net

#endif
