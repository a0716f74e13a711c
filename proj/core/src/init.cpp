#include "u2net/init.hpp"

#include <cmath>

namespace u2net {

double Rng::normal() {
    const double u1 = uniform(1e-12, 1.0);
    const double u2 = uniform(0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double xavier_bound(const Shape& shape) {
    if (shape.size() < 2) throw ConfigError("xavier_bound: need a weight shape, got " + shape_str(shape));
    std::int64_t receptive = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
    const auto fan_in = static_cast<double>(shape[1] * receptive);
    const auto fan_out = static_cast<double>(shape[0] * receptive);
    return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename T>
Tensor<T> xavier_init(Shape shape, Rng& rng, bool requires_grad) {
    const double a = xavier_bound(shape);
    const auto n = shape_numel(shape);
    std::vector<T> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = static_cast<T>(rng.uniform(-a, a));
    return Tensor<T>::from_data(std::move(shape), std::move(v), requires_grad);
}

template Tensor<float> xavier_init<float>(Shape, Rng&, bool);
template Tensor<double> xavier_init<double>(Shape, Rng&, bool);

} // namespace u2net
