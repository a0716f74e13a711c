#ifndef U2NET_TENSOR_HPP
#define U2NET_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "u2net/error.hpp"

namespace u2net {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

template <typename T>
struct TensorNode;

// Thread-local switch: when gradients are disabled, ops produce plain
// tensors with no parents and no backward function.
bool grad_enabled();
void set_grad_enabled(bool on);

} // namespace detail

// RAII guard disabling graph construction (inference / evaluation paths).
class NoGradGuard {
public:
    NoGradGuard() : prev_(detail::grad_enabled()) { detail::set_grad_enabled(false); }
    ~NoGradGuard() { detail::set_grad_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Dense N-dimensional array of T (float in training mode, double in
// oracle/test mode), row-major, participating in a reverse-mode graph.
// Tensor is a cheap shared handle; copies alias the same storage.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }

    const Shape& shape() const;
    std::int64_t numel() const;
    std::int64_t dim(int axis) const;
    int rank() const;

    std::span<T> values();
    std::span<const T> values() const;

    bool requires_grad() const;
    void set_requires_grad(bool on);

    // Gradient buffer, allocated (zero-filled) on first access.
    std::span<T> grad();
    bool has_grad() const;
    void zero_grad();

    // Scalar value of a 1-element tensor.
    T item() const;

    // Reverse-mode accumulation from this scalar. Grads of every reachable
    // tensor with requires_grad are incremented; repeated calls without
    // zero_grad() accumulate.
    void backward() const;

    // Graph internals, used by op implementations.
    std::shared_ptr<detail::TensorNode<T>>& node() { return node_; }
    const std::shared_ptr<detail::TensorNode<T>>& node() const { return node_; }

private:
    std::shared_ptr<detail::TensorNode<T>> node_;
};

namespace detail {

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;          // empty until touched
    bool requires_grad = false;
    std::vector<Tensor<T>> parents;
    std::function<void(TensorNode<T>&)> backward_fn;

    std::span<T> grad_buffer() {
        if (grad.empty()) grad.assign(values.size(), T(0));
        return grad;
    }
};

// Builds an op result node. `parents` keeps the inputs (and their forward
// buffers) alive until backward has run; `backward_fn` reads the node's
// grad and accumulates into the parents. Both are dropped when gradients
// are globally disabled or no parent needs them.
template <typename T>
Tensor<T> make_result(Shape shape,
                      std::vector<T> values,
                      std::vector<Tensor<T>> parents,
                      std::function<void(TensorNode<T>&)> backward_fn);

} // namespace detail

} // namespace u2net

#endif
