#include "u2net/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace u2net {

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto e : shape) {
        if (e < 0) throw ConfigError("negative extent in shape " + shape_str(shape));
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace detail {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

template <typename T>
Tensor<T> make_result(Shape shape,
                      std::vector<T> values,
                      std::vector<Tensor<T>> parents,
                      std::function<void(TensorNode<T>&)> backward_fn) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw ConfigError("value buffer does not match shape " + shape_str(shape));

    auto node = std::make_shared<TensorNode<T>>();
    node->shape = std::move(shape);
    node->values = std::move(values);

    bool track = grad_enabled();
    if (track) {
        bool any = false;
        for (const auto& p : parents)
            if (p.defined() && p.requires_grad()) { any = true; break; }
        track = any;
    }
    if (track) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }

    Tensor<T> out;
    out.node() = std::move(node);
    return out;
}

template Tensor<float> make_result<float>(Shape, std::vector<float>,
                                          std::vector<Tensor<float>>,
                                          std::function<void(TensorNode<float>&)>);
template Tensor<double> make_result<double>(Shape, std::vector<double>,
                                            std::vector<Tensor<double>>,
                                            std::function<void(TensorNode<double>&)>);

} // namespace detail

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return from_data(std::move(shape), {}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    const auto n = shape_numel(shape);
    std::vector<T> v(static_cast<std::size_t>(n), value);
    return from_data(std::move(shape), std::move(v), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> values, bool requires_grad) {
    const auto n = shape_numel(shape);
    if (values.empty()) values.assign(static_cast<std::size_t>(n), T(0));
    if (static_cast<std::int64_t>(values.size()) != n)
        throw ConfigError("data length " + std::to_string(values.size()) +
                          " does not match shape " + shape_str(shape));
    auto node = std::make_shared<detail::TensorNode<T>>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    Tensor<T> t;
    t.node() = std::move(node);
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return from_data(Shape{1}, {value}, requires_grad);
}

template <typename T>
const Shape& Tensor<T>::shape() const {
    if (!node_) throw UsageError("shape() on undefined tensor");
    return node_->shape;
}

template <typename T>
std::int64_t Tensor<T>::numel() const {
    return static_cast<std::int64_t>(values().size());
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw UsageError("dim(" + std::to_string(axis) + ") out of range for " + shape_str(s));
    return s[static_cast<std::size_t>(axis)];
}

template <typename T>
int Tensor<T>::rank() const {
    return static_cast<int>(shape().size());
}

template <typename T>
std::span<T> Tensor<T>::values() {
    if (!node_) throw UsageError("values() on undefined tensor");
    return node_->values;
}

template <typename T>
std::span<const T> Tensor<T>::values() const {
    if (!node_) throw UsageError("values() on undefined tensor");
    return node_->values;
}

template <typename T>
bool Tensor<T>::requires_grad() const {
    return node_ && node_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
    if (!node_) throw UsageError("set_requires_grad() on undefined tensor");
    node_->requires_grad = on;
}

template <typename T>
std::span<T> Tensor<T>::grad() {
    if (!node_) throw UsageError("grad() on undefined tensor");
    return node_->grad_buffer();
}

template <typename T>
bool Tensor<T>::has_grad() const {
    return node_ && !node_->grad.empty();
}

template <typename T>
void Tensor<T>::zero_grad() {
    if (node_ && !node_->grad.empty())
        std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) throw UsageError("item() on tensor of " + std::to_string(numel()) + " elements");
    return values()[0];
}

template <typename T>
void Tensor<T>::backward() const {
    if (!node_) throw UsageError("backward() on undefined tensor");
    if (numel() != 1)
        throw UsageError("backward() requires a scalar, got " + shape_str(shape()));

    // Iterative post-order DFS; nodes come out children-before-parents, so
    // walking the list forward propagates grads in reverse topological order.
    std::vector<detail::TensorNode<T>*> order;
    std::unordered_set<const detail::TensorNode<T>*> seen;
    struct Frame {
        detail::TensorNode<T>* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (node_->requires_grad) stack.push_back({node_.get(), 0});
    seen.insert(node_.get());
    std::vector<detail::TensorNode<T>*> post;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            auto& parent = f.node->parents[f.next_parent++];
            if (parent.defined() && parent.requires_grad()) {
                auto* pn = parent.node().get();
                if (seen.insert(pn).second) stack.push_back({pn, 0});
            }
        } else {
            post.push_back(f.node);
            stack.pop_back();
        }
    }
    // post is children-first; reverse for root-first propagation.
    order.assign(post.rbegin(), post.rend());

    // Interior grads are scratch for this pass; only leaves (parameters,
    // inputs) accumulate across repeated backward() calls.
    for (auto* n : order) {
        if (n->backward_fn && !n->grad.empty())
            std::fill(n->grad.begin(), n->grad.end(), T(0));
    }

    node_->grad_buffer()[0] += T(1);
    for (auto* n : order) {
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace u2net
