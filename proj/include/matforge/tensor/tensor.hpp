#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace matforge::tensor {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until a gradient reaches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Propagates this node's grad into its parents. Empty for leaves.
    std::function<void()> backward;
};

} // namespace detail

// Reference-counted handle to a dense row-major array. Copies share storage;
// operations in ops.hpp never modify their inputs and return fresh tensors,
// recording a backward closure when any input requires a gradient and
// gradient recording is enabled on the calling thread.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    static BasicTensor zeros(Shape shape, bool requires_grad = false);
    static BasicTensor full(Shape shape, T value, bool requires_grad = false);
    static BasicTensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->data.size(); }

    std::span<const T> data() const { return node_->data; }
    // Writable view for leaf tensors (parameters, inputs being built).
    std::span<T> mutable_data() { return node_->data; }
    T item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool value) { node_->requires_grad = value; }

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad();
    void clear_grad() { node_->grad.clear(); }

    // Same values, no history, requires_grad false.
    BasicTensor detach() const;
    // Deep copy of values (and requires_grad flag), no history.
    BasicTensor clone() const;

    // Internal: used by ops and the backward pass.
    explicit BasicTensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
    const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node<T>> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Accumulates d(loss)/d(x) into the grad of every reachable tensor that
// requires one. The loss must hold exactly one element. The recorded graph
// is released afterwards, so backward runs at most once per graph.
template <typename T>
void backward(const BasicTensor<T>& loss);

bool grad_enabled() noexcept;

// Disables gradient recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

} // namespace matforge::tensor
