#include "matforge/tensor/tensor.hpp"

#include "matforge/core/error.hpp"

#include <sstream>
#include <unordered_set>

namespace matforge::tensor {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t element_count(const Shape& shape) noexcept
{
    std::size_t n = 1;
    for (auto e : shape) {
        n *= e;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "x" : "") << shape[i];
    }
    out << ']';
    return out.str();
}

bool grad_enabled() noexcept
{
    return t_grad_enabled;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled)
{
    t_grad_enabled = false;
}

NoGradGuard::~NoGradGuard()
{
    t_grad_enabled = previous_;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad)
{
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad)
{
    for (auto e : shape) {
        if (e == 0) {
            throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
        }
    }
    auto node = std::make_shared<detail::Node<T>>();
    node->data.assign(element_count(shape), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad)
{
    for (auto e : shape) {
        if (e == 0) {
            throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
        }
    }
    if (element_count(shape) != data.size()) {
        throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_string(shape));
    }
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return BasicTensor(std::move(node));
}

template <typename T>
T BasicTensor<T>::item() const
{
    if (numel() != 1) {
        throw ShapeError("item() needs a single-element tensor, got " + shape_string(shape()));
    }
    return node_->data[0];
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad()
{
    if (node_->grad.empty()) {
        node_->grad.assign(node_->data.size(), T(0));
    }
    return node_->grad;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const
{
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = node_->shape;
    node->data = node_->data;
    return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const
{
    auto copy = detach();
    copy.set_requires_grad(requires_grad());
    return copy;
}

template <typename T>
void backward(const BasicTensor<T>& loss)
{
    if (!loss.defined() || loss.numel() != 1) {
        throw ShapeError("backward() needs a scalar loss, got " +
                         (loss.defined() ? shape_string(loss.shape()) : std::string("undefined tensor")));
    }
    using NodePtr = detail::Node<T>*;

    // Iterative post-order DFS: parents precede children in `order`.
    std::vector<NodePtr> order;
    std::unordered_set<NodePtr> visited;
    std::vector<std::pair<NodePtr, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            NodePtr parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    auto* root = loss.node().get();
    if (root->grad.empty()) {
        root->grad.assign(1, T(0));
    }
    root->grad[0] += T(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodePtr node = *it;
        if (node->backward && !node->grad.empty()) {
            node->backward();
        }
    }
    for (NodePtr node : order) {
        if (node->backward) {
            node->backward = nullptr;
            node->parents.clear();
        }
    }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward<float>(const BasicTensor<float>&);
template void backward<double>(const BasicTensor<double>&);

} // namespace matforge::tensor
