#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedae/tensor.hpp"

namespace fedae {

template <typename T>
class Tape;

/// Handle to a node recorded on a Tape.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const BasicTensor<T>& value() const { return tape->value(*this); }
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const { return value().requires_grad(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the reverse
/// of insertion order is a valid topological order for backpropagation.
/// Single-threaded; use one tape per worker.
template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Records a leaf; gradients accumulate into it if value.requires_grad().
    Var<T> leaf(BasicTensor<T> value) {
        value.clear_grad();
        nodes_.push_back(Node{std::move(value), {}});
        return Var<T>{this, nodes_.size() - 1};
    }

    Var<T> constant(BasicTensor<T> value) {
        value.set_requires_grad(false);
        return leaf(std::move(value));
    }

    /// Records an op result. The backward function is kept only when some
    /// input needs a gradient.
    Var<T> record(BasicTensor<T> value, bool needs_grad, BackwardFn backward) {
        value.set_requires_grad(needs_grad);
        nodes_.push_back(Node{std::move(value), needs_grad ? std::move(backward) : BackwardFn{}});
        return Var<T>{this, nodes_.size() - 1};
    }

    const BasicTensor<T>& value(Var<T> v) const { return nodes_.at(v.id).tensor; }
    BasicTensor<T>& tensor(std::size_t id) { return nodes_.at(id).tensor; }

    /// Gradient of node `id`, allocated on first use; empty span if the node
    /// does not take gradients.
    std::span<T> grad_sink(std::size_t id) {
        auto& t = nodes_.at(id).tensor;
        if (!t.requires_grad()) return {};
        return t.ensure_grad();
    }

    std::span<const T> grad(Var<T> v) const { return nodes_.at(v.id).tensor.grad(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates to every node recorded before it.
    void backward(Var<T> loss) {
        auto& root = nodes_.at(loss.id).tensor;
        if (root.size() != 1) {
            throw ShapeError("backward: loss must be a scalar, got shape " + shape_string(root.shape()));
        }
        if (!root.requires_grad()) return;
        root.ensure_grad()[0] = T{1};
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            auto& node = nodes_[i];
            if (node.backward && node.tensor.has_grad()) node.backward(*this, i);
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        BasicTensor<T> tensor;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

/// Layer and loss ops. Each records its result on the inputs' tape.
namespace ops {

/// input [batch, ch_in, len], weight [ch_out, ch_in, k], bias [ch_out].
template <typename T>
Var<T> conv1d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding);

/// input [batch, ch_in, len], weight [ch_in, ch_out, k], bias [ch_out].
template <typename T>
Var<T> conv1d_transposed(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding,
                         std::size_t output_padding);

/// input [batch, in], weight [out, in], bias [out].
template <typename T>
Var<T> linear(Var<T> input, Var<T> weight, Var<T> bias);

template <typename T>
Var<T> relu(Var<T> input);

template <typename T>
Var<T> reshape(Var<T> input, Shape shape);

template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> sum(Var<T> input);

/// Mean of squared differences over all elements.
template <typename T>
Var<T> mse_loss(Var<T> pred, Var<T> target);

/// mean_i class_weights[label_i] * -log softmax(logits_i)[label_i].
template <typename T>
Var<T> weighted_softmax_cross_entropy(Var<T> logits, std::span<const int> labels, std::span<const T> class_weights);

}  // namespace ops

std::size_t conv1d_output_length(std::size_t len, std::size_t kernel, std::size_t stride, std::size_t padding);
std::size_t conv1d_transposed_output_length(std::size_t len, std::size_t kernel, std::size_t stride,
                                            std::size_t padding, std::size_t output_padding);

}  // namespace fedae
