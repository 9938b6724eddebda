#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "flowlab/rng.hpp"
#include "flowlab/tensor.hpp"

namespace flowlab::ad {

namespace detail {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first use
    bool requires_grad = false;
    bool is_leaf = false;
    bool consumed = false;  // backward already ran through this node
    std::vector<std::shared_ptr<Node>> parents;
    // Scatters this node's grad into the parents' grads.
    std::function<void(Node&)> backprop;

    Tensor& ensure_grad();
};

}  // namespace detail

// Handle to a node of the reverse-mode tape. Values are dense Tensors;
// the graph is built eagerly by the free functions below and consumed by
// backward(). Leaves created with requires_grad=true accumulate gradients
// across backward calls until zero_grad().
class Var {
 public:
    Var() = default;

    static Var leaf(Tensor value, bool requires_grad);
    static Var constant(Tensor value) { return leaf(std::move(value), false); }

    bool valid() const { return node_ != nullptr; }
    const Tensor& value() const;
    Tensor& mutable_value();  // in-place parameter updates (optimizer)
    const Tensor& grad() const;
    bool has_grad() const;
    bool requires_grad() const;
    void zero_grad();

    std::shared_ptr<detail::Node> node() const { return node_; }

 private:
    explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;

    friend Var make_op(Tensor value, std::vector<Var> parents,
                       std::function<void(detail::Node&)> backprop);
};

// --- graph-building operations -------------------------------------------

Var matmul(const Var& a, const Var& b);              // [m,k] x [k,n] -> [m,n]
Var add(const Var& a, const Var& b);                 // same shape
Var sub(const Var& a, const Var& b);                 // same shape
Var mul(const Var& a, const Var& b);                 // elementwise, same shape
Var add_rowvec(const Var& a, const Var& bias);       // [m,n] + [n] per row
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);
Var square(const Var& a);
Var sqrt_(const Var& a);
Var exp_(const Var& a);
Var log_(const Var& a);
Var silu(const Var& a);
Var relu(const Var& a);
Var tanh_(const Var& a);
Var sum_rows(const Var& a);                          // [m,n] -> [m]
Var mean_all(const Var& a);                          // -> scalar [1]
Var sum_all(const Var& a);                           // -> scalar [1]
// Elementwise product with a constant tensor of the same shape.
Var mul_const(const Var& a, const Tensor& c);
// Adds a constant tensor of the same shape.
Var add_const(const Var& a, const Tensor& c);
// Scales row i of [m,n] (or entry i of [m]) by col[i].
Var scale_rows(const Var& a, const Tensor& col);
// Circular convolution of each row with a symmetric kernel
// (kernel[r] is the center tap; length 2r+1).
Var circular_conv(const Var& a, std::span<const double> kernel);
// Inverted dropout on all entries; scales kept entries by 1/(1-p).
Var dropout(const Var& a, double p, Rng& rng);

// Runs reverse-mode accumulation from a scalar loss. The non-leaf part of
// the graph is consumed; calling backward twice on the same graph throws.
void backward(const Var& loss);

}  // namespace flowlab::ad
