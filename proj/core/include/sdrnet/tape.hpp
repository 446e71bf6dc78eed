#pragma once

#include <vector>

#include "sdrnet/tensor.hpp"

namespace sdrnet {

using NodeId = int;

/// Define-by-run reverse-mode autodiff tape.
///
/// Every op records a node holding its output value; creation order is the
/// topological order, so the reverse pass is a single backward sweep over the
/// node array. Gradients accumulate into per-node buffers and are reset at
/// the start of every backward() call, so one tape supports repeated backward
/// passes with different seeds (used for per-class input gradients).
///
/// Gradients flow only into subgraphs rooted at leaf() nodes; constant()
/// values and op aux data (masks, noise draws, labels) are treated as fixed.
class Tape {
public:
    // Gradient-tracked leaf (parameter or attacked input).
    NodeId leaf(Tensor value);
    // Fixed value; no gradient buffer, backward never visits it.
    NodeId constant(Tensor value);

    NodeId add(NodeId a, NodeId b);   // same shape
    NodeId sub(NodeId a, NodeId b);   // same shape
    NodeId mul(NodeId a, NodeId b);   // same shape, elementwise
    NodeId scale(NodeId a, float s);
    NodeId matmul(NodeId a, NodeId b);
    // a is rank 2, row is rank 1 with a.cols() elements; adds row to every row.
    NodeId add_row(NodeId a, NodeId row);
    NodeId relu(NodeId a);
    NodeId sum(NodeId a);  // scalar

    /// mu + sigma * eps elementwise, with eps a fixed noise draw. Backward
    /// sends the incoming gradient to mu unchanged and gradient * eps to
    /// sigma, which is exactly the gradient at the sampled weight. All
    /// sigma entries must be nonnegative.
    NodeId gauss_reparam(NodeId mu, NodeId sigma, Tensor eps);

    // Elementwise product with a fixed tensor (dropconnect masks).
    NodeId mul_const(NodeId a, Tensor mask);

    /// Mean softmax cross-entropy over the batch; logits are rank 2
    /// (batch x classes), labels.size() == batch. Produces a scalar. The
    /// softmax matrix is cached and readable via softmax_of().
    NodeId softmax_xent(NodeId logits, std::vector<int> labels);

    const Tensor& value(NodeId id) const;
    // Accumulated gradient from the most recent backward(). Zero tensor for
    // gradient-tracked nodes the seed does not reach.
    const Tensor& grad(NodeId id) const;
    // Softmax probabilities cached by a softmax_xent node.
    const Tensor& softmax_of(NodeId xent_id) const;

    /// Reverse pass from a scalar root with seed gradient 1.
    void backward(NodeId root);
    /// Reverse pass from an arbitrary node with an explicit seed of the same
    /// shape. Clears all gradient buffers first.
    void backward(NodeId root, const Tensor& seed);

    int size() const { return static_cast<int>(nodes_.size()); }

private:
    enum class Op {
        Leaf,
        Const,
        Add,
        Sub,
        Mul,
        Scale,
        MatMul,
        AddRow,
        Relu,
        Sum,
        GaussReparam,
        MulConst,
        SoftmaxXent,
    };

    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        Tensor value;
        Tensor grad;            // allocated only when tracked
        Tensor aux;             // eps / mask / cached softmax
        std::vector<int> labels;
        float scalar = 0.0f;
        bool tracked = false;   // reachable from a leaf
    };

    NodeId push(Node node);
    const Node& node_at(NodeId id, const char* who) const;
    void accumulate_inputs(Node& n);

    std::vector<Node> nodes_;
};

}  // namespace sdrnet
