#include "sdrnet/tape.hpp"

#include <algorithm>
#include <cmath>

#include "sdrnet/errors.hpp"

namespace sdrnet {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(who) + ": shapes " + a.shape_str() +
                             " and " + b.shape_str() + " differ");
    }
}

}  // namespace

NodeId Tape::push(Node node) {
    if (node.tracked && node.grad.empty()) {
        node.grad = Tensor(node.value.shape);
    }
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node_at(NodeId id, const char* who) const {
    if (id < 0 || id >= size()) {
        throw ContractError(std::string(who) + ": node id " +
                            std::to_string(id) + " is not on this tape");
    }
    return nodes_[static_cast<std::size_t>(id)];
}

NodeId Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.tracked = true;
    return push(std::move(n));
}

NodeId Tape::constant(Tensor value) {
    Node n;
    n.op = Op::Const;
    n.value = std::move(value);
    n.tracked = false;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Node& na = node_at(a, "add");
    const Node& nb = node_at(b, "add");
    require_same_shape(na.value, nb.value, "add");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.tracked = na.tracked || nb.tracked;
    n.value = na.value;
    add_inplace(n.value, nb.value);
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Node& na = node_at(a, "sub");
    const Node& nb = node_at(b, "sub");
    require_same_shape(na.value, nb.value, "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.tracked = na.tracked || nb.tracked;
    n.value = na.value;
    axpy_inplace(n.value, -1.0f, nb.value);
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Node& na = node_at(a, "mul");
    const Node& nb = node_at(b, "mul");
    require_same_shape(na.value, nb.value, "mul");
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.tracked = na.tracked || nb.tracked;
    n.value = na.value;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
        n.value.data[i] *= nb.value.data[i];
    }
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, float s) {
    const Node& na = node_at(a, "scale");
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.scalar = s;
    n.tracked = na.tracked;
    n.value = na.value;
    scale_inplace(n.value, s);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Node& na = node_at(a, "matmul");
    const Node& nb = node_at(b, "matmul");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.tracked = na.tracked || nb.tracked;
    n.value = sdrnet::matmul(na.value, nb.value);
    return push(std::move(n));
}

NodeId Tape::add_row(NodeId a, NodeId row) {
    const Node& na = node_at(a, "add_row");
    const Node& nr = node_at(row, "add_row");
    if (nr.value.numel() != na.value.cols()) {
        throw DimensionError("add_row: row has " +
                             std::to_string(nr.value.numel()) +
                             " elements but matrix is " + na.value.shape_str());
    }
    Node n;
    n.op = Op::AddRow;
    n.a = a;
    n.b = row;
    n.tracked = na.tracked || nr.tracked;
    n.value = na.value;
    const int rows = n.value.rows();
    const int cols = n.value.cols();
    for (int r = 0; r < rows; ++r) {
        float* out = n.value.row_ptr(r);
        for (int c = 0; c < cols; ++c) out[c] += nr.value.data[c];
    }
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    const Node& na = node_at(a, "relu");
    Node n;
    n.op = Op::Relu;
    n.a = a;
    n.tracked = na.tracked;
    n.value = na.value;
    for (float& v : n.value.data) v = v > 0.0f ? v : 0.0f;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    const Node& na = node_at(a, "sum");
    Node n;
    n.op = Op::Sum;
    n.a = a;
    n.tracked = na.tracked;
    double total = 0.0;
    for (float v : na.value.data) total += v;
    n.value = Tensor::scalar(static_cast<float>(total));
    return push(std::move(n));
}

NodeId Tape::gauss_reparam(NodeId mu, NodeId sigma, Tensor eps) {
    const Node& nm = node_at(mu, "gauss_reparam");
    const Node& ns = node_at(sigma, "gauss_reparam");
    require_same_shape(nm.value, ns.value, "gauss_reparam");
    require_same_shape(nm.value, eps, "gauss_reparam");
    for (float s : ns.value.data) {
        if (s < 0.0f) {
            throw ContractError("gauss_reparam: sigma has negative entries");
        }
    }
    Node n;
    n.op = Op::GaussReparam;
    n.a = mu;
    n.b = sigma;
    n.tracked = nm.tracked || ns.tracked;
    n.aux = std::move(eps);
    n.value = nm.value;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
        n.value.data[i] += ns.value.data[i] * n.aux.data[i];
    }
    return push(std::move(n));
}

NodeId Tape::mul_const(NodeId a, Tensor mask) {
    const Node& na = node_at(a, "mul_const");
    require_same_shape(na.value, mask, "mul_const");
    Node n;
    n.op = Op::MulConst;
    n.a = a;
    n.tracked = na.tracked;
    n.aux = std::move(mask);
    n.value = na.value;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
        n.value.data[i] *= n.aux.data[i];
    }
    return push(std::move(n));
}

NodeId Tape::softmax_xent(NodeId logits, std::vector<int> labels) {
    const Node& nl = node_at(logits, "softmax_xent");
    const int batch = nl.value.rows();
    const int classes = nl.value.cols();
    if (static_cast<int>(labels.size()) != batch) {
        throw DimensionError("softmax_xent: " + std::to_string(labels.size()) +
                             " labels for batch of " + std::to_string(batch));
    }
    Node n;
    n.op = Op::SoftmaxXent;
    n.a = logits;
    n.tracked = nl.tracked;
    n.labels = std::move(labels);
    n.aux = Tensor({batch, classes});

    double loss = 0.0;
    for (int r = 0; r < batch; ++r) {
        const int label = n.labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= classes) {
            throw DataError("softmax_xent: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
        }
        const float* in = nl.value.row_ptr(r);
        float row_max = in[0];
        for (int c = 1; c < classes; ++c) row_max = std::max(row_max, in[c]);
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) {
            denom += std::exp(static_cast<double>(in[c]) - row_max);
        }
        float* prob = n.aux.row_ptr(r);
        for (int c = 0; c < classes; ++c) {
            prob[c] = static_cast<float>(
                std::exp(static_cast<double>(in[c]) - row_max) / denom);
        }
        loss -= static_cast<double>(in[label]) - row_max - std::log(denom);
    }
    n.value = Tensor::scalar(static_cast<float>(loss / batch));
    return push(std::move(n));
}

const Tensor& Tape::value(NodeId id) const { return node_at(id, "value").value; }

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = node_at(id, "grad");
    if (!n.tracked) {
        throw ContractError("grad: node " + std::to_string(id) +
                            " does not track gradients");
    }
    return n.grad;
}

const Tensor& Tape::softmax_of(NodeId xent_id) const {
    const Node& n = node_at(xent_id, "softmax_of");
    if (n.op != Op::SoftmaxXent) {
        throw ContractError("softmax_of: node " + std::to_string(xent_id) +
                            " is not a softmax_xent node");
    }
    return n.aux;
}

void Tape::backward(NodeId root) {
    const Node& n = node_at(root, "backward");
    if (n.value.numel() != 1) {
        throw ContractError("backward: root has shape " + n.value.shape_str() +
                            "; seedless backward needs a scalar");
    }
    backward(root, Tensor::scalar(1.0f));
}

void Tape::backward(NodeId root, const Tensor& seed) {
    node_at(root, "backward");
    Node& root_node = nodes_[static_cast<std::size_t>(root)];
    if (!root_node.tracked) {
        throw ContractError("backward: root does not track gradients");
    }
    require_same_shape(root_node.value, seed, "backward seed");

    for (Node& n : nodes_) {
        if (n.tracked) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0f);
    }
    root_node.grad = seed;

    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.tracked || n.op == Op::Leaf || n.op == Op::Const) continue;
        accumulate_inputs(n);
    }
}

void Tape::accumulate_inputs(Node& n) {
    const Tensor& g = n.grad;
    auto tracked = [this](NodeId id) {
        return id >= 0 && nodes_[static_cast<std::size_t>(id)].tracked;
    };
    auto grad_of = [this](NodeId id) -> Tensor& {
        return nodes_[static_cast<std::size_t>(id)].grad;
    };
    auto value_of = [this](NodeId id) -> const Tensor& {
        return nodes_[static_cast<std::size_t>(id)].value;
    };

    switch (n.op) {
        case Op::Add:
            if (tracked(n.a)) add_inplace(grad_of(n.a), g);
            if (tracked(n.b)) add_inplace(grad_of(n.b), g);
            break;
        case Op::Sub:
            if (tracked(n.a)) add_inplace(grad_of(n.a), g);
            if (tracked(n.b)) axpy_inplace(grad_of(n.b), -1.0f, g);
            break;
        case Op::Mul:
            if (tracked(n.a)) {
                Tensor& ga = grad_of(n.a);
                const Tensor& vb = value_of(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    ga.data[i] += g.data[i] * vb.data[i];
                }
            }
            if (tracked(n.b)) {
                Tensor& gb = grad_of(n.b);
                const Tensor& va = value_of(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    gb.data[i] += g.data[i] * va.data[i];
                }
            }
            break;
        case Op::Scale:
            if (tracked(n.a)) axpy_inplace(grad_of(n.a), n.scalar, g);
            break;
        case Op::MatMul:
            if (tracked(n.a)) matmul_grad_a(g, value_of(n.b), grad_of(n.a));
            if (tracked(n.b)) matmul_grad_b(value_of(n.a), g, grad_of(n.b));
            break;
        case Op::AddRow:
            if (tracked(n.a)) add_inplace(grad_of(n.a), g);
            if (tracked(n.b)) {
                Tensor& gr = grad_of(n.b);
                const int rows = g.rows();
                const int cols = g.cols();
                for (int r = 0; r < rows; ++r) {
                    const float* gin = g.row_ptr(r);
                    for (int c = 0; c < cols; ++c) gr.data[c] += gin[c];
                }
            }
            break;
        case Op::Relu:
            if (tracked(n.a)) {
                Tensor& ga = grad_of(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    if (n.value.data[i] > 0.0f) ga.data[i] += g.data[i];
                }
            }
            break;
        case Op::Sum:
            if (tracked(n.a)) {
                Tensor& ga = grad_of(n.a);
                const float gv = g.data[0];
                for (float& v : ga.data) v += gv;
            }
            break;
        case Op::GaussReparam:
            if (tracked(n.a)) add_inplace(grad_of(n.a), g);
            if (tracked(n.b)) {
                Tensor& gs = grad_of(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    gs.data[i] += g.data[i] * n.aux.data[i];
                }
            }
            break;
        case Op::MulConst:
            if (tracked(n.a)) {
                Tensor& ga = grad_of(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    ga.data[i] += g.data[i] * n.aux.data[i];
                }
            }
            break;
        case Op::SoftmaxXent: {
            if (!tracked(n.a)) break;
            Tensor& gl = grad_of(n.a);
            const int batch = n.aux.rows();
            const int classes = n.aux.cols();
            const float gv = g.data[0];
            const float inv_batch = 1.0f / static_cast<float>(batch);
            for (int r = 0; r < batch; ++r) {
                const float* prob = n.aux.row_ptr(r);
                float* out = gl.row_ptr(r);
                const int label = n.labels[static_cast<std::size_t>(r)];
                for (int c = 0; c < classes; ++c) {
                    const float delta = (c == label) ? 1.0f : 0.0f;
                    out[c] += gv * (prob[c] - delta) * inv_batch;
                }
            }
            break;
        }
        case Op::Leaf:
        case Op::Const:
            break;
    }
}

}  // namespace sdrnet
