#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "sdrnet/rng.hpp"
#include "sdrnet/tape.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {

enum class LayerKind { Linear, StochasticLinear, DropConnectLinear };
enum class Activation { None, Relu };

/// Sampled modes draw fresh weights (or dropconnect masks) on every call;
/// Mean is fully deterministic (w = mu, masks off). TrainDropConnect and
/// EvalDropConnect both resample masks; they are distinct labels because
/// run logs record which phase produced a result, not because the math
/// differs (masks stay on at evaluation time by design).
enum class ForwardMode { Sampled, Mean, TrainDropConnect, EvalDropConnect };

struct LayerSpec {
    int fan_in = 0;
    int fan_out = 0;
    LayerKind kind = LayerKind::StochasticLinear;
    Activation activation = Activation::Relu;
    float drop_p = 0.0f;  // DropConnectLinear only
};

/// A parameter tensor whose every element is an independent Gaussian with
/// learnable mean and standard deviation. sigma is empty for deterministic
/// parameters and elementwise nonnegative otherwise.
struct StochasticParameter {
    Tensor mu;
    Tensor sigma;

    bool stochastic() const { return !sigma.data.empty(); }
};

/// Draws w = mu + sigma * eps with eps standard normal per element and
/// returns (w, eps). Deterministic parameters return (mu, empty) and consume
/// no draws.
std::pair<Tensor, Tensor> sample_weights(const StochasticParameter& param,
                                         RngStream& rng);

struct DenseLayer {
    LayerSpec spec;
    StochasticParameter weight;  // fan_in x fan_out
    StochasticParameter bias;    // fan_out
};

/// One affine pass through a dropconnect layer: weights are independently
/// zeroed with probability spec.drop_p and survivors scaled by 1/(1-p), then
/// the layer activation applies. p=0 reduces to the plain linear layer.
Tensor dropconnect_forward(const DenseLayer& layer, const Tensor& x,
                           RngStream& rng);

/// Tape handles for one layer's parameter leaves, valid when the forward
/// pass was built with track_params=true. sigma ids are -1 for deterministic
/// parameters.
struct LayerNodes {
    NodeId w_mu = -1;
    NodeId w_sigma = -1;
    NodeId b_mu = -1;
    NodeId b_sigma = -1;
};

/// An ordered stack of dense layers. Adjacent dimensions must chain. The
/// model is plain data: immutable during evaluation (shareable read-only
/// across threads, each thread holding its own RngStream), single-writer
/// during training.
class Network {
public:
    Network() = default;

    /// Initializes means layer by layer from `init` (weight matrix first,
    /// then bias): weight mu ~ N(0, 2/fan_in), bias mu = 0. Stochastic
    /// layers get constant sigma_init everywhere, biases included.
    Network(std::vector<LayerSpec> specs, RngStream& init, float sigma_init);

    int input_features() const;
    int output_classes() const;
    bool stochastic() const;

    /// Builds the forward graph on `tape` from input node x (batch x
    /// input_features) and returns the logits node (batch x classes).
    /// Noise draw order per layer: weight eps then bias eps (stochastic
    /// layers), weight mask (dropconnect layers). With track_params=false
    /// parameters enter as constants, so backward reaches only the input;
    /// with true, `nodes` (if non-null) receives per-layer leaf handles.
    NodeId forward_tape(Tape& tape, NodeId x, ForwardMode mode, RngStream& rng,
                        bool track_params,
                        std::vector<LayerNodes>* nodes) const;

    /// Tape-free forward with identical semantics and draw order.
    Tensor forward_logits(const Tensor& x, ForwardMode mode,
                          RngStream& rng) const;

    std::size_t param_count() const;

    // Statistics over all sigma elements; zeros when no layer is stochastic.
    float min_sigma() const;
    float max_sigma() const;
    double mean_sigma() const;

    std::vector<DenseLayer> layers;
};

/// Layer stack for a relu MLP: input -> hidden... -> classes, with the given
/// kind applied to every layer and no activation after the last.
std::vector<LayerSpec> mlp_spec(LayerKind kind, int input_features,
                                const std::vector<int>& hidden_widths,
                                int classes, float drop_p = 0.0f);

}  // namespace sdrnet
