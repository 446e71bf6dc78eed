#include "sdrnet/model.hpp"

#include <cmath>
#include <string>

#include "sdrnet/errors.hpp"

namespace sdrnet {

namespace {

void validate_spec(const LayerSpec& spec, std::size_t index) {
    if (spec.fan_in <= 0 || spec.fan_out <= 0) {
        throw ConfigError("layer " + std::to_string(index) +
                          ": fan_in and fan_out must be positive");
    }
    if (spec.kind == LayerKind::DropConnectLinear &&
        (spec.drop_p < 0.0f || spec.drop_p >= 1.0f)) {
        throw ContractError("layer " + std::to_string(index) +
                            ": drop probability " +
                            std::to_string(spec.drop_p) + " outside [0, 1)");
    }
}

bool samples_noise(ForwardMode mode) { return mode != ForwardMode::Mean; }

void relu_inplace(Tensor& t) {
    for (float& v : t.data) v = v > 0.0f ? v : 0.0f;
}

NodeId leaf_or_const(Tape& tape, const Tensor& value, bool track) {
    return track ? tape.leaf(value) : tape.constant(value);
}

}  // namespace

std::pair<Tensor, Tensor> sample_weights(const StochasticParameter& param,
                                         RngStream& rng) {
    if (!param.stochastic()) return {param.mu, Tensor{}};
    Tensor eps(param.mu.shape);
    rng.fill_normal(eps.data);
    Tensor w = param.mu;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const float s = param.sigma.data[i];
        if (s < 0.0f) {
            throw ContractError("sample_weights: sigma has negative entries");
        }
        w.data[i] += s * eps.data[i];
    }
    return {std::move(w), std::move(eps)};
}

Tensor dropconnect_forward(const DenseLayer& layer, const Tensor& x,
                           RngStream& rng) {
    const float p = layer.spec.drop_p;
    if (p < 0.0f || p >= 1.0f) {
        throw ContractError("dropconnect_forward: drop probability " +
                            std::to_string(p) + " outside [0, 1)");
    }
    Tensor w = layer.weight.mu;
    if (p > 0.0f) {
        Tensor mask(w.shape);
        rng.fill_dropconnect_mask(mask.data, p);
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            w.data[i] *= mask.data[i];
        }
    }
    Tensor out = matmul(x, w);
    const int rows = out.rows();
    const int cols = out.cols();
    for (int r = 0; r < rows; ++r) {
        float* row = out.row_ptr(r);
        for (int c = 0; c < cols; ++c) row[c] += layer.bias.mu.data[c];
    }
    if (layer.spec.activation == Activation::Relu) relu_inplace(out);
    return out;
}

Network::Network(std::vector<LayerSpec> specs, RngStream& init,
                 float sigma_init) {
    if (specs.empty()) throw ConfigError("network needs at least one layer");
    if (sigma_init < 0.0f) {
        throw ConfigError("sigma_init must be nonnegative");
    }
    layers.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        validate_spec(specs[i], i);
        if (i > 0 && specs[i].fan_in != specs[i - 1].fan_out) {
            throw ConfigError("layer " + std::to_string(i) + " expects " +
                              std::to_string(specs[i].fan_in) +
                              " inputs but layer " + std::to_string(i - 1) +
                              " produces " +
                              std::to_string(specs[i - 1].fan_out));
        }
        DenseLayer layer;
        layer.spec = specs[i];
        layer.weight.mu = Tensor({specs[i].fan_in, specs[i].fan_out});
        init.fill_normal(layer.weight.mu.data);
        const float stddev =
            std::sqrt(2.0f / static_cast<float>(specs[i].fan_in));
        scale_inplace(layer.weight.mu, stddev);
        layer.bias.mu = Tensor({specs[i].fan_out});
        if (specs[i].kind == LayerKind::StochasticLinear) {
            layer.weight.sigma = Tensor(layer.weight.mu.shape, sigma_init);
            layer.bias.sigma = Tensor(layer.bias.mu.shape, sigma_init);
        }
        layers.push_back(std::move(layer));
    }
}

int Network::input_features() const { return layers.front().spec.fan_in; }

int Network::output_classes() const { return layers.back().spec.fan_out; }

bool Network::stochastic() const {
    for (const auto& layer : layers) {
        if (layer.weight.stochastic()) return true;
    }
    return false;
}

NodeId Network::forward_tape(Tape& tape, NodeId x, ForwardMode mode,
                             RngStream& rng, bool track_params,
                             std::vector<LayerNodes>* nodes) const {
    if (tape.value(x).cols() != input_features()) {
        throw DimensionError("forward: input has " +
                             std::to_string(tape.value(x).cols()) +
                             " features, model expects " +
                             std::to_string(input_features()));
    }
    if (nodes) nodes->clear();
    NodeId h = x;
    for (const auto& layer : layers) {
        LayerNodes ln;
        NodeId w;
        NodeId b;
        const bool noisy = samples_noise(mode);
        if (layer.spec.kind == LayerKind::StochasticLinear && noisy) {
            ln.w_mu = leaf_or_const(tape, layer.weight.mu, track_params);
            ln.w_sigma =
                leaf_or_const(tape, layer.weight.sigma, track_params);
            Tensor w_eps(layer.weight.mu.shape);
            rng.fill_normal(w_eps.data);
            w = tape.gauss_reparam(ln.w_mu, ln.w_sigma, std::move(w_eps));
            ln.b_mu = leaf_or_const(tape, layer.bias.mu, track_params);
            ln.b_sigma =
                leaf_or_const(tape, layer.bias.sigma, track_params);
            Tensor b_eps(layer.bias.mu.shape);
            rng.fill_normal(b_eps.data);
            b = tape.gauss_reparam(ln.b_mu, ln.b_sigma, std::move(b_eps));
        } else if (layer.spec.kind == LayerKind::DropConnectLinear && noisy &&
                   layer.spec.drop_p > 0.0f) {
            ln.w_mu = leaf_or_const(tape, layer.weight.mu, track_params);
            Tensor mask(layer.weight.mu.shape);
            rng.fill_dropconnect_mask(mask.data, layer.spec.drop_p);
            w = tape.mul_const(ln.w_mu, std::move(mask));
            ln.b_mu = leaf_or_const(tape, layer.bias.mu, track_params);
            b = ln.b_mu;
        } else {
            ln.w_mu = leaf_or_const(tape, layer.weight.mu, track_params);
            w = ln.w_mu;
            ln.b_mu = leaf_or_const(tape, layer.bias.mu, track_params);
            b = ln.b_mu;
        }
        h = tape.matmul(h, w);
        h = tape.add_row(h, b);
        if (layer.spec.activation == Activation::Relu) h = tape.relu(h);
        if (nodes) nodes->push_back(ln);
    }
    return h;
}

Tensor Network::forward_logits(const Tensor& x, ForwardMode mode,
                               RngStream& rng) const {
    if (x.cols() != input_features()) {
        throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                             " features, model expects " +
                             std::to_string(input_features()));
    }
    Tensor h = x;
    Tensor out;
    const bool noisy = samples_noise(mode);
    for (const auto& layer : layers) {
        if (layer.spec.kind == LayerKind::DropConnectLinear && noisy) {
            h = dropconnect_forward(layer, h, rng);
            continue;
        }
        Tensor w;
        if (layer.spec.kind == LayerKind::StochasticLinear && noisy) {
            w = sample_weights(layer.weight, rng).first;
        } else {
            w = layer.weight.mu;
        }
        Tensor b;
        if (layer.spec.kind == LayerKind::StochasticLinear && noisy) {
            b = sample_weights(layer.bias, rng).first;
        } else {
            b = layer.bias.mu;
        }
        matmul_into(h, w, out);
        const int rows = out.rows();
        const int cols = out.cols();
        for (int r = 0; r < rows; ++r) {
            float* row = out.row_ptr(r);
            for (int c = 0; c < cols; ++c) row[c] += b.data[c];
        }
        if (layer.spec.activation == Activation::Relu) relu_inplace(out);
        h = out;
    }
    return h;
}

std::size_t Network::param_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers) {
        count += layer.weight.mu.data.size() + layer.bias.mu.data.size();
        count += layer.weight.sigma.data.size() + layer.bias.sigma.data.size();
    }
    return count;
}

float Network::min_sigma() const {
    float lo = 0.0f;
    bool seen = false;
    for (const auto& layer : layers) {
        for (const Tensor* s : {&layer.weight.sigma, &layer.bias.sigma}) {
            for (float v : s->data) {
                lo = seen ? std::min(lo, v) : v;
                seen = true;
            }
        }
    }
    return lo;
}

float Network::max_sigma() const {
    float hi = 0.0f;
    bool seen = false;
    for (const auto& layer : layers) {
        for (const Tensor* s : {&layer.weight.sigma, &layer.bias.sigma}) {
            for (float v : s->data) {
                hi = seen ? std::max(hi, v) : v;
                seen = true;
            }
        }
    }
    return hi;
}

double Network::mean_sigma() const {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& layer : layers) {
        for (const Tensor* s : {&layer.weight.sigma, &layer.bias.sigma}) {
            for (float v : s->data) total += v;
            count += s->data.size();
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::vector<LayerSpec> mlp_spec(LayerKind kind, int input_features,
                                const std::vector<int>& hidden_widths,
                                int classes, float drop_p) {
    std::vector<LayerSpec> specs;
    int in = input_features;
    for (int width : hidden_widths) {
        specs.push_back({in, width, kind, Activation::Relu, drop_p});
        in = width;
    }
    specs.push_back({in, classes, kind, Activation::None, drop_p});
    return specs;
}

}  // namespace sdrnet
