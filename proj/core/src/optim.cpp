#include "sdrnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdrnet/errors.hpp"

namespace sdrnet {

void SdrDecayConfig::validate() const {
    if (alpha <= 0.0f) throw ConfigError("decay alpha must be positive");
    if (beta < 0.0f) throw ConfigError("decay beta must be nonnegative");
    if (zeta <= 0.0f || zeta > 1.0f) {
        throw ConfigError("decay zeta must lie in (0, 1]");
    }
    if (tau < 1) throw ConfigError("decay tau must be at least 1");
}

void sgd_step(Tensor& param, const Tensor& grad, float lr) {
    if (!param.same_shape(grad)) {
        throw DimensionError("sgd_step: param " + param.shape_str() +
                             " vs grad " + grad.shape_str());
    }
    axpy_inplace(param, -lr, grad);
}

void sdr_decay_step(StochasticParameter& param, const Tensor& grad_w,
                    const SdrDecayConfig& cfg) {
    sgd_step(param.mu, grad_w, cfg.alpha);
    if (!param.sigma.same_shape(grad_w)) {
        throw DimensionError("sdr_decay_step: sigma " +
                             param.sigma.shape_str() + " vs grad " +
                             grad_w.shape_str());
    }
    for (std::size_t i = 0; i < param.sigma.data.size(); ++i) {
        param.sigma.data[i] += cfg.beta * std::fabs(grad_w.data[i]);
    }
}

void sdr_decay_anneal(StochasticParameter& param, float zeta) {
    if (zeta <= 0.0f || zeta > 1.0f) {
        throw ContractError("anneal: zeta must lie in (0, 1]");
    }
    scale_inplace(param.sigma, zeta);
}

void sdr_learnable_step(StochasticParameter& param, const Tensor& grad_mu,
                        const Tensor& grad_sigma, float lr) {
    if (!param.stochastic()) {
        throw ContractError("sdr_learnable_step: parameter has no sigma");
    }
    if (grad_sigma.data.empty()) {
        throw ContractError("sdr_learnable_step: sigma gradient missing");
    }
    sgd_step(param.mu, grad_mu, lr);
    sgd_step(param.sigma, grad_sigma, lr);
}

void clamp_variances(StochasticParameter& param, float min_var,
                     float max_var) {
    if (min_var > max_var) {
        throw ConfigError("clamp: min_var " + std::to_string(min_var) +
                          " exceeds max_var " + std::to_string(max_var));
    }
    for (float& s : param.sigma.data) {
        s = std::clamp(s, min_var, max_var);
    }
}

void clamp_variances(Network& model, float min_var, float max_var) {
    for (auto& layer : model.layers) {
        if (!layer.weight.stochastic()) continue;
        clamp_variances(layer.weight, min_var, max_var);
        clamp_variances(layer.bias, min_var, max_var);
    }
}

void VarianceSchedule::Config::validate() const {
    if (initial_min < 0.0f || initial_min > initial_max) {
        throw ConfigError("schedule bounds must satisfy 0 <= min <= max");
    }
    if (increment < 0.0f) throw ConfigError("schedule increment negative");
    if (plateau_window < 1) throw ConfigError("plateau window must be >= 1");
    if (min_epochs_between_bumps < 1) {
        throw ConfigError("epochs between bumps must be >= 1");
    }
}

VarianceSchedule::VarianceSchedule(Config cfg)
    : cfg_(cfg), min_var_(cfg.initial_min), max_var_(cfg.initial_max) {
    cfg_.validate();
}

bool VarianceSchedule::observe(double test_accuracy_percent) {
    history_.push_back(test_accuracy_percent);
    if (!cfg_.enabled) return false;

    const int epoch = static_cast<int>(history_.size()) - 1;
    const int window = cfg_.plateau_window;
    if (static_cast<int>(history_.size()) <= window) return false;

    double best_recent = history_[history_.size() - 1];
    for (int i = 2; i <= window; ++i) {
        best_recent = std::max(best_recent, history_[history_.size() - i]);
    }
    double best_before = history_[0];
    for (std::size_t i = 1; i + static_cast<std::size_t>(window) < history_.size(); ++i) {
        best_before = std::max(best_before, history_[i]);
    }

    const bool plateau = best_recent - best_before < cfg_.plateau_threshold;
    const bool spaced = last_bump_epoch_ < 0 ||
                        epoch - last_bump_epoch_ >= cfg_.min_epochs_between_bumps;
    if (!plateau || !spaced) return false;

    min_var_ += cfg_.increment;
    max_var_ += cfg_.increment;
    ++bump_count_;
    last_bump_epoch_ = epoch;
    return true;
}

void VarianceSchedule::restore(float min_var, float max_var, int bump_count,
                               int last_bump_epoch) {
    min_var_ = min_var;
    max_var_ = max_var;
    bump_count_ = bump_count;
    last_bump_epoch_ = last_bump_epoch;
}

}  // namespace sdrnet
