#pragma once

#include <vector>

#include "sdrnet/model.hpp"
#include "sdrnet/tensor.hpp"

namespace sdrnet {

/// Settings for the decay update rule: the mean moves down the gradient
/// while sigma grows with the gradient magnitude and shrinks by zeta every
/// tau batches.
struct SdrDecayConfig {
    float alpha = 0.01f;  // mean step size
    float beta = 0.01f;   // sigma growth rate
    float zeta = 0.99f;   // anneal factor, (0, 1]
    int tau = 100;        // anneal period in batches

    void validate() const;  // ConfigError on out-of-range fields
};

/// theta -= lr * grad, elementwise.
void sgd_step(Tensor& param, const Tensor& grad, float lr);

/// mu -= alpha * grad_w; sigma += beta * |grad_w|. grad_w is the gradient at
/// the sampled weight, which equals the gradient at mu under the
/// reparameterization w = mu + sigma * eps. The mu update delegates to
/// sgd_step so the beta=0, sigma=0 case follows the identical float
/// operation sequence as plain SGD.
void sdr_decay_step(StochasticParameter& param, const Tensor& grad_w,
                    const SdrDecayConfig& cfg);

/// sigma *= zeta.
void sdr_decay_anneal(StochasticParameter& param, float zeta);

/// mu -= lr * grad_mu; sigma -= lr * grad_sigma. Callers clamp immediately
/// afterwards; this function does not.
void sdr_learnable_step(StochasticParameter& param, const Tensor& grad_mu,
                        const Tensor& grad_sigma, float lr);

/// Projects every sigma element into [min_var, max_var].
void clamp_variances(StochasticParameter& param, float min_var, float max_var);
void clamp_variances(Network& model, float min_var, float max_var);

/// Plateau-driven widening of the sigma clamp bounds: when held-out accuracy
/// stops improving, both bounds rise by a fixed increment, at most once per
/// min_epochs_between_bumps epochs. Bounds never decrease.
class VarianceSchedule {
public:
    struct Config {
        float initial_min = 0.0f;
        float initial_max = 1.0f;
        float increment = 0.05f;
        // Plateau: the best accuracy over the last plateau_window epochs
        // improves on the best before that window by fewer than
        // plateau_threshold percentage points.
        int plateau_window = 3;
        double plateau_threshold = 0.1;
        int min_epochs_between_bumps = 5;
        bool enabled = true;

        void validate() const;
    };

    VarianceSchedule() : VarianceSchedule(Config{}) {}
    explicit VarianceSchedule(Config cfg);

    /// Feeds one epoch's held-out accuracy (percent). Returns true when the
    /// bounds were bumped this epoch.
    bool observe(double test_accuracy_percent);

    float min_var() const { return min_var_; }
    float max_var() const { return max_var_; }
    int bump_count() const { return bump_count_; }
    int last_bump_epoch() const { return last_bump_epoch_; }
    int epochs_seen() const { return static_cast<int>(history_.size()); }
    const Config& config() const { return cfg_; }

    /// Restores checkpointed bounds and bump bookkeeping (history is not
    /// preserved; a restored schedule is only used for inspection, not for
    /// continuing to observe).
    void restore(float min_var, float max_var, int bump_count,
                 int last_bump_epoch);

private:
    Config cfg_;
    float min_var_;
    float max_var_;
    int bump_count_ = 0;
    int last_bump_epoch_ = -1;
    std::vector<double> history_;
};

}  // namespace sdrnet
