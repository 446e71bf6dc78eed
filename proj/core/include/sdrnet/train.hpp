#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sdrnet/mnist.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/optim.hpp"

namespace sdrnet {

enum class ModelKind { Vanilla, SdrDecay, SdrLearnable, DropConnect };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);  // ConfigError

/// Forward mode used at evaluation and attack time: dropconnect keeps
/// resampling masks, stochastic kinds keep sampling weights, vanilla is
/// deterministic under any mode.
ForwardMode eval_mode_for(ModelKind kind);

struct EpochMetrics;

struct TrainConfig {
    ModelKind kind = ModelKind::SdrLearnable;
    std::vector<int> hidden = {100, 100, 100};
    int classes = 10;
    float drop_p = 0.2f;       // DropConnect models
    float sigma_init = 0.05f;  // stochastic models
    float lr = 0.01f;          // vanilla, dropconnect, and sdr-learnable
    SdrDecayConfig decay;      // sdr-decay only
    VarianceSchedule::Config schedule;  // sdr-learnable only
    int batch_size = 64;
    int epochs = 30;
    // Stop when test accuracy has not improved for this many epochs;
    // 0 disables. The returned model is always the final state, not the
    // best-accuracy state: widened sigma is the point of the method.
    int early_stop_patience = 0;
    int eval_batch = 256;
    std::uint64_t seed = 1;

    // Observation hook, called after every optimizer step (and clamp).
    // Null in normal runs.
    std::function<void(const Network&)> after_step;

    // Progress hook, called once per epoch with the finished metrics row.
    std::function<void(const EpochMetrics&)> on_epoch;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;            // 1-based
    double train_loss = 0.0;  // mean cross-entropy over the epoch
    double test_accuracy = 0.0;  // percent
    float min_var = 0.0f;     // clamp bounds in force after this epoch
    float max_var = 0.0f;
    double mean_sigma = 0.0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    Network model;
    std::vector<EpochMetrics> metrics;
    // Schedule state at the end of training (sdr-learnable; defaults else).
    float schedule_min_var = 0.0f;
    float schedule_max_var = 0.0f;
    int schedule_bumps = 0;
    int schedule_last_bump_epoch = -1;
};

/// Runs the full training loop for the configured model kind. Sub-streams
/// are derived from cfg.seed per stage (init, shuffling, forward noise,
/// evaluation), so the run is replayable: identical (config, seed, data)
/// produces identical parameters and metrics. Non-finite loss aborts with
/// NumericalError naming the epoch and batch.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set);

/// Fraction of samples whose argmax prediction is correct, one forward pass
/// per sample. Stochastic models run in the given sampled mode; shard i of
/// size batch_size draws from RngStream(seed, i), so results do not depend
/// on sharding across threads.
double evaluate(const Network& model, const Dataset& data, ForwardMode mode,
                std::uint64_t seed, int batch_size = 256);

}  // namespace sdrnet
