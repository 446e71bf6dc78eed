#include "sdrnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "sdrnet/errors.hpp"
#include "sdrnet/parallel.hpp"
#include "sdrnet/tape.hpp"

namespace sdrnet {

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Vanilla: return "vanilla";
        case ModelKind::SdrDecay: return "sdr-decay";
        case ModelKind::SdrLearnable: return "sdr-learnable";
        case ModelKind::DropConnect: return "dropconnect";
    }
    throw ContractError("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "vanilla") return ModelKind::Vanilla;
    if (name == "sdr-decay") return ModelKind::SdrDecay;
    if (name == "sdr-learnable") return ModelKind::SdrLearnable;
    if (name == "dropconnect") return ModelKind::DropConnect;
    throw ConfigError("unknown model kind \"" + name +
                      "\" (expected vanilla, sdr-decay, sdr-learnable, or "
                      "dropconnect)");
}

void TrainConfig::validate() const {
    if (hidden.empty()) throw ConfigError("at least one hidden layer");
    if (classes < 2) throw ConfigError("need at least 2 classes");
    if (lr <= 0.0f) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (eval_batch < 1) throw ConfigError("eval batch must be >= 1");
    if (sigma_init < 0.0f) throw ConfigError("sigma_init must be >= 0");
    if (kind == ModelKind::DropConnect &&
        (drop_p < 0.0f || drop_p >= 1.0f)) {
        throw ConfigError("drop probability must lie in [0, 1)");
    }
    if (kind == ModelKind::SdrDecay) decay.validate();
    if (kind == ModelKind::SdrLearnable) schedule.validate();
}

namespace {

LayerKind layer_kind_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::Vanilla: return LayerKind::Linear;
        case ModelKind::DropConnect: return LayerKind::DropConnectLinear;
        case ModelKind::SdrDecay:
        case ModelKind::SdrLearnable: return LayerKind::StochasticLinear;
    }
    throw ContractError("unknown model kind");
}

ForwardMode train_mode_for(ModelKind kind) {
    return kind == ModelKind::DropConnect ? ForwardMode::TrainDropConnect
                                          : ForwardMode::Sampled;
}

}  // namespace

ForwardMode eval_mode_for(ModelKind kind) {
    return kind == ModelKind::DropConnect ? ForwardMode::EvalDropConnect
                                          : ForwardMode::Sampled;
}

double evaluate(const Network& model, const Dataset& data, ForwardMode mode,
                std::uint64_t seed, int batch_size) {
    const int n = data.size();
    if (n == 0) return 0.0;
    const int shards = (n + batch_size - 1) / batch_size;
    std::vector<int> correct(static_cast<std::size_t>(shards), 0);

    parallel_for(static_cast<std::size_t>(shards), 1, [&](std::size_t begin,
                                                          std::size_t end) {
        for (std::size_t shard = begin; shard < end; ++shard) {
            const int lo = static_cast<int>(shard) * batch_size;
            const int hi = std::min(lo + batch_size, n);
            const int features = data.images.cols();
            Tensor x({hi - lo, features});
            std::copy(data.images.row_ptr(lo),
                      data.images.row_ptr(lo) + static_cast<std::ptrdiff_t>(hi - lo) * features,
                      x.data.begin());
            RngStream rng(seed, shard);
            const Tensor logits = model.forward_logits(x, mode, rng);
            int hit = 0;
            for (int r = 0; r < hi - lo; ++r) {
                const float* row = logits.row_ptr(r);
                int arg = 0;
                for (int c = 1; c < logits.cols(); ++c) {
                    if (row[c] > row[arg]) arg = c;
                }
                if (arg == data.labels[static_cast<std::size_t>(lo + r)]) ++hit;
            }
            correct[shard] = hit;
        }
    });

    long total = 0;
    for (int c : correct) total += c;
    return static_cast<double>(total) / static_cast<double>(n);
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set) {
    cfg.validate();
    if (train_set.size() == 0) throw DataError("training set is empty");

    RngStream init(RngStream::derive(cfg.seed, "init"));
    Network model(mlp_spec(layer_kind_for(cfg.kind), train_set.images.cols(),
                           cfg.hidden, cfg.classes, cfg.drop_p),
                  init, cfg.sigma_init);

    RngStream noise(RngStream::derive(cfg.seed, "train-noise"));
    const std::uint64_t eval_seed = RngStream::derive(cfg.seed, "eval");
    VarianceSchedule schedule(cfg.schedule);
    if (cfg.kind == ModelKind::SdrLearnable) {
        // The clamp applies from the very first step, initial bounds on.
        clamp_variances(model, schedule.min_var(), schedule.max_var());
    }

    const ForwardMode mode = train_mode_for(cfg.kind);
    TrainResult result;
    long batch_counter = 0;
    double best_accuracy = -1.0;
    int epochs_since_best = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        const std::vector<int> order = shuffled_indices(
            train_set.size(),
            RngStream::derive(cfg.seed, "shuffle-epoch-" + std::to_string(epoch)));

        double loss_sum = 0.0;
        long loss_count = 0;

        for (int begin = 0; begin < train_set.size(); begin += cfg.batch_size) {
            const int end = std::min(begin + cfg.batch_size, train_set.size());
            const Batch batch = gather(
                train_set, std::span<const int>(order.data() + begin,
                                                static_cast<std::size_t>(end - begin)));

            Tape tape;
            const NodeId x = tape.constant(batch.x);
            std::vector<LayerNodes> nodes;
            const NodeId logits =
                model.forward_tape(tape, x, mode, noise, true, &nodes);
            const NodeId loss = tape.softmax_xent(logits, batch.y);

            const float loss_value = tape.value(loss).data[0];
            if (!std::isfinite(loss_value)) {
                throw NumericalError(
                    "training diverged: loss is not finite at epoch " +
                    std::to_string(epoch) + ", batch " +
                    std::to_string(begin / cfg.batch_size));
            }
            loss_sum += static_cast<double>(loss_value) * (end - begin);
            loss_count += end - begin;

            tape.backward(loss);
            ++batch_counter;

            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& layer = model.layers[l];
                const LayerNodes& ln = nodes[l];
                switch (cfg.kind) {
                    case ModelKind::Vanilla:
                    case ModelKind::DropConnect:
                        sgd_step(layer.weight.mu, tape.grad(ln.w_mu), cfg.lr);
                        sgd_step(layer.bias.mu, tape.grad(ln.b_mu), cfg.lr);
                        break;
                    case ModelKind::SdrDecay:
                        sdr_decay_step(layer.weight, tape.grad(ln.w_mu),
                                       cfg.decay);
                        sdr_decay_step(layer.bias, tape.grad(ln.b_mu),
                                       cfg.decay);
                        if (batch_counter % cfg.decay.tau == 0) {
                            sdr_decay_anneal(layer.weight, cfg.decay.zeta);
                            sdr_decay_anneal(layer.bias, cfg.decay.zeta);
                        }
                        break;
                    case ModelKind::SdrLearnable:
                        sdr_learnable_step(layer.weight, tape.grad(ln.w_mu),
                                           tape.grad(ln.w_sigma), cfg.lr);
                        sdr_learnable_step(layer.bias, tape.grad(ln.b_mu),
                                           tape.grad(ln.b_sigma), cfg.lr);
                        clamp_variances(layer.weight, schedule.min_var(),
                                        schedule.max_var());
                        clamp_variances(layer.bias, schedule.min_var(),
                                        schedule.max_var());
                        break;
                }
            }
            if (cfg.after_step) cfg.after_step(model);
        }

        const double accuracy =
            100.0 * evaluate(model, test_set, eval_mode_for(cfg.kind),
                             RngStream::derive(eval_seed,
                                               "epoch-" + std::to_string(epoch)),
                             cfg.eval_batch);
        if (cfg.kind == ModelKind::SdrLearnable) {
            schedule.observe(accuracy);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        m.test_accuracy = accuracy;
        m.min_var = schedule.min_var();
        m.max_var = schedule.max_var();
        m.mean_sigma = model.mean_sigma();
        m.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          epoch_start)
                .count();
        result.metrics.push_back(m);
        if (cfg.on_epoch) cfg.on_epoch(m);

        if (accuracy > best_accuracy) {
            best_accuracy = accuracy;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (cfg.early_stop_patience > 0 &&
            epochs_since_best >= cfg.early_stop_patience) {
            break;
        }
    }

    result.model = std::move(model);
    result.schedule_min_var = schedule.min_var();
    result.schedule_max_var = schedule.max_var();
    result.schedule_bumps = schedule.bump_count();
    result.schedule_last_bump_epoch = schedule.last_bump_epoch();
    return result;
}

}  // namespace sdrnet
