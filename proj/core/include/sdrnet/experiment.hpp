#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdrnet/attacks.hpp"
#include "sdrnet/config.hpp"
#include "sdrnet/train.hpp"
#include "sdrnet/verify.hpp"

namespace sdrnet {

/// File layout of one run directory. Every artifact write is atomic
/// (temp file + rename), so an interrupted run never leaves a torn file.
struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path config_json() const { return dir / "config.json"; }
    std::filesystem::path metrics_csv() const { return dir / "metrics.csv"; }
    std::filesystem::path checkpoint() const { return dir / "checkpoint.bin"; }
    std::filesystem::path robustness_csv() const {
        return dir / "robustness.csv";
    }
    std::filesystem::path robustness_json() const {
        return dir / "robustness.json";
    }
    std::filesystem::path attack_reports(const std::string& attack) const {
        return dir / ("reports-" + attack + ".jsonl");
    }
};

/// Attack-stage seed for a run config. Derived from the training seed with
/// its own label, so the training stream family is never reused for attacks.
std::uint64_t attack_suite_seed(const ExperimentConfig& cfg);

struct TrainRun {
    RunPaths paths;
    TrainResult result;
};

/// Training stage: loads the dataset, trains cfg.train, and writes
/// config.json (resolved, defaults materialized), metrics.csv, and
/// checkpoint.bin under <out_dir>/<model-name>. Progress goes to log one
/// line per epoch.
TrainRun cmd_train(const ExperimentConfig& cfg, std::ostream& log);

struct AttackRun {
    RunPaths paths;
    SuiteResult suite;
};

/// Attack stage: loads a checkpoint, runs the configured attacks over the
/// first attack_subset test samples, and writes config.json,
/// robustness.csv, robustness.json, and one reports-<attack>.jsonl per
/// attack under <out_dir>/<model-name>-attack.
AttackRun cmd_attack(const ExperimentConfig& cfg,
                     const std::filesystem::path& checkpoint_path,
                     std::ostream& log);

/// Clean accuracy (percent) of a checkpointed model, computed with the same
/// subset, seed family, and one-sample-per-stream batching as the attack
/// suite's clean row, so the two numbers agree exactly.
double cmd_eval(const ExperimentConfig& cfg,
                const std::filesystem::path& checkpoint_path,
                std::ostream& log);

/// Runs one verification oracle and logs its pass/fail line.
OracleReport cmd_verify(const std::string& oracle, std::uint64_t seed,
                        std::ostream& log);

/// One model's row of results, all in percent.
struct ModelColumn {
    ModelKind kind = ModelKind::Vanilla;
    double clean = 0.0;
    double fgsm = 0.0;
    double deepfool = 0.0;
    double localsearch = 0.0;
};

/// Reference measurements for the default architecture on this dataset,
/// reported next to reproduced numbers as a drift diff.
extern const ModelColumn kReferenceTable[4];

struct Table1Options {
    std::uint64_t master_seed = 1;
    std::string data_dir = "data/mnist";
    std::string out_dir = "runs";
    int train_subset = 0;   // 0 = full training split
    int attack_subset = 1000;
    int epochs_override = 0;  // 0 keeps each model's default epoch budget
};

struct Table1Result {
    std::vector<ModelColumn> columns;  // vanilla, sdr-decay, sdr-learnable,
                                       // dropconnect, in that order
};

/// Trains and attacks all four model kinds. Each model's seed is derived
/// from the master seed and the model name, so results are reproducible and
/// adding a model never perturbs another's streams. Writes per-model run
/// directories plus table1.csv and table1-diff.csv under out_dir, and logs
/// the finished table with the drift against kReferenceTable.
Table1Result cmd_reproduce_table1(const Table1Options& opts,
                                  std::ostream& log);

}  // namespace sdrnet
