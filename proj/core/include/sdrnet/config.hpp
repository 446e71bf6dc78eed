#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdrnet/attacks.hpp"
#include "sdrnet/train.hpp"

namespace sdrnet {

/// Full description of one experiment run. Every field has a default; a
/// config file overrides fields by key and unknown keys are rejected. The
/// resolved form (all defaults materialized) is what run directories record.
struct ExperimentConfig {
    TrainConfig train;
    std::vector<AttackConfig> attacks;
    int train_subset = 0;     // 0 = full training split
    int attack_subset = 1000; // 0 = full test split
    std::string data_dir = "data/mnist";
    std::string out_dir = "runs";

    /// Baseline settings for one model kind, attacks included.
    static ExperimentConfig defaults(ModelKind kind);

    /// Parses a JSON config file over defaults("model" key decides the
    /// base). ConfigError on unknown keys, wrong types, or invalid values.
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Applies the same key-by-key overlay to an in-memory JSON document.
    static ExperimentConfig from_json_text(const std::string& text);

    /// Serializes every field, defaults materialized, as pretty JSON.
    std::string to_json() const;

    void validate() const;
};

/// One attack config as a compact JSON object, same keys the config parser
/// accepts. Used to embed attack settings in result artifacts.
std::string attack_config_json(const AttackConfig& cfg);

}  // namespace sdrnet
