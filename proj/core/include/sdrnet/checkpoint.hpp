#pragma once

#include <cstdint>
#include <filesystem>

#include "sdrnet/model.hpp"
#include "sdrnet/train.hpp"

namespace sdrnet {

/// Everything needed to rebuild a trained model and know where its schedule
/// ended up. Round-trips bit-exactly through save/load.
struct CheckpointData {
    ModelKind kind = ModelKind::Vanilla;
    Network model;
    std::uint64_t seed = 0;
    float schedule_min_var = 0.0f;
    float schedule_max_var = 0.0f;
    int schedule_bumps = 0;
    int schedule_last_bump_epoch = -1;
};

/// Binary format: "SDRC" magic, format version, model kind, seed, schedule
/// state, then per-layer specs with length-prefixed little-endian f32 mu and
/// sigma arrays (sigma only for stochastic layers). Writes are atomic
/// (temp file + rename).
void checkpoint_save(const std::filesystem::path& path,
                     const CheckpointData& data);

/// Rejects unknown magic or version and any structural damage with DataError
/// naming the offending byte offset or field.
CheckpointData checkpoint_load(const std::filesystem::path& path);

}  // namespace sdrnet
