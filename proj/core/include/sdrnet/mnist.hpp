#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdrnet/tensor.hpp"

namespace sdrnet {

/// Images as rows of an N x (rows*cols) tensor with pixels in [0,1], labels
/// as class indices in [0,10). Immutable after load; shareable read-only.
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    int image_rows = 0;
    int image_cols = 0;

    int size() const { return static_cast<int>(labels.size()); }
};

/// Raw IDX contents: dimension sizes plus the unsigned-byte payload.
struct IdxArray {
    std::vector<int> dims;
    std::vector<std::uint8_t> payload;
};

/// Parses an IDX stream (big-endian header). Accepts magic 0x00000803
/// (3-dimensional image files) and 0x00000801 (1-dimensional label files).
/// Malformed input raises DataError naming the exact byte offset.
IdxArray parse_idx(std::span<const std::uint8_t> bytes);

/// Scales pixels to [0,1] by dividing by 255 and validates labels against
/// [0, classes). No mean/std standardization: perturbation budgets keep a
/// direct per-pixel meaning.
Dataset normalize(const IdxArray& images, const IdxArray& labels,
                  int classes = 10);

/// Loads one MNIST split from the canonical file pair in dir
/// (train-images-idx3-ubyte / train-labels-idx1-ubyte or the t10k pair).
Dataset load_mnist(const std::filesystem::path& dir, bool train);

/// First n samples (all of them when n <= 0 or n >= size).
Dataset subset(const Dataset& d, int n);

struct Batch {
    Tensor x;
    std::vector<int> y;
};

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<int> shuffled_indices(int n, std::uint64_t seed);

/// Gathers the given rows into a batch.
Batch gather(const Dataset& d, std::span<const int> indices);

/// Splits a shuffled epoch into batches of size B (final short batch
/// included). Every index appears in exactly one batch.
std::vector<Batch> batches(const Dataset& d, int batch_size,
                           std::uint64_t shuffle_seed);

}  // namespace sdrnet
