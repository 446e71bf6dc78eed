#include "sdrnet/mnist.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "sdrnet/errors.hpp"
#include "sdrnet/rng.hpp"

namespace sdrnet {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803u;
constexpr std::uint32_t kLabelMagic = 0x00000801u;

std::string hex32(std::uint32_t v) {
    char buf[11];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes,
                        std::size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw DataError("idx: header truncated at byte " +
                        std::to_string(bytes.size()) + ", needed " +
                        std::to_string(offset + 4));
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    int ndims = 0;
    if (magic == kImageMagic) {
        ndims = 3;
    } else if (magic == kLabelMagic) {
        ndims = 1;
    } else {
        throw DataError("idx: bad magic " + hex32(magic) + " at byte 0");
    }

    IdxArray out;
    std::size_t count = 1;
    for (int d = 0; d < ndims; ++d) {
        const std::uint32_t dim = read_be32(bytes, 4 + 4 * static_cast<std::size_t>(d));
        if (dim == 0 || dim > 0x10000000u) {
            throw DataError("idx: dimension " + std::to_string(d) + " is " +
                            std::to_string(dim) + " at byte " +
                            std::to_string(4 + 4 * d));
        }
        out.dims.push_back(static_cast<int>(dim));
        count *= dim;
    }

    const std::size_t payload_offset = 4 + 4 * static_cast<std::size_t>(ndims);
    if (bytes.size() < payload_offset + count) {
        throw DataError("idx: payload truncated at byte " +
                        std::to_string(bytes.size()) + ", declared end " +
                        std::to_string(payload_offset + count));
    }
    out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payload_offset),
                       bytes.begin() + static_cast<std::ptrdiff_t>(payload_offset + count));
    return out;
}

Dataset normalize(const IdxArray& images, const IdxArray& labels, int classes) {
    if (images.dims.size() != 3) {
        throw DataError("normalize: image array has " +
                        std::to_string(images.dims.size()) +
                        " dimensions, expected 3");
    }
    if (labels.dims.size() != 1) {
        throw DataError("normalize: label array has " +
                        std::to_string(labels.dims.size()) +
                        " dimensions, expected 1");
    }
    const int n = images.dims[0];
    if (labels.dims[0] != n) {
        throw DataError("normalize: " + std::to_string(n) + " images but " +
                        std::to_string(labels.dims[0]) + " labels");
    }
    Dataset d;
    d.image_rows = images.dims[1];
    d.image_cols = images.dims[2];
    const int features = d.image_rows * d.image_cols;
    d.images = Tensor({n, features});
    for (std::size_t i = 0; i < images.payload.size(); ++i) {
        d.images.data[i] = static_cast<float>(images.payload[i]) / 255.0f;
    }
    d.labels.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int label = labels.payload[static_cast<std::size_t>(i)];
        if (label < 0 || label >= classes) {
            throw DataError("normalize: label " + std::to_string(label) +
                            " at index " + std::to_string(i) + " outside [0, " +
                            std::to_string(classes) + ")");
        }
        d.labels.push_back(label);
    }
    return d;
}

Dataset load_mnist(const std::filesystem::path& dir, bool train) {
    const char* image_name =
        train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const char* label_name =
        train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    const IdxArray images = parse_idx(read_file(dir / image_name));
    const IdxArray labels = parse_idx(read_file(dir / label_name));
    return normalize(images, labels);
}

Dataset subset(const Dataset& d, int n) {
    if (n <= 0 || n >= d.size()) return d;
    Dataset out;
    out.image_rows = d.image_rows;
    out.image_cols = d.image_cols;
    const int features = d.images.cols();
    out.images = Tensor({n, features});
    std::copy(d.images.data.begin(),
              d.images.data.begin() + static_cast<std::ptrdiff_t>(n) * features,
              out.images.data.begin());
    out.labels.assign(d.labels.begin(), d.labels.begin() + n);
    return out;
}

std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    RngStream rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(
            rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

Batch gather(const Dataset& d, std::span<const int> indices) {
    const int features = d.images.cols();
    Batch batch;
    batch.x = Tensor({static_cast<int>(indices.size()), features});
    batch.y.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int i = indices[r];
        std::copy(d.images.row_ptr(i), d.images.row_ptr(i) + features,
                  batch.x.row_ptr(static_cast<int>(r)));
        batch.y.push_back(d.labels[static_cast<std::size_t>(i)]);
    }
    return batch;
}

std::vector<Batch> batches(const Dataset& d, int batch_size,
                           std::uint64_t shuffle_seed) {
    if (batch_size < 1) {
        throw ContractError("batches: batch size must be at least 1");
    }
    const std::vector<int> order = shuffled_indices(d.size(), shuffle_seed);
    std::vector<Batch> out;
    for (int begin = 0; begin < d.size(); begin += batch_size) {
        const int end = std::min(begin + batch_size, d.size());
        out.push_back(gather(
            d, std::span<const int>(order.data() + begin,
                                    static_cast<std::size_t>(end - begin))));
    }
    return out;
}

}  // namespace sdrnet
