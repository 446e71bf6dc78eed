#include "sdrnet/checkpoint.hpp"

#include <string>

#include "sdrnet/binio.hpp"
#include "sdrnet/errors.hpp"

namespace sdrnet {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t kind_code(LayerKind kind) {
    switch (kind) {
        case LayerKind::Linear: return 0;
        case LayerKind::StochasticLinear: return 1;
        case LayerKind::DropConnectLinear: return 2;
    }
    throw ContractError("unknown layer kind");
}

LayerKind kind_from_code(std::uint32_t code) {
    switch (code) {
        case 0: return LayerKind::Linear;
        case 1: return LayerKind::StochasticLinear;
        case 2: return LayerKind::DropConnectLinear;
    }
    throw DataError("checkpoint: unknown layer kind code " +
                    std::to_string(code));
}

Tensor read_tensor(BinaryReader& in, std::vector<int> shape,
                   const char* what) {
    Tensor t;
    t.shape = std::move(shape);
    const std::size_t offset = in.offset();
    t.data = in.f32_array();
    if (static_cast<std::int64_t>(t.data.size()) != t.numel()) {
        throw DataError("checkpoint: " + std::string(what) + " at byte " +
                        std::to_string(offset) + " holds " +
                        std::to_string(t.data.size()) + " floats, expected " +
                        std::to_string(t.numel()));
    }
    return t;
}

}  // namespace

void checkpoint_save(const std::filesystem::path& path,
                     const CheckpointData& data) {
    BinaryWriter out(path);
    out.str(std::string(kMagic, sizeof(kMagic)));
    out.u32(kVersion);
    out.str(model_kind_name(data.kind));
    out.u64(data.seed);
    out.f32(data.schedule_min_var);
    out.f32(data.schedule_max_var);
    out.u32(static_cast<std::uint32_t>(data.schedule_bumps));
    out.u64(static_cast<std::uint64_t>(
        static_cast<std::int64_t>(data.schedule_last_bump_epoch)));

    out.u32(static_cast<std::uint32_t>(data.model.layers.size()));
    for (const DenseLayer& layer : data.model.layers) {
        out.u32(static_cast<std::uint32_t>(layer.spec.fan_in));
        out.u32(static_cast<std::uint32_t>(layer.spec.fan_out));
        out.u32(kind_code(layer.spec.kind));
        out.u32(layer.spec.activation == Activation::Relu ? 1 : 0);
        out.f32(layer.spec.drop_p);
        out.u32(layer.weight.stochastic() ? 1 : 0);
        out.f32_array(layer.weight.mu.data);
        if (layer.weight.stochastic()) out.f32_array(layer.weight.sigma.data);
        out.f32_array(layer.bias.mu.data);
        if (layer.bias.stochastic()) out.f32_array(layer.bias.sigma.data);
    }
    out.commit();
}

CheckpointData checkpoint_load(const std::filesystem::path& path) {
    BinaryReader in(path);
    const std::string magic = in.str();
    if (magic != std::string(kMagic, sizeof(kMagic))) {
        throw DataError(path.string() + ": not a checkpoint (bad magic)");
    }
    const std::uint32_t version = in.u32();
    if (version != kVersion) {
        throw DataError(path.string() + ": format version " +
                        std::to_string(version) + " is not supported (have " +
                        std::to_string(kVersion) + ")");
    }

    CheckpointData data;
    data.kind = model_kind_from_name(in.str());
    data.seed = in.u64();
    data.schedule_min_var = in.f32();
    data.schedule_max_var = in.f32();
    data.schedule_bumps = static_cast<int>(in.u32());
    data.schedule_last_bump_epoch =
        static_cast<int>(static_cast<std::int64_t>(in.u64()));

    const std::uint32_t layer_count = in.u32();
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        DenseLayer layer;
        layer.spec.fan_in = static_cast<int>(in.u32());
        layer.spec.fan_out = static_cast<int>(in.u32());
        layer.spec.kind = kind_from_code(in.u32());
        layer.spec.activation =
            in.u32() == 1 ? Activation::Relu : Activation::None;
        layer.spec.drop_p = in.f32();
        const bool has_sigma = in.u32() == 1;
        if (layer.spec.fan_in < 1 || layer.spec.fan_out < 1) {
            throw DataError(path.string() + ": layer " + std::to_string(l) +
                            " has non-positive dimensions");
        }
        const std::vector<int> w_shape = {layer.spec.fan_in,
                                          layer.spec.fan_out};
        const std::vector<int> b_shape = {layer.spec.fan_out};
        layer.weight.mu = read_tensor(in, w_shape, "weight mu");
        if (has_sigma) {
            layer.weight.sigma = read_tensor(in, w_shape, "weight sigma");
        }
        layer.bias.mu = read_tensor(in, b_shape, "bias mu");
        if (has_sigma) {
            layer.bias.sigma = read_tensor(in, b_shape, "bias sigma");
        }
        data.model.layers.push_back(std::move(layer));
    }
    in.expect_eof();

    for (std::size_t l = 1; l < data.model.layers.size(); ++l) {
        if (data.model.layers[l].spec.fan_in !=
            data.model.layers[l - 1].spec.fan_out) {
            throw DataError(path.string() + ": layer " + std::to_string(l) +
                            " dimensions do not chain");
        }
    }
    return data;
}

}  // namespace sdrnet
