#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace sdrnet {

namespace detail {
// One Philox4x32-10 block: 4 output words from a 128-bit counter and 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);
}  // namespace detail

/// Counter-based random stream: Philox4x32-10 keyed by the seed, with the
/// 128-bit counter split into a caller-chosen stream id (high 64 bits) and a
/// running block index (low 64 bits). Any (seed, stream) pair names an
/// independent stream; replaying the same draw sequence reproduces the same
/// values on every platform at the uniform-integer level.
///
/// Normal variates use the Box-Muller transform ("box-muller-v1"): each pair
/// consumes two 32-bit uniforms, u1 in (0,1] and u2 in [0,1); z0 = r*cos,
/// z1 = r*sin with r = sqrt(-2 ln u1). z1 is cached and returned by the next
/// call, so draw counts stay well defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    double uniform();  // [0, 1)
    float normal();    // N(0, 1)

    void fill_normal(std::span<float> out);
    // Each element 0 with probability drop_p, else 1/(1-drop_p).
    void fill_dropconnect_mask(std::span<float> out, float drop_p);
    // Uniform integer in [0, bound)
    std::uint64_t next_below(std::uint64_t bound);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Sub-seed derivation: hash of (master seed, stage label). Adding a new
    /// stage label never perturbs the seeds of existing stages.
    static std::uint64_t derive(std::uint64_t master, std::string_view label);

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    float spare_ = 0.0f;
    bool has_spare_ = false;
};

}  // namespace sdrnet
