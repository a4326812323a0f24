#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-based random numbers: Philox4x32-10 (Salmon et al., Random123).
// Being counter-based makes every draw addressable, so sampling is
// reproducible bit-for-bit no matter how work is split across threads.
//
// Stream layout used by this library:
//   key     = (seed_lo32, seed_hi32)
//   counter = (block_lo32, block_hi32, stream_lo32, stream_hi32)
// where `stream` identifies a substream (frequency slice, trace index, ...)
// and `block` counts 128-bit outputs within the substream. One block yields
// two uniform doubles, i.e. two Box-Muller normals.

namespace sqz {

struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr int kRounds = 10;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < kRounds; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Addressable uniform/normal draws on (seed, stream, block) coordinates.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    /// Two uniforms in (0, 1] from one Philox block.
    std::array<double, 2> uniform_pair(std::uint64_t block_index) const {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_index),
            static_cast<std::uint32_t>(block_index >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = Philox4x32::block(ctr, key_);
        const auto u0 = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        const auto u1 = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        return {to_unit(u0), to_unit(u1)};
    }

    /// Two standard normals (Box-Muller) from one Philox block.
    std::array<double, 2> normal_pair(std::uint64_t block_index) const {
        const auto u = uniform_pair(block_index);
        const double r = std::sqrt(-2.0 * std::log(u[0]));
        const double phi = 2.0 * std::numbers::pi * u[1];
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    /// Four standard normals for draw `index` (consumes blocks 2i, 2i+1).
    std::array<double, 4> normal_quad(std::uint64_t index) const {
        const auto a = normal_pair(2 * index);
        const auto b = normal_pair(2 * index + 1);
        return {a[0], a[1], b[0], b[1]};
    }

    std::uint64_t stream() const { return stream_; }

  private:
    static double to_unit(std::uint64_t x) {
        // 53-bit mantissa, shifted into (0, 1] so log() is always finite
        return (static_cast<double>(x >> 11) + 1.0) * 0x1p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
};

}  // namespace sqz
