#pragma once

#include "dtdcva/mathkit.hpp"

#include <array>
#include <cstdint>

namespace dtdcva {

/// Philox4x32-10 counter-based generator. Streams are keyed by
/// (scenario, time bucket, substream) so draws are reproducible regardless
/// of thread scheduling; the draw index within a stream is the counter.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint32_t scenario, std::uint32_t bucket,
                 std::uint32_t substream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          scenario_(scenario),
          bucket_(bucket),
          substream_(substream) {}

    /// Uniform draw on the open interval (0,1); 53 significand bits.
    double next_uniform() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto words = block(index_++);
        spare_ = to_unit(words[2], words[3]);
        have_spare_ = true;
        return to_unit(words[0], words[1]);
    }

    /// Standard normal via inverse-CDF transform (no generator state beyond
    /// the counter, so substreams never interleave).
    double next_normal() { return norm_inv(next_uniform()); }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::array<std::uint32_t, 4> block(std::uint64_t index) const {
        std::uint32_t x0 = scenario_;
        std::uint32_t x1 = bucket_;
        std::uint32_t x2 = substream_ ^ static_cast<std::uint32_t>(index >> 32);
        std::uint32_t x3 = static_cast<std::uint32_t>(index);
        std::uint32_t k0 = key0_;
        std::uint32_t k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += kWeyl0;
                k1 += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t y0 = hi1 ^ x1 ^ k0;
            const std::uint32_t y1 = lo1;
            const std::uint32_t y2 = hi0 ^ x3 ^ k1;
            const std::uint32_t y3 = lo0;
            x0 = y0;
            x1 = y1;
            x2 = y2;
            x3 = y3;
        }
        return {x0, x1, x2, x3};
    }

    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint32_t key0_;
    std::uint32_t key1_;
    std::uint32_t scenario_;
    std::uint32_t bucket_;
    std::uint32_t substream_;
    std::uint64_t index_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace dtdcva
