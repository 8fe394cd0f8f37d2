#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace polymkt {

/// Philox4x32-10 counter-based generator. Each (key, counter) pair maps to
/// four independent 32-bit words, so streams can be split by (seed, path,
/// step, block, stream) with no sequential state. Parallel and serial runs
/// therefore produce bit-identical draws.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::uint32_t c0, std::uint32_t c1,
                                              std::uint32_t c2, std::uint32_t c3) {
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        std::uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * x0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * x2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t y0 = hi1 ^ x1 ^ k0;
            const std::uint32_t y1 = lo1;
            const std::uint32_t y2 = hi0 ^ x3 ^ k1;
            const std::uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += kW0;
            k1 += kW1;
        }
        return {x0, x1, x2, x3};
    }
};

/// Standard normal draws for one path of one stream, addressed by
/// (step, component). One Philox block yields two normals via Box-Muller.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
        : seed_(seed), path_lo_(static_cast<std::uint32_t>(path)),
          path_hi_(static_cast<std::uint32_t>(path >> 32) ^ (stream << 8)), stream_(stream) {}

    /// Fills out[0..count) with the normals of the given step.
    void fill(std::uint32_t step, double* out, int count) const {
        int produced = 0;
        std::uint32_t block_index = 0;
        while (produced < count) {
            const auto words = Philox4x32::block(seed_ ^ (static_cast<std::uint64_t>(stream_) << 56),
                                                 path_lo_, path_hi_, step, block_index++);
            const double u1 = to_open_unit(words[0], words[1]);
            const double u2 = to_open_unit(words[2], words[3]);
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double angle = 2.0 * kPi * u2;
            out[produced++] = radius * std::cos(angle);
            if (produced < count) out[produced++] = radius * std::sin(angle);
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    // 53-bit uniform strictly inside (0, 1).
    static double to_open_unit(std::uint32_t a, std::uint32_t b) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(a) << 32) | b;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint32_t stream_;
};

}  // namespace polymkt
