#pragma once

#include <cmath>
#include <cstdint>

namespace zstyle {

// Counter-based 64-bit generator. Output i of a stream is a pure function of
// (seed, stream, i): the SplitMix64 finalizer applied to seed + i * phi64.
// No platform-dependent distribution code is used anywhere, so seeded runs
// reproduce bit-for-bit across compilers and operating systems.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(finalize(finalize(seed + kPhi64) ^ finalize(stream * kPhi64 + 0x1234567890ABCDEFull))) {}

    std::uint64_t next_u64() { return finalize(base_ + (++counter_) * kPhi64); }

    // Uniform in [0, 1), 53 mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        constexpr double two_pi = 6.28318530717958647692528676655900577;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Independent substream; does not disturb this stream's counter.
    Rng fork(std::uint64_t stream) const { return Rng(base_, stream + 1); }

private:
    static constexpr std::uint64_t kPhi64 = 0x9E3779B97F4A7C15ull;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace zstyle
