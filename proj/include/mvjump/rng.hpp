#pragma once

#include <cmath>
#include <cstdint>

namespace mvjump {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ stream with hand-rolled normal and Poisson draws.
///
/// Streams are keyed by (seed, stream id) so every particle or path owns an
/// independent sequence; simulations are then bit-reproducible for any thread
/// count. Draws avoid std::<distribution> on purpose: their algorithms are
/// implementation-defined, which would break byte-identical outputs across
/// toolchains.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Poisson(mean); Knuth's product method, normal tail for large means.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean > 500.0) {
            const double g = mean + std::sqrt(mean) * normal();
            return g < 0.0 ? 0 : static_cast<std::uint64_t>(g + 0.5);
        }
        const double limit = std::exp(-mean);
        double p = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

  private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace mvjump
