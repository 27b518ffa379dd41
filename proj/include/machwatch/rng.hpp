#ifndef MACHWATCH_RNG_HPP
#define MACHWATCH_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace machwatch {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based pseudo-random stream.
///
/// Every draw is a pure function of (seed, stream, counter):
///
///     key    = mix64(seed + 0x9e3779b97f4a7c15) ^ mix64(stream * 0xd1b54a32d192ed03 + 1)
///     draw_n = mix64(key + n * 0x9e3779b97f4a7c15)
///
/// where n is the zero-based draw index within the stream. Independent
/// consumers (one tree of a forest, one channel of the simulator) take
/// their own stream id, so results never depend on scheduling order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(stream * 0xd1b54a32d192ed03ULL + 1)) {}

    /// Draw at an explicit counter position without advancing the stream.
    [[nodiscard]] std::uint64_t at(std::uint64_t counter) const noexcept {
        return mix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
    }

    std::uint64_t next_u64() noexcept { return at(counter_++); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n), n > 0. Multiply-shift reduction.
    std::size_t index(std::size_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double gaussian() noexcept {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace machwatch

#endif  // MACHWATCH_RNG_HPP
