#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tensorm {

/// Philox4x32-10 block function: maps a 128-bit counter and 64-bit key
/// to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// What a random stream is used for. Streams with different tags never
/// share counters, so e.g. simulation noise and factor draws are disjoint.
enum class StreamTag : std::uint32_t {
    Sweep = 0,
    Init = 1,
    ScanOrder = 2,
    Holdout = 3,
    SimFactors = 4,
    SimNoise = 5,
    Seeding = 6,
};

/// Counter-based generator. A stream is fully identified by
/// (seed, tag, major, mode, minor); draws are reproducible regardless of
/// which thread consumes the stream or in which order streams are created.
///
/// The sampler keys one stream per (seed, sweep, mode, row).
class CounterRng {
  public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t major,
               std::uint32_t mode, std::uint32_t minor) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    std::uint32_t next_u32() noexcept;
    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned used_ = 4;
};

/// Derives an independent 64-bit seed from a parent seed and a label,
/// used when one operation launches several chains.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept;

} // namespace tensorm
