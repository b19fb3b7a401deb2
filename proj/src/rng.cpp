#include "tensorm/rng.hpp"

namespace tensorm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& c,
                                                 const std::array<std::uint32_t, 2>& k) noexcept {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept {
    counter = philox_round(counter, key);
    for (int round = 1; round < 10; ++round) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
        counter = philox_round(counter, key);
    }
    return counter;
}

CounterRng::CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t major,
                       std::uint32_t mode, std::uint32_t minor) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{major, (static_cast<std::uint32_t>(tag) << 24) ^ mode, minor, 0} {}

std::uint32_t CounterRng::next_u32() noexcept {
    if (used_ == 4) {
        buffer_ = philox4x32(counter_, key_);
        ++counter_[3];
        used_ = 0;
    }
    return buffer_[used_++];
}

CounterRng::result_type CounterRng::operator()() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double CounterRng::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    // Rejection on the top of the range keeps the result unbiased.
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t draw;
    do {
        draw = (*this)();
    } while (draw >= limit);
    return draw % bound;
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept {
    CounterRng rng(parent, StreamTag::Seeding, static_cast<std::uint32_t>(label),
                   static_cast<std::uint32_t>(label >> 32), 0);
    return rng();
}

} // namespace tensorm
