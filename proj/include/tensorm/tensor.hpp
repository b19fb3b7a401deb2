#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tensorm {

/// Extents N_1..N_K of a K-way tensor.
using Extents = std::vector<std::size_t>;

/// Index tuple [n_1, ..., n_K] into a tensor.
using Index = std::vector<std::size_t>;

/// Signed ternary entry codes. Observed data is stored as its signed view
/// x~ = 2x - 1, missing data as 0, so a missing entry drops out of every
/// sum over x~.
inline constexpr std::int8_t kObservedOne = 1;
inline constexpr std::int8_t kObservedZero = -1;
inline constexpr std::int8_t kMissing = 0;

/// Row-major offset of `idx` (last index fastest). Throws BoundsError if
/// the arity differs or any component is out of range.
std::size_t flat_offset(std::span<const std::size_t> idx, std::span<const std::size_t> dims);

/// Inverse of flat_offset.
Index unravel(std::size_t offset, std::span<const std::size_t> dims);

/// Number of entries, prod_k N_k.
std::size_t element_count(std::span<const std::size_t> dims) noexcept;

/// Dense K-way array of ternary entries (observed one / observed zero /
/// missing), one signed byte per entry, row-major.
class ObservedTensor {
  public:
    /// All entries missing.
    explicit ObservedTensor(Extents dims);
    ObservedTensor(Extents dims, std::vector<std::int8_t> entries);

    std::span<const std::size_t> dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Row-major strides, strides()[K-1] == 1.
    std::span<const std::size_t> strides() const noexcept { return strides_; }

    std::span<const std::int8_t> entries() const noexcept { return entries_; }

    std::int8_t operator[](std::size_t offset) const noexcept { return entries_[offset]; }
    std::int8_t at(std::span<const std::size_t> idx) const;
    std::int8_t at_offset(std::size_t offset) const;

    /// Sets one entry; `value` must be in {-1, 0, +1}.
    void set(std::span<const std::size_t> idx, std::int8_t value);
    void set_offset(std::size_t offset, std::int8_t value);

    std::size_t count_observed() const noexcept;
    std::size_t count_missing() const noexcept { return size() - count_observed(); }

    friend bool operator==(const ObservedTensor&, const ObservedTensor&) = default;

  private:
    Extents dims_;
    std::vector<std::size_t> strides_;
    std::vector<std::int8_t> entries_;
};

/// One observed entry withheld from training.
struct HeldoutEntry {
    std::size_t offset;
    bool value;

    friend bool operator==(const HeldoutEntry&, const HeldoutEntry&) = default;
};

struct HoldoutSplit {
    ObservedTensor train;
    /// Sorted by offset.
    std::vector<HeldoutEntry> heldout;
};

/// Hides round(fraction * #observed) observed entries, chosen uniformly
/// without replacement. Entries already missing are never touched.
/// Throws ArgumentError unless 0 <= fraction < 1.
HoldoutSplit mask_holdout(const ObservedTensor& t, double fraction, std::uint64_t seed);

} // namespace tensorm
