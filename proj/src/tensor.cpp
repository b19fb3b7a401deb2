#include "tensorm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tensorm/error.hpp"
#include "tensorm/rng.hpp"

namespace tensorm {

namespace {

void check_value(std::int8_t value) {
    if (value < -1 || value > 1)
        throw ArgumentError("tensor entry " + std::to_string(value) + " is not in {-1, 0, 1}");
}

void check_dims(const Extents& dims) {
    if (dims.size() < 2)
        throw ArgumentError("a tensor needs at least 2 modes, got " + std::to_string(dims.size()));
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (dims[k] == 0)
            throw ArgumentError("extent of mode " + std::to_string(k) + " is zero");
}

std::vector<std::size_t> make_strides(const Extents& dims) {
    std::vector<std::size_t> strides(dims.size(), 1);
    for (std::size_t k = dims.size(); k-- > 1;)
        strides[k - 1] = strides[k] * dims[k];
    return strides;
}

} // namespace

std::size_t element_count(std::span<const std::size_t> dims) noexcept {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t flat_offset(std::span<const std::size_t> idx, std::span<const std::size_t> dims) {
    if (idx.size() != dims.size())
        throw BoundsError("index has " + std::to_string(idx.size()) + " components, tensor has " +
                          std::to_string(dims.size()) + " modes");
    std::size_t offset = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (idx[k] >= dims[k])
            throw BoundsError("index " + std::to_string(idx[k]) + " out of range for mode " +
                              std::to_string(k) + " with extent " + std::to_string(dims[k]));
        offset = offset * dims[k] + idx[k];
    }
    return offset;
}

Index unravel(std::size_t offset, std::span<const std::size_t> dims) {
    if (offset >= element_count(dims))
        throw BoundsError("offset " + std::to_string(offset) + " out of range");
    Index idx(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        idx[k] = offset % dims[k];
        offset /= dims[k];
    }
    return idx;
}

ObservedTensor::ObservedTensor(Extents dims)
    : dims_(std::move(dims)) {
    check_dims(dims_);
    strides_ = make_strides(dims_);
    entries_.assign(element_count(dims_), kMissing);
}

ObservedTensor::ObservedTensor(Extents dims, std::vector<std::int8_t> entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
    check_dims(dims_);
    strides_ = make_strides(dims_);
    if (entries_.size() != element_count(dims_))
        throw ArgumentError("tensor payload has " + std::to_string(entries_.size()) +
                            " entries, extents require " + std::to_string(element_count(dims_)));
    for (auto v : entries_)
        check_value(v);
}

std::int8_t ObservedTensor::at(std::span<const std::size_t> idx) const {
    return entries_[flat_offset(idx, dims_)];
}

std::int8_t ObservedTensor::at_offset(std::size_t offset) const {
    if (offset >= entries_.size())
        throw BoundsError("offset " + std::to_string(offset) + " out of range");
    return entries_[offset];
}

void ObservedTensor::set(std::span<const std::size_t> idx, std::int8_t value) {
    check_value(value);
    entries_[flat_offset(idx, dims_)] = value;
}

void ObservedTensor::set_offset(std::size_t offset, std::int8_t value) {
    check_value(value);
    if (offset >= entries_.size())
        throw BoundsError("offset " + std::to_string(offset) + " out of range");
    entries_[offset] = value;
}

std::size_t ObservedTensor::count_observed() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](std::int8_t v) { return v != kMissing; }));
}

HoldoutSplit mask_holdout(const ObservedTensor& t, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw ArgumentError("holdout fraction must lie in [0, 1), got " + std::to_string(fraction));

    std::vector<std::size_t> observed;
    observed.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] != kMissing)
            observed.push_back(i);

    const auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(observed.size())));

    // Partial Fisher-Yates: the first n_held slots become the held-out set.
    CounterRng rng(seed, StreamTag::Holdout, 0, 0, 0);
    for (std::size_t i = 0; i < n_held; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(observed.size() - i));
        std::swap(observed[i], observed[j]);
    }
    observed.resize(n_held);
    std::sort(observed.begin(), observed.end());

    HoldoutSplit split{t, {}};
    split.heldout.reserve(n_held);
    for (auto offset : observed) {
        split.heldout.push_back({offset, t[offset] == kObservedOne});
        split.train.set_offset(offset, kMissing);
    }
    return split;
}

} // namespace tensorm
