#include "tensorm/model.hpp"

#include <algorithm>
#include <bit>
#include <numbers>
#include <string>

#include "product_walk.hpp"
#include "tensorm/error.hpp"

namespace tensorm {

FactorMatrix::FactorMatrix(std::size_t rows, std::size_t rank)
    : rows_(rows), rank_(rank), words_((rank + 63) / 64), bits_(rows * words_, 0) {}

std::size_t FactorMatrix::count_ones() const noexcept {
    std::size_t total = 0;
    for (auto word : bits_)
        total += static_cast<std::size_t>(std::popcount(word));
    return total;
}

void FactorMatrix::clear_column(std::size_t l) noexcept {
    for (std::size_t n = 0; n < rows_; ++n)
        set(n, l, false);
}

FactorMatrix FactorMatrix::without_columns(std::span<const std::size_t> drop) const {
    std::vector<std::size_t> keep;
    for (std::size_t l = 0; l < rank_; ++l)
        if (std::find(drop.begin(), drop.end(), l) == drop.end())
            keep.push_back(l);
    FactorMatrix out(rows_, keep.size());
    for (std::size_t n = 0; n < rows_; ++n)
        for (std::size_t j = 0; j < keep.size(); ++j)
            out.set(n, j, get(n, keep[j]));
    return out;
}

void NoiseModel::validate() const {
    if (!(lambda >= 0.0))
        throw ArgumentError("lambda must be non-negative");
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw ArgumentError("Beta prior pseudo-counts must be positive");
}

ModelState ModelState::zeros(std::span<const std::size_t> dims, std::size_t rank, NoiseModel noise) {
    ModelState state;
    state.noise = noise;
    for (auto n : dims)
        state.factors.emplace_back(n, rank);
    state.labels.resize(rank);
    for (std::size_t l = 0; l < rank; ++l)
        state.labels[l] = static_cast<int>(l);
    return state;
}

void ModelState::check_dims(std::span<const std::size_t> dims) const {
    if (factors.size() != dims.size())
        throw ArgumentError("model has " + std::to_string(factors.size()) + " factor matrices, tensor has " +
                            std::to_string(dims.size()) + " modes");
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (factors[k].rows() != dims[k])
            throw ArgumentError("factor matrix " + std::to_string(k) + " has " +
                                std::to_string(factors[k].rows()) + " rows, mode extent is " +
                                std::to_string(dims[k]));
        if (factors[k].rank() != labels.size())
            throw ArgumentError("factor matrix " + std::to_string(k) + " has inconsistent rank");
    }
}

void ModelState::remove_dimensions(std::span<const std::size_t> positions) {
    for (auto& f : factors)
        f = f.without_columns(positions);
    std::vector<int> kept;
    for (std::size_t l = 0; l < labels.size(); ++l)
        if (std::find(positions.begin(), positions.end(), l) == positions.end())
            kept.push_back(labels[l]);
    labels = std::move(kept);
}

bool deterministic_product_entry(const ModelState& state, std::span<const std::size_t> idx) {
    if (idx.size() != state.order())
        throw BoundsError("index arity does not match the model order");
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (idx[k] >= state.factors[k].rows())
            throw BoundsError("index " + std::to_string(idx[k]) + " out of range for mode " + std::to_string(k));

    const std::size_t words = state.factors.front().words();
    for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t conj = ~std::uint64_t{0};
        for (std::size_t k = 0; k < idx.size() && conj != 0; ++k)
            conj &= state.factors[k].row_mask(idx[k])[w];
        if (conj != 0)
            return true;
    }
    return false;
}

std::vector<std::uint8_t> boolean_product(const ModelState& state) {
    Extents dims;
    for (const auto& f : state.factors)
        dims.push_back(f.rows());
    std::vector<std::uint8_t> out(element_count(dims));
    detail::walk_product(state, dims, [&](std::size_t offset, bool active) { out[offset] = active; });
    return out;
}

double entry_log_likelihood(const ModelState& state, std::span<const std::size_t> idx, std::int8_t x) {
    const bool active = deterministic_product_entry(state, idx);
    if (x == kMissing)
        return -std::numbers::ln2;
    return log_sigmoid(state.noise.lambda * x * (active ? 1.0 : -1.0));
}

double total_log_likelihood(const ModelState& state, const ObservedTensor& t) {
    state.check_dims(t.dims());
    const double agree = log_sigmoid(state.noise.lambda);
    const double disagree = log_sigmoid(-state.noise.lambda);
    const auto entries = t.entries();
    std::size_t n_agree = 0;
    std::size_t n_disagree = 0;
    detail::walk_product(state, t.dims(), [&](std::size_t offset, bool active) {
        const auto x = entries[offset];
        if (x == kMissing)
            return;
        if ((x == kObservedOne) == active)
            ++n_agree;
        else
            ++n_disagree;
    });
    const auto n_missing = t.size() - n_agree - n_disagree;
    return static_cast<double>(n_agree) * agree + static_cast<double>(n_disagree) * disagree -
           static_cast<double>(n_missing) * std::numbers::ln2;
}

AgreementCount count_agreement(const ModelState& state, const ObservedTensor& t) {
    state.check_dims(t.dims());
    const auto entries = t.entries();
    AgreementCount count;
    detail::walk_product(state, t.dims(), [&](std::size_t offset, bool active) {
        const auto x = entries[offset];
        if (x == kMissing)
            return;
        ++count.observed;
        count.correct += (x == kObservedOne) == active;
    });
    return count;
}

} // namespace tensorm
