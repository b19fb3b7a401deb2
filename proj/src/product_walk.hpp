#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tensorm/model.hpp"

namespace tensorm::detail {

/// Visits every entry in row-major order and reports whether the Boolean
/// product is active there: fn(offset, active). Partial ANDs over the
/// leading modes are cached, so the cost is O(entries * words).
template <class Fn>
void walk_product(const ModelState& state, std::span<const std::size_t> dims, Fn&& fn) {
    const std::size_t order = dims.size();
    const std::size_t words = state.factors.front().words();
    const std::size_t last = order - 1;

    // prefix[k] = AND of rows of modes 0..k-1 at the current index.
    std::vector<std::uint64_t> prefix((order) * words, ~std::uint64_t{0});
    std::vector<std::size_t> idx(order, 0);

    auto refresh_from = [&](std::size_t from) {
        for (std::size_t k = from; k < last; ++k) {
            const auto row = state.factors[k].row_mask(idx[k]);
            for (std::size_t w = 0; w < words; ++w)
                prefix[(k + 1) * words + w] = prefix[k * words + w] & row[w];
        }
    };
    refresh_from(0);

    const auto& fast = state.factors[last];
    const std::size_t n_last = dims[last];
    const std::uint64_t* head = prefix.data() + last * words;
    std::size_t offset = 0;
    for (;;) {
        for (std::size_t n = 0; n < n_last; ++n, ++offset) {
            const auto row = fast.row_mask(n);
            bool active = false;
            for (std::size_t w = 0; w < words && !active; ++w)
                active = (head[w] & row[w]) != 0;
            fn(offset, active);
        }
        // Advance the odometer over modes 0..K-2.
        std::size_t k = last;
        while (k-- > 0) {
            if (++idx[k] < dims[k])
                break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1))
            return;
        refresh_from(k);
    }
}

} // namespace tensorm::detail
