#pragma once

#include <cstddef>
#include <cstdint>

#include "tensorm/model.hpp"
#include "tensorm/tensor.hpp"

namespace tensorm {

/// Random Boolean tensor: i.i.d. Bernoulli(factor_density) factors, their
/// Boolean product, then every entry flipped with probability noise_p.
struct SimSpec {
    Extents dims;
    std::size_t rank = 1;
    double factor_density = 0.5;
    double noise_p = 0.0;
    std::uint64_t seed = 0;

    /// Throws ArgumentError unless factor_density is in (0,1) and noise_p in [0, 0.5).
    void validate() const;
};

struct SimulatedData {
    ObservedTensor clean;
    ObservedTensor noisy;
    ModelState truth;
};

/// Expected fraction of ones in the product: 1 - (1 - d^K)^L.
double expected_density(double factor_density, std::size_t rank, std::size_t order);

/// Factor density d with expected_density(d, rank, order) == target.
/// Throws ArgumentError unless 0 < target < 1 and rank >= 1.
double density_for_target(double target, std::size_t rank, std::size_t order);

/// Pure function of `spec`; both tensors are fully observed.
SimulatedData generate(const SimSpec& spec);

} // namespace tensorm
