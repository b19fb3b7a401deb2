#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tensorm/model.hpp"
#include "tensorm/sampler.hpp"
#include "tensorm/tensor.hpp"

namespace tensorm {

enum class EstimatorKind { PosteriorPredictive, FactorMap, FactorMean };

std::string_view to_string(EstimatorKind kind) noexcept;
/// Inverse of to_string; throws ArgumentError on unknown names.
EstimatorKind estimator_from_string(std::string_view name);

/// Rounding rule shared by every estimator: ties at exactly 1/2 go to 0.
inline bool round_to_binary(double p) noexcept { return p > 0.5; }

/// Per-entry probabilities p(x = 1) and their rounding, row-major.
struct Reconstruction {
    Extents dims;
    std::vector<double> probabilities;
    std::vector<std::uint8_t> hard;
    EstimatorKind kind = EstimatorKind::PosteriorPredictive;

    /// Fills `hard` from `probabilities`.
    void round();
    /// Hard reconstruction as a fully observed tensor.
    ObservedTensor to_tensor() const;
};

/// Average of per-sample predictive probabilities. Throws StateError when
/// no sample was accumulated.
Reconstruction posterior_predictive(const PosteriorAccumulator& acc);

/// Marginal MAP factors: posterior mean > 1/2 rounds to 1.
ModelState factor_map_state(const PosteriorAccumulator& acc);

/// Boolean product of the marginal MAP factors.
Reconstruction factor_map_reconstruct(const PosteriorAccumulator& acc);

/// p(x = 1) ~= 1 - prod_l (1 - prod_k mean_{n_k l}).
Reconstruction factor_mean_reconstruct(const PosteriorAccumulator& acc);

/// Fraction of observed reference entries matched by `recon.hard`.
/// Throws ArgumentError when dims differ or nothing is observed.
double accuracy(const Reconstruction& recon, const ObservedTensor& reference);

/// Fraction of held-out entries matched by `recon.hard`.
double accuracy(const Reconstruction& recon, std::span<const HeldoutEntry> heldout);

} // namespace tensorm
