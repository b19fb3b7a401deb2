#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tensorm/reconstruct.hpp"
#include "tensorm/sampler.hpp"
#include "tensorm/simulate.hpp"

namespace tensorm {

/// Noise x expected-density x rank sweep over simulated tensors. Every
/// cell is simulated, fitted and scored independently.
struct BenchmarkGrid {
    Extents dims{20, 20, 20};
    std::vector<double> noise_levels{0.1};
    /// Expected tensor densities; converted to factor densities per rank.
    std::vector<double> target_densities{0.3};
    std::vector<std::size_t> ranks{5};
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    /// Fit rank; the true rank of the cell when unset.
    std::optional<std::size_t> rank_fit;
    std::vector<EstimatorKind> estimators{EstimatorKind::PosteriorPredictive};
    /// Sampler settings; rank and seed are overridden per cell.
    SamplerConfig sampler;
    /// Cells evaluated concurrently.
    std::size_t jobs = 1;
};

struct BenchmarkRow {
    std::uint64_t seed = 0;
    Extents dims;
    std::size_t rank_true = 0;
    std::size_t rank_fit = 0;
    double factor_density = 0.0;
    double noise_p = 0.0;
    EstimatorKind estimator = EstimatorKind::PosteriorPredictive;
    /// Accuracy against the noisy training tensor.
    double train_acc = 0.0;
    /// Accuracy against the noise-free tensor.
    double test_acc = 0.0;
    std::size_t sweeps_to_converge = 0;
    double wall_ms = 0.0;
};

/// Rows ordered by (noise, density, rank, repetition, estimator), which is
/// independent of `jobs`.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkGrid& grid);

/// CSV with header
/// seed,dims,rank_true,rank_fit,factor_density,noise_p,estimator,train_acc,test_acc,sweeps_to_converge,wall_ms
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

} // namespace tensorm
