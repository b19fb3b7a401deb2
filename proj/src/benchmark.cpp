#include "tensorm/benchmark.hpp"

#include <chrono>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tensorm/error.hpp"
#include "tensorm/rng.hpp"

namespace tensorm {

namespace {

struct Cell {
    double noise;
    double target;
    std::size_t rank;
    std::size_t repetition;
};

Reconstruction estimate(EstimatorKind kind, const PosteriorAccumulator& acc) {
    switch (kind) {
    case EstimatorKind::PosteriorPredictive:
        return posterior_predictive(acc);
    case EstimatorKind::FactorMap:
        return factor_map_reconstruct(acc);
    case EstimatorKind::FactorMean:
        return factor_mean_reconstruct(acc);
    }
    throw ArgumentError("unknown estimator");
}

} // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkGrid& grid) {
    if (grid.estimators.empty())
        throw ArgumentError("benchmark needs at least one estimator");
    if (grid.jobs < 1)
        throw ArgumentError("benchmark jobs must be at least 1");

    std::vector<Cell> cells;
    for (auto noise : grid.noise_levels)
        for (auto target : grid.target_densities)
            for (auto rank : grid.ranks)
                for (std::size_t rep = 0; rep < grid.repetitions; ++rep)
                    cells.push_back({noise, target, rank, rep});

    // Validate every cell up front so a bad grid fails before any work.
    for (const auto& c : cells) {
        SimSpec{grid.dims, c.rank, density_for_target(c.target, c.rank, grid.dims.size()), c.noise, 0}.validate();
        SamplerConfig check = grid.sampler;
        check.rank = grid.rank_fit.value_or(c.rank);
        check.validate();
    }

    const std::size_t n_est = grid.estimators.size();
    std::vector<BenchmarkRow> rows(cells.size() * n_est);
    const auto n_cells = static_cast<long>(cells.size());

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(grid.jobs)) if (grid.jobs > 1)
    for (long i = 0; i < n_cells; ++i) {
        const auto& c = cells[static_cast<std::size_t>(i)];
        const std::uint64_t cell_seed = derive_seed(grid.seed, static_cast<std::uint64_t>(i));
        SimSpec spec{grid.dims, c.rank, density_for_target(c.target, c.rank, grid.dims.size()), c.noise, cell_seed};
        const auto data = generate(spec);

        SamplerConfig cfg = grid.sampler;
        cfg.rank = grid.rank_fit.value_or(c.rank);
        cfg.seed = derive_seed(cell_seed, 1);
        const auto start = std::chrono::steady_clock::now();
        const auto chain = run_chain(data.noisy, cfg);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        for (std::size_t e = 0; e < n_est; ++e) {
            const auto recon = estimate(grid.estimators[e], chain.posterior);
            auto& row = rows[static_cast<std::size_t>(i) * n_est + e];
            row.seed = cell_seed;
            row.dims = grid.dims;
            row.rank_true = c.rank;
            row.rank_fit = cfg.rank;
            row.factor_density = spec.factor_density;
            row.noise_p = c.noise;
            row.estimator = grid.estimators[e];
            row.train_acc = accuracy(recon, data.noisy);
            row.test_acc = accuracy(recon, data.clean);
            row.sweeps_to_converge = chain.trace.burn_in_sweeps;
            row.wall_ms = wall_ms;
        }
    }
    return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "seed,dims,rank_true,rank_fit,factor_density,noise_p,estimator,train_acc,test_acc,sweeps_to_converge,"
           "wall_ms\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{:.3f}\n", r.seed, fmt::join(r.dims, "x"), r.rank_true,
                           r.rank_fit, r.factor_density, r.noise_p, to_string(r.estimator), r.train_acc, r.test_acc,
                           r.sweeps_to_converge, r.wall_ms);
}

} // namespace tensorm
