#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tensorm/model.hpp"
#include "tensorm/tensor.hpp"

namespace tensorm {

struct SamplerConfig {
    std::size_t rank = 1;
    std::size_t max_burn_in_sweeps = 500;
    /// Burn-in ends once the mean of sigmoid(lambda) over the last
    /// `convergence_window` sweeps differs from the mean over the window
    /// before it by less than `convergence_tol`.
    std::size_t convergence_window = 20;
    double convergence_tol = 1e-3;
    std::size_t n_samples = 50;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double lambda_init = 0.5;
    double alpha = 1.0;
    double beta = 1.0;
    /// When false lambda stays at lambda_init for the whole chain.
    bool fit_lambda = true;
    bool update_lambda_during_sampling = true;
    /// Visit modes in a fresh random order each sweep instead of 0..K-1.
    bool random_scan = false;
    /// Independent burn-in chains; sampling continues from the one whose
    /// factors reproduce the most observed entries.
    std::size_t restarts = 32;

    /// Throws ArgumentError on out-of-domain settings.
    void validate() const;
};

/// Running sums over posterior samples: factor bits (for posterior means)
/// and per-entry predictive probabilities p(x = 1 | sample).
struct PosteriorAccumulator {
    Extents dims;
    std::vector<int> labels;
    std::vector<RealMatrix> factor_sums;
    std::vector<double> predictive_sums;
    std::size_t samples_seen = 0;

    static PosteriorAccumulator for_model(const ModelState& state);

    void add(const ModelState& state);

    /// Posterior mean of mode k's factor matrix. Throws StateError if no
    /// sample has been added.
    RealMatrix factor_mean(std::size_t mode) const;
    std::size_t rank() const noexcept { return labels.size(); }
};

enum class Phase { BurnIn, Sample };

struct TraceRecord {
    std::size_t sweep;
    double sigma_lambda;
    /// NaN when the tensor has no observed entry.
    double train_accuracy;
    Phase phase;
};

struct Trace {
    std::vector<TraceRecord> records;
    std::size_t burn_in_sweeps = 0;
    /// False when burn-in hit max_burn_in_sweeps without meeting the
    /// convergence criterion; samples are still drawn.
    bool converged = false;
    /// Which burn-in chain was kept (see SamplerConfig::restarts).
    std::size_t restart = 0;
};

/// Newline-delimited JSON, one record per sweep:
/// {"sweep":1,"sigma_lambda":0.6,"train_accuracy":0.7,"phase":"burnin"}
void write_trace(std::ostream& out, const Trace& trace);

struct ChainResult {
    PosteriorAccumulator posterior;
    ModelState state;
    Trace trace;
};

/// Whether f_{row,l} of `mode` can change the likelihood of entry `idx`:
/// every co-parent in dimension l is active and no other dimension already
/// explains the entry. Evaluation stops at the first inactive co-parent or
/// the first fully active other dimension. Requires idx[mode] == row.
bool relevance_indicator(const ModelState& state, std::size_t mode, std::size_t row, std::size_t l,
                         std::span<const std::size_t> idx);

/// Sum of x~ over the slice idx[mode] == row restricted to relevant
/// entries (the integer count m of the full conditional). Missing entries
/// contribute zero.
long relevance_sum(const ModelState& state, const ObservedTensor& t, std::size_t mode, std::size_t row,
                   std::size_t l);

/// Full conditional probability of the current value of f_{row,l}.
double conditional_prob(const ModelState& state, const ObservedTensor& t, std::size_t mode, std::size_t row,
                        std::size_t l);

/// Full conditional probability that f_{row,l} = 1.
double conditional_prob_one(const ModelState& state, const ObservedTensor& t, std::size_t mode,
                            std::size_t row, std::size_t l);

/// Resamples every entry of mode `mode` from its full conditional. Rows are
/// independent given the other modes and run in parallel; row n draws from
/// the stream (seed, sweep, mode, n) so the result does not depend on
/// `threads`. Entries of a row are updated in order l = 0..L-1.
void sweep_mode(ModelState& state, const ObservedTensor& t, std::size_t mode, std::uint64_t seed,
                std::uint32_t sweep, std::size_t threads = 1);

/// Sets lambda to logit((alpha + #correct) / (alpha + beta + #observed))
/// and returns it. Missing entries are excluded from both counts.
double update_lambda(ModelState& state, const ObservedTensor& t);

/// Factors drawn i.i.d. Bernoulli(1/2) from the (seed, Init) streams.
ModelState random_state(std::span<const std::size_t> dims, std::size_t rank, std::uint64_t seed,
                        NoiseModel noise = {});

/// Burn-in until convergence (or the sweep cap), then n_samples sweeps
/// feeding the accumulator. Without `initial`, factors start i.i.d.
/// Bernoulli(1/2) and lambda at lambda_init; a supplied initial state keeps
/// its factors and labels and takes lambda_init and the prior from `cfg`.
ChainResult run_chain(const ObservedTensor& t, const SamplerConfig& cfg,
                      std::optional<ModelState> initial = std::nullopt);

} // namespace tensorm
