#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tensorm/model.hpp"
#include "tensorm/sampler.hpp"
#include "tensorm/tensor.hpp"

namespace tensorm {

enum class SelectionMethod { Occam, CrossValidation };

/// One cross-validation candidate.
struct CandidateScore {
    std::size_t rank = 0;
    /// Posterior-predictive accuracy on the held-out entries.
    double heldout_accuracy = 0.0;
    std::uint64_t seed = 0;
    std::size_t burn_in_sweeps = 0;
    bool converged = false;
};

/// One converge-then-prune round of the Occam procedure.
struct PruningStep {
    std::size_t rank_before = 0;
    std::size_t rank_after = 0;
    /// Stable labels of the dimensions removed in this round.
    std::vector<int> removed_labels;
    /// Training log-likelihood of the MAP factors at the chain's final lambda.
    double log_likelihood = 0.0;
    /// Observed entries reproduced by the MAP factors before pruning.
    std::size_t correct_before = 0;
    std::uint64_t seed = 0;
    std::size_t burn_in_sweeps = 0;
    bool converged = false;
};

struct RankSelectionReport {
    SelectionMethod method = SelectionMethod::Occam;
    std::size_t chosen_rank = 0;
    std::vector<CandidateScore> candidates;
    std::vector<PruningStep> history;
    /// Occam only: MAP factors of the final model, labels preserved.
    ModelState final_state;
};

/// Latent dimensions (positions) of `map_state` that do not contribute.
/// Dimensions are tested in order against the model with every earlier
/// non-contributing dimension already zeroed; dimension l contributes iff
/// zeroing its columns lowers the count of correctly reproduced observed
/// entries by more than `threshold` (0: any strict decrease).
std::vector<std::size_t> non_contributing_dimensions(const ModelState& map_state, const ObservedTensor& t,
                                                     std::size_t threshold = 0);

/// Bayesian Occam's razor: start at `initial_rank`, run the chain, prune
/// non-contributing dimensions from the MAP factors, restart burn-in from
/// the pruned MAP state, until every remaining dimension contributes.
/// Throws ArgumentError when initial_rank == 0.
RankSelectionReport occam_select(const ObservedTensor& t, std::size_t initial_rank, const SamplerConfig& cfg,
                                 std::size_t threshold = 0);

/// Fits every candidate rank on the same training split (seeded by
/// cfg.seed) and picks the best held-out posterior-predictive accuracy;
/// ties go to the smallest rank.
RankSelectionReport cv_select(const ObservedTensor& t, std::span<const std::size_t> ranks, double holdout_fraction,
                              const SamplerConfig& cfg, std::size_t jobs = 1);

/// Human-readable table.
void write_report_table(std::ostream& out, const RankSelectionReport& report);
/// Newline-delimited JSON records, one per candidate or pruning round,
/// followed by a {"chosen_rank":...} record.
void write_report_records(std::ostream& out, const RankSelectionReport& report);

} // namespace tensorm
