#include "tensorm/modelselect.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tensorm/error.hpp"
#include "tensorm/reconstruct.hpp"
#include "tensorm/rng.hpp"

namespace tensorm {

std::vector<std::size_t> non_contributing_dimensions(const ModelState& map_state, const ObservedTensor& t,
                                                     std::size_t threshold) {
    ModelState current = map_state;
    std::size_t correct = count_agreement(current, t).correct;
    std::vector<std::size_t> removed;
    for (std::size_t l = 0; l < current.rank(); ++l) {
        ModelState trial = current;
        for (auto& f : trial.factors)
            f.clear_column(l);
        const std::size_t trial_correct = count_agreement(trial, t).correct;
        const bool contributes = trial_correct < correct && correct - trial_correct > threshold;
        if (!contributes) {
            current = std::move(trial);
            correct = trial_correct;
            removed.push_back(l);
        }
    }
    return removed;
}

RankSelectionReport occam_select(const ObservedTensor& t, std::size_t initial_rank, const SamplerConfig& cfg,
                                 std::size_t threshold) {
    if (initial_rank == 0)
        throw ArgumentError("Occam selection needs a starting rank of at least 1");

    RankSelectionReport report;
    report.method = SelectionMethod::Occam;

    std::optional<ModelState> warm;
    std::size_t rank = initial_rank;
    for (std::uint64_t round = 0;; ++round) {
        SamplerConfig round_cfg = cfg;
        round_cfg.rank = rank;
        round_cfg.seed = derive_seed(cfg.seed, round);
        const auto chain = run_chain(t, round_cfg, std::move(warm));
        warm.reset();

        auto map_state = factor_map_state(chain.posterior);
        map_state.noise = chain.state.noise;
        const auto removed = non_contributing_dimensions(map_state, t, threshold);

        PruningStep step;
        step.rank_before = rank;
        step.rank_after = rank - removed.size();
        for (auto pos : removed)
            step.removed_labels.push_back(map_state.labels[pos]);
        step.log_likelihood = total_log_likelihood(map_state, t);
        step.correct_before = count_agreement(map_state, t).correct;
        step.seed = round_cfg.seed;
        step.burn_in_sweeps = chain.trace.burn_in_sweeps;
        step.converged = chain.trace.converged;
        report.history.push_back(step);

        map_state.remove_dimensions(removed);
        rank = map_state.rank();
        if (removed.empty() || rank == 0) {
            report.chosen_rank = rank;
            report.final_state = std::move(map_state);
            return report;
        }
        warm = std::move(map_state);
    }
}

RankSelectionReport cv_select(const ObservedTensor& t, std::span<const std::size_t> ranks, double holdout_fraction,
                              const SamplerConfig& cfg, std::size_t jobs) {
    if (ranks.empty())
        throw ArgumentError("cross-validation needs at least one candidate rank");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ArgumentError("holdout fraction must lie in (0, 1)");
    if (jobs < 1)
        throw ArgumentError("jobs must be at least 1");
    cfg.validate();

    const auto split = mask_holdout(t, holdout_fraction, cfg.seed);
    if (split.heldout.empty())
        throw ArgumentError("holdout fraction selects no observed entry");

    RankSelectionReport report;
    report.method = SelectionMethod::CrossValidation;
    report.candidates.resize(ranks.size());
    const auto n = static_cast<long>(ranks.size());

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(jobs)) if (jobs > 1)
    for (long i = 0; i < n; ++i) {
        SamplerConfig candidate_cfg = cfg;
        candidate_cfg.rank = ranks[static_cast<std::size_t>(i)];
        candidate_cfg.seed = derive_seed(cfg.seed, candidate_cfg.rank + 1);
        const auto chain = run_chain(split.train, candidate_cfg);
        auto& c = report.candidates[static_cast<std::size_t>(i)];
        c.rank = candidate_cfg.rank;
        c.heldout_accuracy = accuracy(posterior_predictive(chain.posterior), split.heldout);
        c.seed = candidate_cfg.seed;
        c.burn_in_sweeps = chain.trace.burn_in_sweeps;
        c.converged = chain.trace.converged;
    }

    const auto best = std::min_element(report.candidates.begin(), report.candidates.end(),
                                       [](const CandidateScore& a, const CandidateScore& b) {
                                           if (a.heldout_accuracy != b.heldout_accuracy)
                                               return a.heldout_accuracy > b.heldout_accuracy;
                                           return a.rank < b.rank;
                                       });
    report.chosen_rank = best->rank;
    return report;
}

void write_report_table(std::ostream& out, const RankSelectionReport& report) {
    if (report.method == SelectionMethod::CrossValidation) {
        out << "method: cross_validation\n";
        out << fmt::format("{:>6}  {:>16}  {:>8}  {:>9}  {}\n", "rank", "heldout_accuracy", "burn_in", "converged",
                           "seed");
        for (const auto& c : report.candidates)
            out << fmt::format("{:>6}  {:>16.6f}  {:>8}  {:>9}  {}\n", c.rank, c.heldout_accuracy, c.burn_in_sweeps,
                               c.converged ? "yes" : "no", c.seed);
    } else {
        out << "method: occam\n";
        out << fmt::format("{:>5}  {:>6}  {:>6}  {:>16}  {:>8}  {:>9}  {}\n", "round", "before", "after",
                           "log_likelihood", "burn_in", "converged", "removed_labels");
        for (std::size_t i = 0; i < report.history.size(); ++i) {
            const auto& s = report.history[i];
            out << fmt::format("{:>5}  {:>6}  {:>6}  {:>16.4f}  {:>8}  {:>9}  [{}]\n", i, s.rank_before, s.rank_after,
                               s.log_likelihood, s.burn_in_sweeps, s.converged ? "yes" : "no",
                               fmt::join(s.removed_labels, ","));
        }
    }
    out << "chosen_rank: " << report.chosen_rank << '\n';
}

void write_report_records(std::ostream& out, const RankSelectionReport& report) {
    if (report.method == SelectionMethod::CrossValidation) {
        for (const auto& c : report.candidates)
            out << fmt::format(
                R"({{"method":"cross_validation","rank":{},"heldout_accuracy":{},"burn_in_sweeps":{},"converged":{},"seed":{}}})",
                c.rank, c.heldout_accuracy, c.burn_in_sweeps, c.converged, c.seed)
                << '\n';
    } else {
        for (std::size_t i = 0; i < report.history.size(); ++i) {
            const auto& s = report.history[i];
            out << fmt::format(
                R"({{"method":"occam","round":{},"rank_before":{},"rank_after":{},"removed_labels":[{}],"log_likelihood":{},"correct_before":{},"burn_in_sweeps":{},"converged":{},"seed":{}}})",
                i, s.rank_before, s.rank_after, fmt::join(s.removed_labels, ","), s.log_likelihood, s.correct_before,
                s.burn_in_sweeps, s.converged, s.seed)
                << '\n';
        }
    }
    out << fmt::format(R"({{"chosen_rank":{}}})", report.chosen_rank) << '\n';
}

} // namespace tensorm
