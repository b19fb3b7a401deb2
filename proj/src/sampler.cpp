#include "tensorm/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "product_walk.hpp"
#include "tensorm/error.hpp"
#include "tensorm/rng.hpp"

namespace tensorm {

void SamplerConfig::validate() const {
    if (n_samples < 1)
        throw ArgumentError("n_samples must be at least 1");
    if (convergence_window < 2)
        throw ArgumentError("convergence_window must be at least 2");
    if (!(convergence_tol >= 0.0))
        throw ArgumentError("convergence_tol must be non-negative");
    if (!(lambda_init >= 0.0) || !std::isfinite(lambda_init))
        throw ArgumentError("lambda_init must be a finite non-negative number");
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw ArgumentError("alpha and beta must be positive");
    if (threads < 1)
        throw ArgumentError("threads must be at least 1");
    if (restarts < 1)
        throw ArgumentError("restarts must be at least 1");
}

// ---------------------------------------------------------------------------
// Posterior accumulation

PosteriorAccumulator PosteriorAccumulator::for_model(const ModelState& state) {
    PosteriorAccumulator acc;
    acc.labels = state.labels;
    for (const auto& f : state.factors) {
        acc.dims.push_back(f.rows());
        acc.factor_sums.push_back({f.rows(), f.rank(), std::vector<double>(f.rows() * f.rank(), 0.0)});
    }
    acc.predictive_sums.assign(element_count(acc.dims), 0.0);
    return acc;
}

void PosteriorAccumulator::add(const ModelState& state) {
    state.check_dims(dims);
    if (state.rank() != rank())
        throw ArgumentError("sample rank differs from accumulator rank");
    for (std::size_t k = 0; k < state.order(); ++k) {
        const auto& f = state.factors[k];
        auto& sums = factor_sums[k];
        for (std::size_t n = 0; n < f.rows(); ++n)
            for (std::size_t l = 0; l < f.rank(); ++l)
                sums(n, l) += f.get(n, l) ? 1.0 : 0.0;
    }
    const double p_active = sigmoid(state.noise.lambda);
    const double p_inactive = sigmoid(-state.noise.lambda);
    detail::walk_product(state, dims, [&](std::size_t offset, bool active) {
        predictive_sums[offset] += active ? p_active : p_inactive;
    });
    ++samples_seen;
}

RealMatrix PosteriorAccumulator::factor_mean(std::size_t mode) const {
    if (samples_seen == 0)
        throw StateError("posterior mean requested before any sample was accumulated");
    RealMatrix mean = factor_sums.at(mode);
    for (auto& v : mean.values)
        v /= static_cast<double>(samples_seen);
    return mean;
}

// ---------------------------------------------------------------------------
// Trace

void write_trace(std::ostream& out, const Trace& trace) {
    for (const auto& r : trace.records) {
        out << fmt::format(R"({{"sweep":{},"sigma_lambda":{},"train_accuracy":{},"phase":"{}"}})", r.sweep,
                           r.sigma_lambda,
                           std::isnan(r.train_accuracy) ? std::string("null") : fmt::format("{}", r.train_accuracy),
                           r.phase == Phase::BurnIn ? "burnin" : "sample")
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Reference evaluation of the full conditional, entry by entry.

bool relevance_indicator(const ModelState& state, std::size_t mode, std::size_t row, std::size_t l,
                         std::span<const std::size_t> idx) {
    if (idx.size() != state.order() || mode >= idx.size() || idx[mode] != row)
        throw ArgumentError("index tuple does not lie in the slice of the given row");
    // Co-parents in dimension l: any zero makes f_{row,l} irrelevant.
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (k != mode && !state.factors[k].get(idx[k], l))
            return false;
    // Explaining away: another dimension already fully active at idx.
    for (std::size_t other = 0; other < state.rank(); ++other) {
        if (other == l)
            continue;
        bool all_active = true;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (!state.factors[k].get(idx[k], other)) {
                all_active = false;
                break;
            }
        }
        if (all_active)
            return false;
    }
    return true;
}

long relevance_sum(const ModelState& state, const ObservedTensor& t, std::size_t mode, std::size_t row,
                   std::size_t l) {
    state.check_dims(t.dims());
    if (mode >= t.order() || row >= t.dims()[mode] || l >= state.rank())
        throw BoundsError("factor coordinate out of range");

    const auto dims = t.dims();
    Index idx(dims.size(), 0);
    idx[mode] = row;
    long m = 0;
    for (;;) {
        const auto x = t.at(idx);
        if (x != kMissing && relevance_indicator(state, mode, row, l, idx))
            m += x;
        std::size_t k = dims.size();
        while (k-- > 0) {
            if (k == mode)
                continue;
            if (++idx[k] < dims[k])
                break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1))
            return m;
    }
}

double conditional_prob_one(const ModelState& state, const ObservedTensor& t, std::size_t mode,
                            std::size_t row, std::size_t l) {
    const auto m = relevance_sum(state, t, mode, row, l);
    return sigmoid(state.noise.lambda * static_cast<double>(m));
}

double conditional_prob(const ModelState& state, const ObservedTensor& t, std::size_t mode, std::size_t row,
                        std::size_t l) {
    const auto m = relevance_sum(state, t, mode, row, l);
    const double sign = state.factors[mode].get(row, l) ? 1.0 : -1.0;
    return sigmoid(state.noise.lambda * sign * static_cast<double>(m));
}

// ---------------------------------------------------------------------------
// Sweep kernel.
//
// While mode k is swept every other factor matrix is fixed, so for each
// position p of the (K-1)-way complement the conjunction c_p of the other
// modes' rows is fixed too. f_{n,l} is relevant for entry (n, p) iff bit l
// of c_p is set and (c_p & row_n) has no bit other than l set. Positions
// are bucketed by the dimensions active in c_p, which skips every entry
// with an inactive co-parent without touching it.

namespace {

class ModeKernel {
  public:
    void sweep(ModelState& state, const ObservedTensor& t, std::size_t mode, std::uint64_t seed,
               std::uint32_t sweep_index, std::size_t threads) {
        prepare(state, t.dims(), mode);
        const std::size_t words = state.factors[mode].words();
        switch (words) {
        case 1:
            sweep_rows<1>(state, t, mode, seed, sweep_index, threads);
            break;
        case 2:
            sweep_rows<2>(state, t, mode, seed, sweep_index, threads);
            break;
        default:
            sweep_rows<0>(state, t, mode, seed, sweep_index, threads);
            break;
        }
    }

  private:
    void prepare(const ModelState& state, std::span<const std::size_t> dims, std::size_t mode) {
        const std::size_t order = dims.size();
        const std::size_t words = state.factors[mode].words();
        const std::size_t rank = state.rank();
        std::size_t n_positions = 1;
        for (std::size_t k = 0; k < order; ++k)
            if (k != mode)
                n_positions *= dims[k];

        std::vector<std::size_t> strides(order, 1);
        for (std::size_t k = order; k-- > 1;)
            strides[k - 1] = strides[k] * dims[k];

        offsets_.resize(n_positions);
        conj_.assign(n_positions * words, 0);
        std::vector<std::size_t> idx(order, 0);
        for (std::size_t p = 0; p < n_positions; ++p) {
            std::size_t offset = 0;
            std::uint64_t* c = conj_.data() + p * words;
            for (std::size_t w = 0; w < words; ++w)
                c[w] = ~std::uint64_t{0};
            for (std::size_t k = 0; k < order; ++k) {
                if (k == mode)
                    continue;
                offset += idx[k] * strides[k];
                const auto row = state.factors[k].row_mask(idx[k]);
                for (std::size_t w = 0; w < words; ++w)
                    c[w] &= row[w];
            }
            offsets_[p] = offset;
            for (std::size_t k = order; k-- > 0;) {
                if (k == mode)
                    continue;
                if (++idx[k] < dims[k])
                    break;
                idx[k] = 0;
            }
        }

        // Bucket positions by active dimension (CSR layout).
        bucket_start_.assign(rank + 1, 0);
        for (std::size_t p = 0; p < n_positions; ++p) {
            const std::uint64_t* c = conj_.data() + p * words;
            for (std::size_t w = 0; w < words; ++w)
                for (auto bits = c[w]; bits != 0; bits &= bits - 1)
                    ++bucket_start_[w * 64 + static_cast<std::size_t>(std::countr_zero(bits)) + 1];
        }
        std::partial_sum(bucket_start_.begin(), bucket_start_.end(), bucket_start_.begin());
        buckets_.resize(bucket_start_.back());
        fill_.assign(bucket_start_.begin(), bucket_start_.end() - 1);
        for (std::size_t p = 0; p < n_positions; ++p) {
            const std::uint64_t* c = conj_.data() + p * words;
            for (std::size_t w = 0; w < words; ++w)
                for (auto bits = c[w]; bits != 0; bits &= bits - 1)
                    buckets_[fill_[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))]++] = p;
        }
    }

    template <std::size_t StaticWords>
    void sweep_rows(ModelState& state, const ObservedTensor& t, std::size_t mode, std::uint64_t seed,
                    std::uint32_t sweep_index, std::size_t threads) {
        auto& factor = state.factors[mode];
        const std::size_t words = StaticWords != 0 ? StaticWords : factor.words();
        const std::size_t rank = factor.rank();
        const std::size_t stride = t.strides()[mode];
        const std::int8_t* x = t.entries().data();
        const double lambda = state.noise.lambda;
        const auto n_rows = static_cast<long>(factor.rows());

#pragma omp parallel for schedule(static) num_threads(static_cast<int>(threads)) if (threads > 1)
        for (long row = 0; row < n_rows; ++row) {
            CounterRng rng(seed, StreamTag::Sweep, sweep_index, static_cast<std::uint32_t>(mode),
                           static_cast<std::uint32_t>(row));
            auto mask = factor.row_mask(static_cast<std::size_t>(row));
            std::vector<std::uint64_t> local(mask.begin(), mask.end());
            std::uint64_t* r = local.data();
            const std::int8_t* slice = x + static_cast<std::size_t>(row) * stride;

            for (std::size_t l = 0; l < rank; ++l) {
                const std::size_t lw = l / 64;
                const std::uint64_t lbit = std::uint64_t{1} << (l % 64);
                r[lw] &= ~lbit; // other dimensions only

                long m = 0;
                const std::size_t end = bucket_start_[l + 1];
                for (std::size_t b = bucket_start_[l]; b < end; ++b) {
                    const std::size_t p = buckets_[b];
                    const std::uint64_t* c = conj_.data() + p * words;
                    std::uint64_t overlap = 0;
                    for (std::size_t w = 0; w < words; ++w)
                        overlap |= c[w] & r[w];
                    // Masked add: whether another dimension explains the entry is
                    // close to a coin flip at higher rank, so a branch mispredicts.
                    m += slice[offsets_[p]] & -static_cast<long>(overlap == 0);
                }
                const double p_one = sigmoid(lambda * static_cast<double>(m));
                if (rng.uniform() < p_one)
                    r[lw] |= lbit;
            }
            std::copy(local.begin(), local.end(), mask.begin());
        }
    }

    std::vector<std::size_t> offsets_;
    std::vector<std::uint64_t> conj_;
    std::vector<std::size_t> bucket_start_;
    std::vector<std::size_t> fill_;
    std::vector<std::size_t> buckets_;
};

std::size_t resolve_sweep_threads(std::size_t threads) { return threads == 0 ? 1 : threads; }

double smoothed_logit(const NoiseModel& noise, const AgreementCount& count) {
    const double fraction = (noise.alpha + static_cast<double>(count.correct)) /
                            (noise.alpha + noise.beta + static_cast<double>(count.observed));
    return logit(fraction);
}

} // namespace

void sweep_mode(ModelState& state, const ObservedTensor& t, std::size_t mode, std::uint64_t seed,
                std::uint32_t sweep, std::size_t threads) {
    state.check_dims(t.dims());
    if (mode >= t.order())
        throw BoundsError("mode " + std::to_string(mode) + " out of range");
    ModeKernel kernel;
    kernel.sweep(state, t, mode, seed, sweep, resolve_sweep_threads(threads));
}

double update_lambda(ModelState& state, const ObservedTensor& t) {
    state.noise.lambda = smoothed_logit(state.noise, count_agreement(state, t));
    return state.noise.lambda;
}

ModelState random_state(std::span<const std::size_t> dims, std::size_t rank, std::uint64_t seed,
                        NoiseModel noise) {
    auto state = ModelState::zeros(dims, rank, noise);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        for (std::size_t n = 0; n < dims[k]; ++n) {
            CounterRng rng(seed, StreamTag::Init, 0, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(n));
            for (std::size_t l = 0; l < rank; ++l)
                state.factors[k].set(n, l, rng.bernoulli(0.5));
        }
    }
    return state;
}

// ---------------------------------------------------------------------------
// Chain driver

namespace {

double window_mean(const std::vector<TraceRecord>& records, std::size_t end, std::size_t window) {
    double sum = 0.0;
    for (std::size_t i = end - window; i < end; ++i)
        sum += records[i].sigma_lambda;
    return sum / static_cast<double>(window);
}

} // namespace

namespace {

/// One chain: burn-in followed (when `acc` is set) by sampling sweeps.
class Chain {
  public:
    Chain(const ObservedTensor& t, const SamplerConfig& cfg, std::uint64_t seed, ModelState state)
        : t_(t), cfg_(cfg), seed_(seed), state_(std::move(state)), mode_order_(t.order()) {
        std::iota(mode_order_.begin(), mode_order_.end(), std::size_t{0});
    }

    void burn_in() {
        const std::size_t window = cfg_.convergence_window;
        for (std::size_t s = 0; s < cfg_.max_burn_in_sweeps; ++s) {
            sweep(Phase::BurnIn);
            const auto n = trace_.records.size();
            if (n >= 2 * window &&
                std::abs(window_mean(trace_.records, n, window) - window_mean(trace_.records, n - window, window)) <
                    cfg_.convergence_tol) {
                trace_.converged = true;
                break;
            }
        }
        trace_.burn_in_sweeps = trace_.records.size();
    }

    void sample(PosteriorAccumulator& acc) {
        for (std::size_t s = 0; s < cfg_.n_samples; ++s) {
            sweep(Phase::Sample);
            acc.add(state_);
        }
    }

    std::size_t correct() const { return last_correct_; }
    ModelState& state() { return state_; }
    Trace& trace() { return trace_; }

  private:
    void sweep(Phase phase) {
        ++sweep_;
        if (cfg_.random_scan) {
            CounterRng rng(seed_, StreamTag::ScanOrder, sweep_, 0, 0);
            std::iota(mode_order_.begin(), mode_order_.end(), std::size_t{0});
            for (std::size_t i = mode_order_.size(); i > 1; --i)
                std::swap(mode_order_[i - 1], mode_order_[static_cast<std::size_t>(rng.below(i))]);
        }
        for (auto k : mode_order_)
            kernel_.sweep(state_, t_, k, seed_, sweep_, cfg_.threads);

        const bool refit = cfg_.fit_lambda && (phase == Phase::BurnIn || cfg_.update_lambda_during_sampling);
        const auto count = count_agreement(state_, t_);
        last_correct_ = count.correct;
        if (refit)
            state_.noise.lambda = smoothed_logit(state_.noise, count);
        const double accuracy = count.observed == 0
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : static_cast<double>(count.correct) / static_cast<double>(count.observed);
        trace_.records.push_back({sweep_, state_.noise.sigma(), accuracy, phase});
    }

    const ObservedTensor& t_;
    const SamplerConfig& cfg_;
    std::uint64_t seed_;
    ModelState state_;
    std::vector<std::size_t> mode_order_;
    ModeKernel kernel_;
    Trace trace_;
    std::uint32_t sweep_ = 0;
    std::size_t last_correct_ = 0;
};

} // namespace

ChainResult run_chain(const ObservedTensor& t, const SamplerConfig& cfg, std::optional<ModelState> initial) {
    cfg.validate();
    const NoiseModel noise{cfg.lambda_init, cfg.alpha, cfg.beta};
    if (initial)
        initial->check_dims(t.dims());

    std::optional<Chain> best;
    std::size_t best_index = 0;
    for (std::size_t c = 0; c < cfg.restarts; ++c) {
        // Restart 0 keeps the caller's seed and initial state.
        const std::uint64_t seed = c == 0 ? cfg.seed : derive_seed(cfg.seed, c);
        ModelState start;
        if (initial && c == 0) {
            start = *initial;
            start.noise = noise;
        } else {
            const std::size_t rank = initial ? initial->rank() : cfg.rank;
            start = random_state(t.dims(), rank, seed, noise);
            if (initial)
                start.labels = initial->labels;
        }
        Chain chain(t, cfg, seed, std::move(start));
        chain.burn_in();
        if (!best || chain.correct() > best->correct()) {
            best.emplace(std::move(chain));
            best_index = c;
        }
    }

    ChainResult result{PosteriorAccumulator::for_model(best->state()), {}, {}};
    best->sample(result.posterior);
    result.trace = std::move(best->trace());
    result.trace.restart = best_index;
    result.state = std::move(best->state());
    return result;
}

} // namespace tensorm
