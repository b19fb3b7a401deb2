#include "tensorm/reconstruct.hpp"

#include <algorithm>
#include <string>

#include "tensorm/error.hpp"

namespace tensorm {

std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
    case EstimatorKind::PosteriorPredictive:
        return "posterior_predictive";
    case EstimatorKind::FactorMap:
        return "factor_map";
    case EstimatorKind::FactorMean:
        return "factor_mean";
    }
    return "unknown";
}

EstimatorKind estimator_from_string(std::string_view name) {
    for (auto kind : {EstimatorKind::PosteriorPredictive, EstimatorKind::FactorMap, EstimatorKind::FactorMean})
        if (to_string(kind) == name)
            return kind;
    throw ArgumentError("unknown estimator '" + std::string(name) + "'");
}

void Reconstruction::round() {
    hard.resize(probabilities.size());
    std::transform(probabilities.begin(), probabilities.end(), hard.begin(),
                   [](double p) { return static_cast<std::uint8_t>(round_to_binary(p)); });
}

ObservedTensor Reconstruction::to_tensor() const {
    std::vector<std::int8_t> entries(hard.size());
    std::transform(hard.begin(), hard.end(), entries.begin(),
                   [](std::uint8_t h) { return h ? kObservedOne : kObservedZero; });
    return ObservedTensor(dims, std::move(entries));
}

Reconstruction posterior_predictive(const PosteriorAccumulator& acc) {
    if (acc.samples_seen == 0)
        throw StateError("posterior predictive requested before any sample was accumulated");
    Reconstruction recon{acc.dims, acc.predictive_sums, {}, EstimatorKind::PosteriorPredictive};
    for (auto& p : recon.probabilities)
        p /= static_cast<double>(acc.samples_seen);
    recon.round();
    return recon;
}

ModelState factor_map_state(const PosteriorAccumulator& acc) {
    auto state = ModelState::zeros(acc.dims, acc.rank());
    state.labels = acc.labels;
    for (std::size_t k = 0; k < acc.dims.size(); ++k) {
        const auto mean = acc.factor_mean(k);
        for (std::size_t n = 0; n < mean.rows; ++n)
            for (std::size_t l = 0; l < mean.cols; ++l)
                state.factors[k].set(n, l, round_to_binary(mean(n, l)));
    }
    return state;
}

Reconstruction factor_map_reconstruct(const PosteriorAccumulator& acc) {
    const auto state = factor_map_state(acc);
    const auto product = boolean_product(state);
    Reconstruction recon{acc.dims, std::vector<double>(product.begin(), product.end()), product,
                         EstimatorKind::FactorMap};
    return recon;
}

Reconstruction factor_mean_reconstruct(const PosteriorAccumulator& acc) {
    const std::size_t order = acc.dims.size();
    const std::size_t rank = acc.rank();
    std::vector<RealMatrix> means;
    for (std::size_t k = 0; k < order; ++k)
        means.push_back(acc.factor_mean(k));

    Reconstruction recon{acc.dims, std::vector<double>(element_count(acc.dims)), {}, EstimatorKind::FactorMean};

    // prefix[k * rank + l] = prod_{j<k} mean_j(idx_j, l), refreshed odometer-style.
    std::vector<double> prefix((order + 1) * rank, 1.0);
    std::vector<std::size_t> idx(order, 0);
    auto refresh_from = [&](std::size_t from) {
        for (std::size_t k = from; k < order; ++k)
            for (std::size_t l = 0; l < rank; ++l)
                prefix[(k + 1) * rank + l] = prefix[k * rank + l] * means[k](idx[k], l);
    };
    refresh_from(0);
    for (std::size_t offset = 0; offset < recon.probabilities.size(); ++offset) {
        double none_active = 1.0;
        for (std::size_t l = 0; l < rank; ++l)
            none_active *= 1.0 - prefix[order * rank + l];
        recon.probabilities[offset] = 1.0 - none_active;

        std::size_t k = order;
        while (k-- > 0) {
            if (++idx[k] < acc.dims[k])
                break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1))
            break;
        refresh_from(k);
    }
    recon.round();
    return recon;
}

double accuracy(const Reconstruction& recon, const ObservedTensor& reference) {
    if (!std::equal(recon.dims.begin(), recon.dims.end(), reference.dims().begin(), reference.dims().end()))
        throw ArgumentError("reconstruction and reference have different extents");
    std::size_t in_scope = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto x = reference[i];
        if (x == kMissing)
            continue;
        ++in_scope;
        correct += (x == kObservedOne) == (recon.hard[i] != 0);
    }
    if (in_scope == 0)
        throw ArgumentError("accuracy over an empty set of observed entries");
    return static_cast<double>(correct) / static_cast<double>(in_scope);
}

double accuracy(const Reconstruction& recon, std::span<const HeldoutEntry> heldout) {
    if (heldout.empty())
        throw ArgumentError("accuracy over an empty held-out set");
    std::size_t correct = 0;
    for (const auto& e : heldout) {
        if (e.offset >= recon.hard.size())
            throw BoundsError("held-out offset outside the reconstruction");
        correct += e.value == (recon.hard[e.offset] != 0);
    }
    return static_cast<double>(correct) / static_cast<double>(heldout.size());
}

} // namespace tensorm
