#include "tensorm/simulate.hpp"

#include <cmath>
#include <string>

#include "tensorm/error.hpp"
#include "tensorm/rng.hpp"

namespace tensorm {

void SimSpec::validate() const {
    if (dims.size() < 2)
        throw ArgumentError("simulation needs at least 2 modes");
    if (!(factor_density > 0.0 && factor_density < 1.0))
        throw ArgumentError("factor density must lie in (0, 1), got " + std::to_string(factor_density));
    if (!(noise_p >= 0.0 && noise_p < 0.5))
        throw ArgumentError("noise level must lie in [0, 0.5), got " + std::to_string(noise_p));
}

double expected_density(double factor_density, std::size_t rank, std::size_t order) {
    const double block = std::pow(factor_density, static_cast<double>(order));
    return 1.0 - std::pow(1.0 - block, static_cast<double>(rank));
}

double density_for_target(double target, std::size_t rank, std::size_t order) {
    if (!(target > 0.0 && target < 1.0))
        throw ArgumentError("target density must lie in (0, 1), got " + std::to_string(target));
    if (rank == 0 || order == 0)
        throw ArgumentError("target density needs rank >= 1 and order >= 1");
    // 1 - (1-target)^(1/L), written with expm1/log1p to keep precision near 0.
    const double block = -std::expm1(std::log1p(-target) / static_cast<double>(rank));
    return std::pow(block, 1.0 / static_cast<double>(order));
}

SimulatedData generate(const SimSpec& spec) {
    spec.validate();
    auto truth = ModelState::zeros(spec.dims, spec.rank);
    for (std::size_t k = 0; k < spec.dims.size(); ++k) {
        for (std::size_t n = 0; n < spec.dims[k]; ++n) {
            CounterRng rng(spec.seed, StreamTag::SimFactors, 0, static_cast<std::uint32_t>(k),
                           static_cast<std::uint32_t>(n));
            for (std::size_t l = 0; l < spec.rank; ++l)
                truth.factors[k].set(n, l, rng.bernoulli(spec.factor_density));
        }
    }

    const auto product = boolean_product(truth);
    std::vector<std::int8_t> clean(product.size());
    std::vector<std::int8_t> noisy(product.size());
    CounterRng noise(spec.seed, StreamTag::SimNoise, 0, 0, 0);
    for (std::size_t i = 0; i < product.size(); ++i) {
        clean[i] = product[i] ? kObservedOne : kObservedZero;
        noisy[i] = noise.bernoulli(spec.noise_p) ? static_cast<std::int8_t>(-clean[i]) : clean[i];
    }
    return {ObservedTensor(spec.dims, std::move(clean)), ObservedTensor(spec.dims, std::move(noisy)),
            std::move(truth)};
}

} // namespace tensorm
