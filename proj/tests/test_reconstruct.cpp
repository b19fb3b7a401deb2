#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/oracles.hpp"
#include "tensorm/error.hpp"
#include "tensorm/reconstruct.hpp"
#include "tensorm/simulate.hpp"

using namespace tensorm;
using Catch::Matchers::WithinAbs;

namespace {

/// Accumulator whose factor means are `mean` everywhere.
PosteriorAccumulator uniform_means(const Extents& dims, std::size_t rank, double mean, std::size_t samples = 10) {
    auto acc = PosteriorAccumulator::for_model(ModelState::zeros(dims, rank));
    for (auto& sums : acc.factor_sums)
        for (auto& v : sums.values)
            v = mean * static_cast<double>(samples);
    acc.samples_seen = samples;
    return acc;
}

/// p(x = 1 | state) recomputed from the likelihood of a positive entry.
double predictive_one(const ModelState& s, const Index& idx) { return std::exp(oracle::entry_loglik(s, idx, 1)); }

} // namespace

TEST_CASE("rounding sends exact ties to zero", "[reconstruct]") {
    CHECK_FALSE(round_to_binary(0.5));
    CHECK(round_to_binary(0.5000001));
    CHECK_FALSE(round_to_binary(0.0));
    Reconstruction r{{1, 3}, {0.2, 0.5, 0.8}, {}, EstimatorKind::PosteriorPredictive};
    r.round();
    CHECK(r.hard == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(r.to_tensor().entries()[2] == kObservedOne);
    CHECK(estimator_from_string("factor_mean") == EstimatorKind::FactorMean);
    CHECK_THROWS_AS(estimator_from_string("joint_map"), ArgumentError);
}

TEST_CASE("posterior predictive averages per-sample probabilities", "[reconstruct]") {
    std::mt19937_64 gen(31);
    const Extents dims{2, 2, 2};
    auto acc = PosteriorAccumulator::for_model(ModelState::zeros(dims, 2));
    CHECK_THROWS_AS(posterior_predictive(acc), StateError);

    std::vector<ModelState> samples;
    for (int i = 0; i < 7; ++i) {
        auto s = oracle::random_state(dims, 2, 0.5, gen);
        s.noise.lambda = 0.3 * (i + 1);
        samples.push_back(s);
        acc.add(s);
        if (i == 0) {
            const auto single = posterior_predictive(acc);
            for (const auto& idx : oracle::all_indices(dims))
                REQUIRE_THAT(single.probabilities[flat_offset(idx, dims)], WithinAbs(predictive_one(s, idx), 1e-12));
        }
    }
    const auto recon = posterior_predictive(acc);
    for (const auto& idx : oracle::all_indices(dims)) {
        double mean = 0.0;
        for (const auto& s : samples)
            mean += predictive_one(s, idx) / static_cast<double>(samples.size());
        REQUIRE_THAT(recon.probabilities[flat_offset(idx, dims)], WithinAbs(mean, 1e-12));
    }
}

TEST_CASE("noise-free fitted model predicts the Boolean product", "[reconstruct]") {
    const auto data = generate(SimSpec{{8, 7, 6}, 2, 0.5, 0.0, 3});
    auto truth = data.truth;
    truth.noise.lambda = logit(337.0 / 338.0);
    auto acc = PosteriorAccumulator::for_model(truth);
    acc.add(truth);
    const auto recon = posterior_predictive(acc);
    const auto product = boolean_product(truth);
    for (std::size_t i = 0; i < product.size(); ++i) {
        REQUIRE(std::abs(recon.probabilities[i] - product[i]) < 0.01);
        REQUIRE(recon.hard[i] == product[i]);
    }
}

TEST_CASE("factor MAP examples", "[reconstruct]") {
    const Extents dims{2, 3, 2};
    const auto high = factor_map_reconstruct(uniform_means(dims, 2, 0.9));
    for (double p : high.probabilities)
        CHECK(p == 1.0);
    const auto tie = factor_map_reconstruct(uniform_means(dims, 2, 0.5));
    for (double p : tie.probabilities)
        CHECK(p == 0.0);
    CHECK(factor_map_state(uniform_means(dims, 2, 0.5)).factors[0].count_ones() == 0);
}

TEST_CASE("factor MAP equals the product of thresholded means", "[reconstruct][property]") {
    std::mt19937_64 gen(32);
    std::uniform_int_distribution<int> count(0, 10);
    for (int trial = 0; trial < 50; ++trial) {
        const Extents dims{3, 2, 3};
        auto acc = PosteriorAccumulator::for_model(ModelState::zeros(dims, 3));
        acc.samples_seen = 10;
        auto thresholded = ModelState::zeros(dims, 3);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t n = 0; n < dims[k]; ++n)
                for (std::size_t l = 0; l < 3; ++l) {
                    const int c = count(gen);
                    acc.factor_sums[k](n, l) = c;
                    thresholded.factors[k].set(n, l, c * 2 > 10);
                }
        const auto recon = factor_map_reconstruct(acc);
        for (const auto& idx : oracle::all_indices(dims))
            REQUIRE(recon.hard[flat_offset(idx, dims)] == oracle::product(thresholded, idx));
    }
}

TEST_CASE("factor mean examples", "[reconstruct]") {
    const Extents dims{2, 2, 2};
    for (double p : factor_mean_reconstruct(uniform_means(dims, 3, 1.0)).probabilities)
        CHECK(p == 1.0);
    for (double p : factor_mean_reconstruct(uniform_means(dims, 3, 0.0)).probabilities)
        CHECK(p == 0.0);
    const auto eighth = factor_mean_reconstruct(uniform_means(dims, 1, 0.5));
    for (double p : eighth.probabilities)
        CHECK_THAT(p, WithinAbs(0.125, 1e-15));
}

TEST_CASE("factor mean matches the closed form on random means", "[reconstruct][property]") {
    std::mt19937_64 gen(33);
    std::uniform_int_distribution<int> count(0, 8);
    for (int trial = 0; trial < 30; ++trial) {
        const Extents dims{2, 3, 4};
        auto acc = PosteriorAccumulator::for_model(ModelState::zeros(dims, 2));
        acc.samples_seen = 8;
        for (auto& m : acc.factor_sums)
            for (auto& v : m.values)
                v = count(gen);
        const auto recon = factor_mean_reconstruct(acc);
        for (const auto& idx : oracle::all_indices(dims)) {
            double none = 1.0;
            for (std::size_t l = 0; l < 2; ++l) {
                double all = 1.0;
                for (std::size_t k = 0; k < 3; ++k)
                    all *= acc.factor_sums[k](idx[k], l) / 8.0;
                none *= 1.0 - all;
            }
            REQUIRE_THAT(recon.probabilities[flat_offset(idx, dims)], WithinAbs(1.0 - none, 1e-12));
        }
    }
}

TEST_CASE("accuracy examples", "[reconstruct]") {
    const Extents dims{2, 2, 2};
    const ObservedTensor ref(dims, {1, -1, 1, -1, -1, -1, 1, 1});
    Reconstruction same{dims, {1, 0, 1, 0, 0, 0, 1, 1}, {}, EstimatorKind::FactorMap};
    same.round();
    CHECK(accuracy(same, ref) == 1.0);

    Reconstruction flipped = same;
    for (auto& p : flipped.probabilities)
        p = 1.0 - p;
    flipped.round();
    CHECK(accuracy(flipped, ref) == 0.0);

    Reconstruction half = same;
    for (std::size_t i : {0u, 3u, 5u, 6u})
        half.probabilities[i] = 1.0 - half.probabilities[i];
    half.round();
    CHECK(accuracy(half, ref) == 0.5);

    CHECK_THROWS_AS(accuracy(same, ObservedTensor(dims)), ArgumentError);
    CHECK_THROWS_AS(accuracy(same, std::span<const HeldoutEntry>{}), ArgumentError);
    const std::vector<HeldoutEntry> held{{0, true}, {1, true}};
    CHECK(accuracy(same, held) == 0.5);
}

TEST_CASE("estimators coincide in the deterministic limit", "[reconstruct][property]") {
    std::mt19937_64 gen(34);
    for (int trial = 0; trial < 20; ++trial) {
        const Extents dims{4, 3, 5};
        auto s = oracle::random_state(dims, 3, 0.5, gen);
        s.noise.lambda = 30.0 + trial;
        auto acc = PosteriorAccumulator::for_model(s);
        acc.add(s);
        const auto pp = posterior_predictive(acc);
        const auto map = factor_map_reconstruct(acc);
        const auto mean = factor_mean_reconstruct(acc);
        REQUIRE(pp.hard == map.hard);
        REQUIRE(map.hard == mean.hard);
        REQUIRE(map.probabilities == mean.probabilities);
    }
}
