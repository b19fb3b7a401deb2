#include <catch2/catch_amalgamated.hpp>

#include "tensorm/error.hpp"
#include "tensorm/simulate.hpp"

using namespace tensorm;
using Catch::Matchers::WithinAbs;

TEST_CASE("expected density examples", "[simulate]") {
    CHECK_THAT(expected_density(0.5, 1, 3), WithinAbs(0.125, 1e-15));
    CHECK(expected_density(0.37, 0, 3) == 0.0);
    CHECK_THAT(expected_density(0.5, 10, 3), WithinAbs(1.0 - std::pow(0.875, 10), 1e-15));
    CHECK_THAT(expected_density(0.5, 10, 3), WithinAbs(0.7369, 5e-5));
}

TEST_CASE("density_for_target inverts expected_density", "[simulate][property]") {
    CHECK_THAT(density_for_target(0.125, 1, 3), WithinAbs(0.5, 1e-15));
    for (std::size_t rank : {2u, 5u, 10u})
        for (int i = 1; i <= 9; ++i) {
            const double target = i / 10.0;
            REQUIRE_THAT(expected_density(density_for_target(target, rank, 3), rank, 3), WithinAbs(target, 1e-12));
        }
    CHECK_THAT(expected_density(density_for_target(0.25, 10, 3), 10, 3), WithinAbs(0.25, 1e-12));
    CHECK_THROWS_AS(density_for_target(1.0, 3, 3), ArgumentError);
    CHECK_THROWS_AS(density_for_target(0.3, 0, 3), ArgumentError);
}

TEST_CASE("generate validates and is a pure function of its SimSpec", "[simulate]") {
    CHECK_THROWS_AS(generate(SimSpec{{5, 5, 5}, 2, 0.5, 0.5, 1}), ArgumentError);
    CHECK_THROWS_AS(generate(SimSpec{{5, 5, 5}, 2, 1.0, 0.1, 1}), ArgumentError);
    CHECK_THROWS_AS(generate(SimSpec{{5}, 2, 0.5, 0.1, 1}), ArgumentError);

    const auto clean = generate(SimSpec{{6, 5, 4}, 3, 0.4, 0.0, 9});
    CHECK(clean.noisy == clean.clean);
    CHECK(clean.clean.count_missing() == 0);

    const auto a = generate(SimSpec{{6, 5, 4}, 3, 0.4, 0.2, 9});
    const auto b = generate(SimSpec{{6, 5, 4}, 3, 0.4, 0.2, 9});
    CHECK(a.noisy == b.noisy);
    CHECK(a.truth == b.truth);
    CHECK(a.clean == clean.clean);
    const auto product = boolean_product(a.truth);
    for (std::size_t i = 0; i < product.size(); ++i)
        REQUIRE((a.clean[i] == kObservedOne) == (product[i] == 1));
}

TEST_CASE("clean density matches its expectation", "[simulate][property]") {
    const std::size_t rank = 5;
    const double d = density_for_target(0.3, rank, 3);
    const double expected = expected_density(d, rank, 3);
    const int runs = 60;
    std::vector<double> densities;
    for (int seed = 0; seed < runs; ++seed) {
        const auto data = generate(SimSpec{{20, 20, 20}, rank, d, 0.0, static_cast<std::uint64_t>(seed)});
        std::size_t ones = 0;
        for (auto x : data.clean.entries())
            ones += x == kObservedOne;
        densities.push_back(static_cast<double>(ones) / 8000.0);
    }
    double mean = 0.0;
    for (double v : densities)
        mean += v / runs;
    double var = 0.0;
    for (double v : densities)
        var += (v - mean) * (v - mean) / (runs - 1);
    CHECK(std::abs(mean - expected) < 3.0 * std::sqrt(var / runs));
}

TEST_CASE("noise flips entries at the requested rate", "[simulate]") {
    const auto data = generate(SimSpec{{30, 30, 30}, 4, 0.4, 0.2, 5});
    std::size_t flips = 0;
    for (std::size_t i = 0; i < data.clean.size(); ++i)
        flips += data.clean[i] != data.noisy[i];
    const double n = 27000.0;
    CHECK(std::abs(flips / n - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / n));
}
