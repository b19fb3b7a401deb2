#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "support/oracles.hpp"
#include "tensorm/error.hpp"
#include "tensorm/modelselect.hpp"
#include "tensorm/simulate.hpp"

using namespace tensorm;

namespace {

ObservedTensor observe(const ModelState& s, const Extents& dims) {
    const auto product = boolean_product(s);
    ObservedTensor t(dims);
    for (std::size_t i = 0; i < product.size(); ++i)
        t.set_offset(i, product[i] ? kObservedOne : kObservedZero);
    return t;
}

SamplerConfig quick(std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.seed = seed;
    cfg.n_samples = 20;
    return cfg;
}

} // namespace

TEST_CASE("a dimension with an all-zero column is not contributing", "[modelselect]") {
    const auto data = generate(SimSpec{{8, 8, 8}, 3, 0.5, 0.0, 4});
    auto s = data.truth;
    s.factors[1].clear_column(1);
    const auto t = observe(s, {8, 8, 8});
    CHECK(non_contributing_dimensions(s, t) == std::vector<std::size_t>{1});
}

TEST_CASE("exactly one of a duplicated pair is pruned", "[modelselect]") {
    const Extents dims{6, 6, 6};
    std::mt19937_64 gen(41);
    auto base = oracle::random_state(dims, 2, 0.6, gen);
    auto s = ModelState::zeros(dims, 3);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t n = 0; n < 6; ++n) {
            s.factors[k].set(n, 0, base.factors[k].get(n, 0));
            s.factors[k].set(n, 1, base.factors[k].get(n, 1));
            s.factors[k].set(n, 2, base.factors[k].get(n, 0));
        }
    const auto t = observe(s, dims);
    REQUIRE(non_contributing_dimensions(base, t).empty());
    const auto removed = non_contributing_dimensions(s, t);
    REQUIRE(removed.size() == 1);
    CHECK((removed[0] == 0 || removed[0] == 2));
}

TEST_CASE("contribution threshold", "[modelselect]") {
    const Extents dims{4, 4};
    auto s = ModelState::zeros(dims, 1);
    s.factors[0].set(0, 0, true);
    s.factors[1].set(0, 0, true);
    s.factors[1].set(1, 0, true);
    const auto t = observe(s, dims); // dimension 0 explains two ones
    CHECK(non_contributing_dimensions(s, t, 0).empty());
    CHECK(non_contributing_dimensions(s, t, 1).empty());
    CHECK(non_contributing_dimensions(s, t, 2) == std::vector<std::size_t>{0});
}

TEST_CASE("Occam selection recovers the rank of noise-free data", "[modelselect][slow]") {
    const auto data = generate(SimSpec{{20, 20, 20}, 3, density_for_target(0.3, 3, 3), 0.0, 11});
    REQUIRE(non_contributing_dimensions(data.truth, data.clean).empty());
    const auto report = occam_select(data.clean, 10, quick(5));
    CHECK(report.chosen_rank == 3);
    CHECK(report.final_state.rank() == 3);
    CHECK(report.history.front().rank_before == 10);
    CHECK(report.history.back().removed_labels.empty());
    // Surviving labels are a subset of the original ones, in order.
    CHECK(std::is_sorted(report.final_state.labels.begin(), report.final_state.labels.end()));
    CHECK_THROWS_AS(occam_select(data.clean, 0, quick(5)), ArgumentError);
}

TEST_CASE("cross-validation examples", "[modelselect][slow]") {
    // Two disjoint rank-1 blocks.
    const Extents dims{12, 12, 12};
    auto truth = ModelState::zeros(dims, 2);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t n = 0; n < 12; ++n)
            truth.factors[k].set(n, n < 6 ? 0 : 1, true);
    const auto t = observe(truth, dims);

    const std::vector<std::size_t> single{2};
    CHECK(cv_select(t, single, 0.2, quick(1)).chosen_rank == 2);

    const std::vector<std::size_t> ranks{1, 2, 4};
    const auto report = cv_select(t, ranks, 0.2, quick(1));
    CHECK(report.chosen_rank == 2);
    REQUIRE(report.candidates.size() == 3);
    CHECK(report.candidates[0].heldout_accuracy < report.candidates[1].heldout_accuracy);

    const auto again = cv_select(t, ranks, 0.2, quick(1), 3);
    std::ostringstream a, b;
    write_report_records(a, report);
    write_report_records(b, again);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("{\"chosen_rank\":2}") != std::string::npos);

    CHECK_THROWS_AS(cv_select(ObservedTensor(Extents{3, 3}, {1, 0, 0, 0, 0, 0, 0, 0, 0}), ranks, 0.2, quick(1)),
                    ArgumentError);
    CHECK_THROWS_AS(cv_select(t, std::span<const std::size_t>{}, 0.2, quick(1)), ArgumentError);
}

TEST_CASE("report table lists every round", "[modelselect]") {
    RankSelectionReport r;
    r.method = SelectionMethod::Occam;
    r.chosen_rank = 2;
    r.history.push_back({4, 2, {1, 3}, -12.5, 40, 7, 42, true});
    r.history.push_back({2, 2, {}, -12.5, 40, 8, 40, true});
    std::ostringstream out;
    write_report_table(out, r);
    CHECK(out.str().find("[1,3]") != std::string::npos);
    CHECK(out.str().find("chosen_rank: 2") != std::string::npos);
}
