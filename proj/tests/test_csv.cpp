#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "tensorm/csv.hpp"
#include "tensorm/error.hpp"

using namespace tensorm;

TEST_CASE("factor CSV round trip keeps labels", "[csv]") {
    std::mt19937_64 gen(61);
    const auto s = oracle::random_state({5, 4}, 3, 0.5, gen);
    const std::vector<int> labels{0, 4, 7};
    std::stringstream io;
    write_factor_csv(io, s.factors[0], labels);
    CHECK(io.str().rfind("l0,l4,l7\n", 0) == 0);
    const auto [f, read_labels] = read_factor_csv(io);
    CHECK(f == s.factors[0]);
    CHECK(read_labels == labels);

    std::istringstream bad("l0,l1\n1,2\n");
    CHECK_THROWS_AS(read_factor_csv(bad), ParseError);
}

TEST_CASE("mean CSV and probability CSV layouts", "[csv]") {
    RealMatrix m{2, 2, {0.25, 1.0, 0.0, 0.5}};
    const std::vector<int> labels{1, 2};
    std::ostringstream out;
    write_mean_csv(out, m, labels);
    CHECK(out.str() == "l1,l2\n0.25,1\n0,0.5\n");

    Reconstruction r{{2, 2}, {0.9, 0.1, 0.5, 0.7}, {}, EstimatorKind::PosteriorPredictive};
    r.round();
    std::ostringstream all;
    write_probability_csv(all, r);
    CHECK(all.str() == "i0,i1,probability,prediction\n0,0,0.9,1\n0,1,0.1,0\n1,0,0.5,0\n1,1,0.7,1\n");

    const ObservedTensor t(Extents{2, 2}, {1, 0, -1, 0});
    std::ostringstream missing;
    write_probability_csv(missing, r, &t);
    CHECK(missing.str() == "i0,i1,probability,prediction\n0,1,0.1,0\n1,1,0.7,1\n");
}
