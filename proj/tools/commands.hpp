#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tensorm/benchmark.hpp"
#include "tensorm/sampler.hpp"

namespace tensorm::cli {

enum ExitCode : int { kOk = 0, kArgumentError = 2, kIoError = 3, kRuntimeError = 4 };

struct FitOptions {
    std::string tensor;
    SamplerConfig sampler;
};

struct CompleteOptions {
    std::string tensor;
    SamplerConfig sampler;
    EstimatorKind estimator = EstimatorKind::PosteriorPredictive;
};

struct SimulateOptions {
    std::vector<std::size_t> dims{20, 20, 20};
    std::size_t rank = 5;
    /// Exactly one of the two is used; a target tensor density is
    /// converted to a factor density.
    std::optional<double> factor_density;
    std::optional<double> target_density;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

struct SelectRankOptions {
    std::string tensor;
    std::string method = "occam";
    std::size_t initial_rank = 0;
    std::vector<std::size_t> ranks;
    double holdout = 0.2;
    std::size_t threshold = 0;
    std::size_t jobs = 1;
    SamplerConfig sampler;
};

struct EncodeOptions {
    std::string input;
    bool normalize = false;
    double epsilon = 0.0;
};

struct BenchOptions {
    BenchmarkGrid grid;
};

/// Everything needed to rerun a command; serialised as the manifest's
/// "config" object.
struct Invocation {
    std::string command;
    std::uint64_t seed = 0;
    std::optional<FitOptions> fit;
    std::optional<CompleteOptions> complete;
    std::optional<SimulateOptions> simulate;
    std::optional<SelectRankOptions> select_rank;
    std::optional<EncodeOptions> encode;
    std::optional<BenchOptions> bench;
};

nlohmann::json config_to_json(const Invocation& inv);
Invocation config_from_json(const std::string& command, const nlohmann::json& config);

/// Runs the command, staging outputs next to `out_dir` and moving them in
/// only when everything succeeded. Returns the exit code.
int execute(const Invocation& inv, const std::string& out_dir);

/// Exit code for the exception currently being handled, after printing it.
int report_current_exception();

} // namespace tensorm::cli
