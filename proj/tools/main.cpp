#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"
#include "tensorm/error.hpp"
#include "tensorm/reconstruct.hpp"

using namespace tensorm;
using namespace tensorm::cli;

namespace {

std::size_t default_threads() {
    if (const char* env = std::getenv("TENSORM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw ArgumentError(std::string("TENSORM_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Sampler flags shared by fit, complete, select-rank and bench.
void add_sampler_flags(CLI::App* cmd, SamplerConfig& c, bool with_rank = true) {
    if (with_rank)
        cmd->add_option("--rank,-L", c.rank, "Latent dimensionality")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", c.n_samples, "Posterior samples after burn-in")->check(CLI::PositiveNumber);
    cmd->add_option("--max-burnin", c.max_burn_in_sweeps, "Burn-in sweep cap");
    cmd->add_option("--window", c.convergence_window, "Convergence window (sweeps)");
    cmd->add_option("--tol", c.convergence_tol, "Convergence tolerance on sigma(lambda)");
    cmd->add_option("--alpha", c.alpha, "Beta prior pseudo-count of correct predictions");
    cmd->add_option("--beta", c.beta, "Beta prior pseudo-count of incorrect predictions");
    cmd->add_option("--lambda-init", c.lambda_init, "Initial lambda");
    cmd->add_option("--restarts", c.restarts, "Independent burn-in chains")->check(CLI::PositiveNumber);
    cmd->add_flag("!--fixed-lambda", c.fit_lambda, "Keep lambda at --lambda-init");
    cmd->add_flag("!--freeze-lambda-when-sampling", c.update_lambda_during_sampling,
                  "Stop refitting lambda after burn-in");
    cmd->add_flag("--random-scan", c.random_scan, "Random mode order in every sweep");
    cmd->add_option("--threads", c.threads, "Worker threads (default: $TENSORM_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
}

template <typename T>
CLI::Option* add_list(CLI::App* cmd, const std::string& name, std::vector<T>& v, const std::string& help) {
    return cmd->add_option(name, v, help)->delimiter(',')->expected(1, -1);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boolean tensor factorisation by Gibbs sampling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TENSORM_VERSION);

    Invocation inv;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::size_t threads = 0;
    try {
        threads = default_threads();
    } catch (...) {
        return report_current_exception();
    }

    FitOptions fit;
    CompleteOptions complete;
    SimulateOptions simulate;
    SelectRankOptions select;
    EncodeOptions encode;
    BenchOptions bench;
    std::string estimator = "posterior_predictive";
    std::vector<std::string> bench_estimators{"posterior_predictive"};
    std::size_t bench_rank_fit = 0;
    std::string manifest_path;
    std::optional<std::size_t> replay_threads;

    for (auto* c : {&fit.sampler, &complete.sampler, &select.sampler, &bench.grid.sampler})
        c->threads = threads;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--out,-o", out_dir, "Output directory")->required();
        cmd->add_option("--seed", seed, "64-bit seed (drawn and recorded when absent)");
    };

    auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior and write factor summaries");
    fit_cmd->add_option("tensor", fit.tensor, "Tensor file (dense or sparse)")->required();
    add_sampler_flags(fit_cmd, fit.sampler);
    common(fit_cmd);

    auto* complete_cmd = app.add_subcommand("complete", "Predict the missing entries of a tensor");
    complete_cmd->add_option("tensor", complete.tensor, "Tensor file with missing entries")->required();
    complete_cmd->add_option("--estimator", estimator, "posterior_predictive, factor_map or factor_mean");
    add_sampler_flags(complete_cmd, complete.sampler);
    common(complete_cmd);

    auto* sim_cmd = app.add_subcommand("simulate", "Generate a random Boolean product tensor");
    add_list(sim_cmd, "--dims", simulate.dims, "Extents, comma separated");
    sim_cmd->add_option("--rank,-L", simulate.rank, "True latent dimensionality")->check(CLI::PositiveNumber);
    auto* fd = sim_cmd->add_option("--factor-density", simulate.factor_density, "Bernoulli rate of factor entries");
    sim_cmd->add_option("--density", simulate.target_density, "Expected tensor density (default 0.3)")->excludes(fd);
    sim_cmd->add_option("--noise", simulate.noise, "Probability of flipping each entry");
    common(sim_cmd);

    auto* sel_cmd = app.add_subcommand("select-rank", "Choose the latent dimensionality");
    sel_cmd->add_option("tensor", select.tensor, "Tensor file")->required();
    sel_cmd->add_option("--method", select.method, "occam or cv")->check(CLI::IsMember({"occam", "cv"}));
    sel_cmd->add_option("--initial-rank", select.initial_rank, "Occam starting rank (default 2 x --rank)");
    add_list(sel_cmd, "--ranks", select.ranks, "CV candidate ranks (default --rank-2 .. --rank+2)");
    sel_cmd->add_option("--holdout", select.holdout, "CV held-out fraction");
    sel_cmd->add_option("--threshold", select.threshold, "Occam: entries a dimension must explain to be kept");
    sel_cmd->add_option("--jobs", select.jobs, "CV candidates fitted concurrently")->check(CLI::PositiveNumber);
    add_sampler_flags(sel_cmd, select.sampler);
    common(sel_cmd);

    auto* enc_cmd = app.add_subcommand("encode", "Relational encoding of an objects x attributes CSV");
    enc_cmd->add_option("csv", encode.input, "CSV file")->required();
    enc_cmd->add_flag("--normalize", encode.normalize, "z-score every attribute first");
    enc_cmd->add_option("--epsilon", encode.epsilon, "Differences within epsilon are treated as ties");
    common(enc_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "Noise x density x rank benchmark on simulated tensors");
    auto& grid = bench.grid;
    add_list(bench_cmd, "--dims", grid.dims, "Extents, comma separated");
    add_list(bench_cmd, "--noise", grid.noise_levels, "Noise levels");
    add_list(bench_cmd, "--density", grid.target_densities, "Expected tensor densities");
    add_list(bench_cmd, "--ranks", grid.ranks, "True ranks");
    bench_cmd->add_option("--reps", grid.repetitions, "Repetitions per cell")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--rank-fit", bench_rank_fit, "Fit rank (default: the true rank)");
    add_list(bench_cmd, "--estimators", bench_estimators, "Estimators to score");
    bench_cmd->add_option("--jobs", grid.jobs, "Cells evaluated concurrently")->check(CLI::PositiveNumber);
    add_sampler_flags(bench_cmd, grid.sampler, false);
    common(bench_cmd);

    auto* replay_cmd = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
    replay_cmd->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
    replay_cmd->add_option("--out,-o", out_dir, "Output directory")->required();
    replay_cmd->add_option("--threads", replay_threads, "Override the recorded thread count")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kArgumentError;
    }

    try {
        if (replay_cmd->parsed()) {
            std::ifstream in(manifest_path);
            if (!in)
                throw IoError("cannot open manifest " + manifest_path);
            const auto manifest = nlohmann::json::parse(in);
            inv = config_from_json(manifest.at("command").get<std::string>(), manifest.at("config"));
            inv.seed = manifest.at("seed").get<std::uint64_t>();
            if (replay_threads) {
                for (auto* c : {inv.fit ? &inv.fit->sampler : nullptr, inv.complete ? &inv.complete->sampler : nullptr,
                                inv.select_rank ? &inv.select_rank->sampler : nullptr,
                                inv.bench ? &inv.bench->grid.sampler : nullptr})
                    if (c)
                        c->threads = *replay_threads;
                if (inv.bench)
                    inv.bench->grid.jobs = *replay_threads;
                if (inv.select_rank)
                    inv.select_rank->jobs = *replay_threads;
            }
            return execute(inv, out_dir);
        }

        inv.seed = seed ? *seed : std::random_device{}() * 0x100000000ull + std::random_device{}();
        if (fit_cmd->parsed()) {
            inv.command = "fit";
            inv.fit = fit;
        } else if (complete_cmd->parsed()) {
            inv.command = "complete";
            complete.estimator = estimator_from_string(estimator);
            inv.complete = complete;
        } else if (sim_cmd->parsed()) {
            inv.command = "simulate";
            if (!simulate.factor_density && !simulate.target_density)
                simulate.target_density = 0.3;
            inv.simulate = simulate;
        } else if (sel_cmd->parsed()) {
            inv.command = "select-rank";
            const std::size_t rank = select.sampler.rank;
            const bool rank_given = sel_cmd->count("--rank") > 0;
            if (select.method == "occam" && select.initial_rank == 0) {
                if (!rank_given)
                    throw ArgumentError("occam needs --initial-rank or --rank");
                select.initial_rank = 2 * rank;
            }
            if (select.method == "cv" && select.ranks.empty()) {
                if (!rank_given)
                    throw ArgumentError("cv needs --ranks or --rank");
                for (std::size_t r = rank > 2 ? rank - 2 : 1; r <= rank + 2; ++r)
                    select.ranks.push_back(r);
            }
            inv.select_rank = select;
        } else if (enc_cmd->parsed()) {
            inv.command = "encode";
            inv.encode = encode;
        } else if (bench_cmd->parsed()) {
            inv.command = "bench";
            grid.estimators.clear();
            for (const auto& name : bench_estimators)
                grid.estimators.push_back(estimator_from_string(name));
            if (bench_rank_fit > 0)
                grid.rank_fit = bench_rank_fit;
            inv.bench = bench;
        }
        return execute(inv, out_dir);
    } catch (...) {
        return report_current_exception();
    }
}
