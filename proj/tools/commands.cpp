#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "tensorm/csv.hpp"
#include "tensorm/encode.hpp"
#include "tensorm/error.hpp"
#include "tensorm/modelselect.hpp"
#include "tensorm/reconstruct.hpp"
#include "tensorm/simulate.hpp"
#include "tensorm/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tensorm::cli {

namespace {

// ---------------------------------------------------------------------------
// Config serialisation

json sampler_to_json(const SamplerConfig& c) {
    return {{"rank", c.rank},
            {"max_burn_in_sweeps", c.max_burn_in_sweeps},
            {"convergence_window", c.convergence_window},
            {"convergence_tol", c.convergence_tol},
            {"n_samples", c.n_samples},
            {"threads", c.threads},
            {"lambda_init", c.lambda_init},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"fit_lambda", c.fit_lambda},
            {"update_lambda_during_sampling", c.update_lambda_during_sampling},
            {"random_scan", c.random_scan},
            {"restarts", c.restarts}};
}

SamplerConfig sampler_from_json(const json& j) {
    SamplerConfig c;
    c.rank = j.at("rank").get<std::size_t>();
    c.max_burn_in_sweeps = j.at("max_burn_in_sweeps").get<std::size_t>();
    c.convergence_window = j.at("convergence_window").get<std::size_t>();
    c.convergence_tol = j.at("convergence_tol").get<double>();
    c.n_samples = j.at("n_samples").get<std::size_t>();
    c.threads = j.at("threads").get<std::size_t>();
    c.lambda_init = j.at("lambda_init").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.fit_lambda = j.at("fit_lambda").get<bool>();
    c.update_lambda_during_sampling = j.at("update_lambda_during_sampling").get<bool>();
    c.random_scan = j.at("random_scan").get<bool>();
    c.restarts = j.at("restarts").get<std::size_t>();
    return c;
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::string utc_now() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                    std::chrono::system_clock::now())));
}

// ---------------------------------------------------------------------------
// Staged output directory

/// Files are written into a hidden sibling of the destination and moved
/// into place by commit(); the destructor removes anything left behind.
class Stage {
  public:
    explicit Stage(const std::string& out_dir) : final_(fs::absolute(out_dir).lexically_normal()) {
        if (final_.filename().empty())
            final_ = final_.parent_path();
        if (fs::exists(final_) && !fs::is_directory(final_))
            throw IoError("output path exists and is not a directory: " + final_.string());
        std::random_device rd;
        staging_ = final_.parent_path() / fmt::format(".{}.staging-{:08x}", final_.filename().string(), rd());
        std::error_code ec;
        fs::create_directories(staging_, ec);
        if (ec)
            throw IoError("cannot create staging directory " + staging_.string() + ": " + ec.message());
    }
    Stage(const Stage&) = delete;
    Stage& operator=(const Stage&) = delete;
    ~Stage() {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }

    fs::path path(const std::string& name) {
        names_.push_back(name);
        return staging_ / name;
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const auto file = path(name);
        std::ofstream out(file, std::ios::binary);
        if (!out)
            throw IoError("cannot open " + file.string() + " for writing");
        body(out);
        out.flush();
        if (!out)
            throw IoError("write failed for " + file.string());
    }

    std::vector<std::string> outputs() const {
        std::vector<std::string> out;
        for (const auto& n : names_)
            out.push_back((final_ / n).string());
        return out;
    }

    void commit() {
        std::error_code ec;
        fs::create_directories(final_, ec);
        if (ec)
            throw IoError("cannot create output directory " + final_.string() + ": " + ec.message());
        for (const auto& n : names_) {
            fs::rename(staging_ / n, final_ / n, ec);
            if (ec)
                throw IoError("cannot move " + n + " into " + final_.string() + ": " + ec.message());
        }
    }

  private:
    fs::path final_;
    fs::path staging_;
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Commands

void write_fit_outputs(Stage& stage, const ChainResult& chain) {
    const auto& acc = chain.posterior;
    const auto map = factor_map_state(acc);
    for (std::size_t k = 0; k < acc.dims.size(); ++k) {
        stage.write(fmt::format("mode{}_mean.csv", k),
                    [&](std::ostream& o) { write_mean_csv(o, acc.factor_mean(k), acc.labels); });
        stage.write(fmt::format("mode{}_map.csv", k),
                    [&](std::ostream& o) { write_factor_csv(o, map.factors[k], acc.labels); });
    }
    stage.write("trace.jsonl", [&](std::ostream& o) { write_trace(o, chain.trace); });
    if (!chain.trace.converged)
        std::cerr << fmt::format("warning: burn-in did not converge within {} sweeps\n", chain.trace.burn_in_sweeps);
}

json run_fit(const FitOptions& opt, Stage& stage) {
    const auto t = load_tensor(opt.tensor);
    const auto chain = run_chain(t, opt.sampler);
    write_fit_outputs(stage, chain);
    return {{"tensor", opt.tensor}};
}

json run_complete(const CompleteOptions& opt, Stage& stage) {
    const auto t = load_tensor(opt.tensor);
    const auto chain = run_chain(t, opt.sampler);
    Reconstruction recon;
    switch (opt.estimator) {
    case EstimatorKind::PosteriorPredictive:
        recon = posterior_predictive(chain.posterior);
        break;
    case EstimatorKind::FactorMap:
        recon = factor_map_reconstruct(chain.posterior);
        break;
    case EstimatorKind::FactorMean:
        recon = factor_mean_reconstruct(chain.posterior);
        break;
    }
    // Observed entries keep their values; missing ones take the prediction.
    auto completed = t;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] == kMissing)
            completed.set_offset(i, recon.hard[i] ? kObservedOne : kObservedZero);
    if (t.count_missing() == 0)
        std::cerr << "warning: tensor has no missing entries; completion.csv lists nothing\n";

    stage.write("completed.btnsr", [&](std::ostream& o) { save_dense(o, completed); });
    stage.write("completion.csv", [&](std::ostream& o) { write_probability_csv(o, recon, &t); });
    stage.write("trace.jsonl", [&](std::ostream& o) { write_trace(o, chain.trace); });
    if (!chain.trace.converged)
        std::cerr << fmt::format("warning: burn-in did not converge within {} sweeps\n", chain.trace.burn_in_sweeps);
    return {{"tensor", opt.tensor}};
}

json run_simulate(const SimulateOptions& opt, Stage& stage) {
    SimSpec spec;
    spec.dims = opt.dims;
    spec.rank = opt.rank;
    spec.noise_p = opt.noise;
    spec.seed = opt.seed;
    if (opt.factor_density && opt.target_density)
        throw ArgumentError("give either --factor-density or --density, not both");
    if (opt.factor_density)
        spec.factor_density = *opt.factor_density;
    else
        spec.factor_density = density_for_target(opt.target_density.value_or(0.3), opt.rank, opt.dims.size());
    const auto data = generate(spec);

    stage.write("clean.btnsr", [&](std::ostream& o) { save_dense(o, data.clean); });
    stage.write("noisy.btnsr", [&](std::ostream& o) { save_dense(o, data.noisy); });
    for (std::size_t k = 0; k < data.truth.order(); ++k)
        stage.write(fmt::format("truth_mode{}.csv", k),
                    [&](std::ostream& o) { write_factor_csv(o, data.truth.factors[k], data.truth.labels); });
    return {{"factor_density", spec.factor_density},
            {"expected_density", expected_density(spec.factor_density, spec.rank, spec.dims.size())}};
}

json run_select_rank(const SelectRankOptions& opt, Stage& stage) {
    const auto t = load_tensor(opt.tensor);
    RankSelectionReport report;
    if (opt.method == "occam") {
        report = occam_select(t, opt.initial_rank, opt.sampler, opt.threshold);
        for (std::size_t k = 0; k < report.final_state.order(); ++k)
            stage.write(fmt::format("mode{}_map.csv", k), [&](std::ostream& o) {
                write_factor_csv(o, report.final_state.factors[k], report.final_state.labels);
            });
    } else if (opt.method == "cv") {
        report = cv_select(t, opt.ranks, opt.holdout, opt.sampler, opt.jobs);
    } else {
        throw ArgumentError("unknown selection method '" + opt.method + "' (expected occam or cv)");
    }
    stage.write("report.txt", [&](std::ostream& o) { write_report_table(o, report); });
    stage.write("report.jsonl", [&](std::ostream& o) { write_report_records(o, report); });
    std::cout << "chosen_rank: " << report.chosen_rank << '\n';
    return {{"tensor", opt.tensor}, {"chosen_rank", report.chosen_rank}};
}

json run_encode(const EncodeOptions& opt, Stage& stage) {
    std::ifstream in(opt.input, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + opt.input);
    ContinuousMatrix m;
    try {
        m = read_matrix_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(opt.input + ": " + e.what(), "");
    }
    if (opt.normalize)
        m = zscore_normalize(m);
    const auto t = relational_encode(m, opt.epsilon);
    stage.write("tensor.btnsr", [&](std::ostream& o) { save_dense(o, t); });
    stage.write("names.txt", [&](std::ostream& o) { write_name_map(o, m); });
    return {{"input", opt.input}, {"dims", t.dims()}};
}

json run_bench(const BenchOptions& opt, Stage& stage) {
    const auto rows = run_benchmark(opt.grid);
    stage.write("bench.csv", [&](std::ostream& o) { write_benchmark_csv(o, rows); });
    return {{"cells", rows.size()}};
}

std::vector<std::string> estimator_names(const std::vector<EstimatorKind>& kinds) {
    std::vector<std::string> out;
    for (auto k : kinds)
        out.emplace_back(to_string(k));
    return out;
}

} // namespace

json config_to_json(const Invocation& inv) {
    json j;
    if (inv.fit) {
        j = {{"tensor", inv.fit->tensor}, {"sampler", sampler_to_json(inv.fit->sampler)}};
    } else if (inv.complete) {
        j = {{"tensor", inv.complete->tensor},
             {"estimator", std::string(to_string(inv.complete->estimator))},
             {"sampler", sampler_to_json(inv.complete->sampler)}};
    } else if (inv.simulate) {
        const auto& s = *inv.simulate;
        j = {{"dims", s.dims}, {"rank", s.rank}, {"noise", s.noise}};
        j["factor_density"] = s.factor_density ? json(*s.factor_density) : json(nullptr);
        j["target_density"] = s.target_density ? json(*s.target_density) : json(nullptr);
    } else if (inv.select_rank) {
        const auto& s = *inv.select_rank;
        j = {{"tensor", s.tensor},   {"method", s.method},       {"initial_rank", s.initial_rank},
             {"ranks", s.ranks},     {"holdout", s.holdout},     {"threshold", s.threshold},
             {"jobs", s.jobs},       {"sampler", sampler_to_json(s.sampler)}};
    } else if (inv.encode) {
        j = {{"input", inv.encode->input}, {"normalize", inv.encode->normalize}, {"epsilon", inv.encode->epsilon}};
    } else if (inv.bench) {
        const auto& g = inv.bench->grid;
        j = {{"dims", g.dims},
             {"noise_levels", g.noise_levels},
             {"target_densities", g.target_densities},
             {"ranks", g.ranks},
             {"repetitions", g.repetitions},
             {"estimators", estimator_names(g.estimators)},
             {"jobs", g.jobs},
             {"sampler", sampler_to_json(g.sampler)}};
        j["rank_fit"] = g.rank_fit ? json(*g.rank_fit) : json(nullptr);
    }
    return j;
}

Invocation config_from_json(const std::string& command, const json& j) {
    Invocation inv;
    inv.command = command;
    if (command == "fit") {
        inv.fit = FitOptions{j.at("tensor").get<std::string>(), sampler_from_json(j.at("sampler"))};
    } else if (command == "complete") {
        inv.complete = CompleteOptions{j.at("tensor").get<std::string>(), sampler_from_json(j.at("sampler")),
                                       estimator_from_string(j.at("estimator").get<std::string>())};
    } else if (command == "simulate") {
        SimulateOptions s;
        s.dims = j.at("dims").get<std::vector<std::size_t>>();
        s.rank = j.at("rank").get<std::size_t>();
        s.noise = j.at("noise").get<double>();
        if (!j.at("factor_density").is_null())
            s.factor_density = j.at("factor_density").get<double>();
        if (!j.at("target_density").is_null())
            s.target_density = j.at("target_density").get<double>();
        inv.simulate = s;
    } else if (command == "select-rank") {
        SelectRankOptions s;
        s.tensor = j.at("tensor").get<std::string>();
        s.method = j.at("method").get<std::string>();
        s.initial_rank = j.at("initial_rank").get<std::size_t>();
        s.ranks = j.at("ranks").get<std::vector<std::size_t>>();
        s.holdout = j.at("holdout").get<double>();
        s.threshold = j.at("threshold").get<std::size_t>();
        s.jobs = j.at("jobs").get<std::size_t>();
        s.sampler = sampler_from_json(j.at("sampler"));
        inv.select_rank = s;
    } else if (command == "encode") {
        inv.encode = EncodeOptions{j.at("input").get<std::string>(), j.at("normalize").get<bool>(),
                                   j.at("epsilon").get<double>()};
    } else if (command == "bench") {
        BenchOptions b;
        auto& g = b.grid;
        g.dims = j.at("dims").get<std::vector<std::size_t>>();
        g.noise_levels = j.at("noise_levels").get<std::vector<double>>();
        g.target_densities = j.at("target_densities").get<std::vector<double>>();
        g.ranks = j.at("ranks").get<std::vector<std::size_t>>();
        g.repetitions = j.at("repetitions").get<std::size_t>();
        g.estimators.clear();
        for (const auto& name : j.at("estimators").get<std::vector<std::string>>())
            g.estimators.push_back(estimator_from_string(name));
        g.jobs = j.at("jobs").get<std::size_t>();
        g.sampler = sampler_from_json(j.at("sampler"));
        if (!j.at("rank_fit").is_null())
            g.rank_fit = j.at("rank_fit").get<std::size_t>();
        inv.bench = b;
    } else {
        throw ArgumentError("manifest names an unknown command '" + command + "'");
    }
    return inv;
}

int execute(const Invocation& original, const std::string& out_dir) {
    Invocation inv = original;
    // Input paths are recorded absolutely so a manifest replays from anywhere.
    if (inv.fit) {
        inv.fit->tensor = absolute(inv.fit->tensor);
        inv.fit->sampler.seed = inv.seed;
    }
    if (inv.complete) {
        inv.complete->tensor = absolute(inv.complete->tensor);
        inv.complete->sampler.seed = inv.seed;
    }
    if (inv.simulate)
        inv.simulate->seed = inv.seed;
    if (inv.select_rank) {
        inv.select_rank->tensor = absolute(inv.select_rank->tensor);
        inv.select_rank->sampler.seed = inv.seed;
    }
    if (inv.encode)
        inv.encode->input = absolute(inv.encode->input);
    if (inv.bench)
        inv.bench->grid.seed = inv.seed;

    const std::string started = utc_now();
    Stage stage(out_dir);
    json summary;
    if (inv.fit)
        summary = run_fit(*inv.fit, stage);
    else if (inv.complete)
        summary = run_complete(*inv.complete, stage);
    else if (inv.simulate)
        summary = run_simulate(*inv.simulate, stage);
    else if (inv.select_rank)
        summary = run_select_rank(*inv.select_rank, stage);
    else if (inv.encode)
        summary = run_encode(*inv.encode, stage);
    else if (inv.bench)
        summary = run_bench(*inv.bench, stage);
    else
        throw ArgumentError("no command given");

    json manifest = {{"command", inv.command},
                     {"version", TENSORM_VERSION},
                     {"seed", inv.seed},
                     {"config", config_to_json(inv)},
                     {"summary", summary}};
    manifest["outputs"] = stage.outputs();
    manifest["output_dir"] = absolute(out_dir);
    manifest["started"] = started;
    manifest["finished"] = utc_now();
    stage.write("manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    stage.commit();
    return kOk;
}

int report_current_exception() {
    try {
        throw;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kArgumentError;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed manifest: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace tensorm::cli
