#include <cmath>
#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tensorm/encode.hpp"
#include "tensorm/error.hpp"
#include "tensorm/modelselect.hpp"
#include "tensorm/reconstruct.hpp"
#include "tensorm/sampler.hpp"
#include "tensorm/simulate.hpp"
#include "tensorm/tensor_io.hpp"

namespace py = pybind11;
using namespace tensorm;

namespace {

using Int8Array = py::array_t<std::int8_t, py::array::c_style | py::array::forcecast>;

ObservedTensor from_numpy(const Int8Array& a) {
    Extents dims(a.shape(), a.shape() + a.ndim());
    const auto* p = a.data();
    return ObservedTensor(dims, std::vector<std::int8_t>(p, p + a.size()));
}

std::vector<py::ssize_t> shape_of(std::span<const std::size_t> dims) { return {dims.begin(), dims.end()}; }

Int8Array to_numpy(const ObservedTensor& t) {
    Int8Array out(shape_of(t.dims()));
    std::memcpy(out.mutable_data(), t.entries().data(), t.size());
    return out;
}

py::array_t<double> real_array(const Extents& dims, const std::vector<double>& values) {
    py::array_t<double> out(shape_of(dims));
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

py::array_t<std::uint8_t> factor_array(const FactorMatrix& f) {
    py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(f.rows()), static_cast<py::ssize_t>(f.rank())});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t n = 0; n < f.rows(); ++n)
        for (std::size_t l = 0; l < f.rank(); ++l)
            v(n, l) = f.get(n, l);
    return out;
}

py::list factor_list(const ModelState& s) {
    py::list out;
    for (const auto& f : s.factors)
        out.append(factor_array(f));
    return out;
}

py::array_t<double> mean_array(const RealMatrix& m) {
    return real_array({m.rows, m.cols}, m.values);
}

py::dict reconstruction_dict(const Reconstruction& r) {
    py::dict d;
    d["kind"] = std::string(to_string(r.kind));
    d["probabilities"] = real_array(r.dims, r.probabilities);
    py::array_t<std::uint8_t> hard(shape_of(r.dims));
    std::copy(r.hard.begin(), r.hard.end(), hard.mutable_data());
    d["hard"] = hard;
    return d;
}

py::list trace_list(const Trace& trace) {
    py::list out;
    for (const auto& r : trace.records) {
        py::dict d;
        d["sweep"] = r.sweep;
        d["sigma_lambda"] = r.sigma_lambda;
        d["train_accuracy"] = std::isnan(r.train_accuracy) ? py::object(py::none()) : py::float_(r.train_accuracy);
        d["phase"] = r.phase == Phase::BurnIn ? "burnin" : "sample";
        out.append(d);
    }
    return out;
}

py::dict report_dict(const RankSelectionReport& r) {
    py::dict d;
    d["method"] = r.method == SelectionMethod::Occam ? "occam" : "cross_validation";
    d["chosen_rank"] = r.chosen_rank;
    py::list candidates;
    for (const auto& c : r.candidates)
        candidates.append(py::dict(py::arg("rank") = c.rank, py::arg("heldout_accuracy") = c.heldout_accuracy,
                                   py::arg("seed") = c.seed, py::arg("burn_in_sweeps") = c.burn_in_sweeps,
                                   py::arg("converged") = c.converged));
    d["candidates"] = candidates;
    py::list history;
    for (const auto& s : r.history)
        history.append(py::dict(py::arg("rank_before") = s.rank_before, py::arg("rank_after") = s.rank_after,
                                py::arg("removed_labels") = s.removed_labels,
                                py::arg("log_likelihood") = s.log_likelihood,
                                py::arg("correct_before") = s.correct_before, py::arg("seed") = s.seed,
                                py::arg("burn_in_sweeps") = s.burn_in_sweeps, py::arg("converged") = s.converged));
    d["history"] = history;
    if (r.method == SelectionMethod::Occam) {
        d["factors"] = factor_list(r.final_state);
        d["labels"] = r.final_state.labels;
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Boolean tensor factorisation by Gibbs sampling";
    m.attr("__version__") = TENSORM_VERSION;

    auto base = py::register_exception<Error>(m, "TensormError", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<BoundsError>(m, "BoundsError", PyExc_IndexError);
    py::register_exception<StateError>(m, "StateError", base.ptr());
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<SamplerConfig>(m, "SamplerConfig")
        .def(py::init<>())
        .def_readwrite("rank", &SamplerConfig::rank)
        .def_readwrite("max_burn_in_sweeps", &SamplerConfig::max_burn_in_sweeps)
        .def_readwrite("convergence_window", &SamplerConfig::convergence_window)
        .def_readwrite("convergence_tol", &SamplerConfig::convergence_tol)
        .def_readwrite("n_samples", &SamplerConfig::n_samples)
        .def_readwrite("seed", &SamplerConfig::seed)
        .def_readwrite("threads", &SamplerConfig::threads)
        .def_readwrite("lambda_init", &SamplerConfig::lambda_init)
        .def_readwrite("alpha", &SamplerConfig::alpha)
        .def_readwrite("beta", &SamplerConfig::beta)
        .def_readwrite("fit_lambda", &SamplerConfig::fit_lambda)
        .def_readwrite("update_lambda_during_sampling", &SamplerConfig::update_lambda_during_sampling)
        .def_readwrite("random_scan", &SamplerConfig::random_scan)
        .def_readwrite("restarts", &SamplerConfig::restarts);

    py::class_<ChainResult>(m, "ChainResult")
        .def_property_readonly("factors", [](const ChainResult& r) { return factor_list(r.state); },
                               "Factor matrices at the last sample")
        .def_property_readonly("labels", [](const ChainResult& r) { return r.state.labels; })
        .def_property_readonly("lambda_", [](const ChainResult& r) { return r.state.noise.lambda; })
        .def_property_readonly("trace", [](const ChainResult& r) { return trace_list(r.trace); })
        .def_property_readonly("converged", [](const ChainResult& r) { return r.trace.converged; })
        .def_property_readonly("burn_in_sweeps", [](const ChainResult& r) { return r.trace.burn_in_sweeps; })
        .def_property_readonly("samples", [](const ChainResult& r) { return r.posterior.samples_seen; })
        .def("factor_mean", [](const ChainResult& r, std::size_t k) { return mean_array(r.posterior.factor_mean(k)); })
        .def("factor_map", [](const ChainResult& r) { return factor_list(factor_map_state(r.posterior)); })
        .def("reconstruct",
             [](const ChainResult& r, const std::string& estimator) {
                 switch (estimator_from_string(estimator)) {
                 case EstimatorKind::PosteriorPredictive:
                     return reconstruction_dict(posterior_predictive(r.posterior));
                 case EstimatorKind::FactorMap:
                     return reconstruction_dict(factor_map_reconstruct(r.posterior));
                 case EstimatorKind::FactorMean:
                     break;
                 }
                 return reconstruction_dict(factor_mean_reconstruct(r.posterior));
             },
             py::arg("estimator") = "posterior_predictive");

    m.def("load_tensor", [](const std::filesystem::path& p) { return to_numpy(load_tensor(p)); }, py::arg("path"),
          "Read a dense or sparse tensor file as an int8 array in {-1, 0, 1}.");
    m.def("save_dense", [](const std::filesystem::path& p, const Int8Array& a) { save_dense(p, from_numpy(a)); },
          py::arg("path"), py::arg("tensor"));
    m.def(
        "save_sparse",
        [](const std::filesystem::path& p, const Int8Array& a, const std::string& unlisted) {
            if (unlisted != "missing" && unlisted != "zero")
                throw ArgumentError("unlisted must be 'missing' or 'zero'");
            save_sparse(p, from_numpy(a), unlisted == "zero" ? SparseDefault::Zero : SparseDefault::Missing);
        },
        py::arg("path"), py::arg("tensor"), py::arg("unlisted") = "missing");

    m.def("expected_density", &expected_density, py::arg("factor_density"), py::arg("rank"), py::arg("order"));
    m.def("density_for_target", &density_for_target, py::arg("target"), py::arg("rank"), py::arg("order"));
    m.def(
        "simulate",
        [](const std::vector<std::size_t>& dims, std::size_t rank, double factor_density, double noise,
           std::uint64_t seed) {
            const auto data = generate(SimSpec{dims, rank, factor_density, noise, seed});
            return py::dict(py::arg("clean") = to_numpy(data.clean), py::arg("noisy") = to_numpy(data.noisy),
                            py::arg("factors") = factor_list(data.truth));
        },
        py::arg("dims"), py::arg("rank"), py::arg("factor_density"), py::arg("noise") = 0.0, py::arg("seed") = 0);

    m.def(
        "mask_holdout",
        [](const Int8Array& a, double fraction, std::uint64_t seed) {
            const auto split = mask_holdout(from_numpy(a), fraction, seed);
            std::vector<std::size_t> offsets;
            std::vector<bool> values;
            for (const auto& e : split.heldout) {
                offsets.push_back(e.offset);
                values.push_back(e.value);
            }
            return py::make_tuple(to_numpy(split.train), offsets, values);
        },
        py::arg("tensor"), py::arg("fraction"), py::arg("seed"),
        "Hide a fraction of the observed entries; returns (train, flat offsets, held-out values).");

    m.def(
        "run_chain",
        [](const Int8Array& a, const SamplerConfig& cfg) {
            const auto t = from_numpy(a);
            py::gil_scoped_release release;
            return run_chain(t, cfg);
        },
        py::arg("tensor"), py::arg("config"));

    m.def(
        "occam_select",
        [](const Int8Array& a, std::size_t initial_rank, const SamplerConfig& cfg, std::size_t threshold) {
            const auto t = from_numpy(a);
            RankSelectionReport r;
            {
                py::gil_scoped_release release;
                r = occam_select(t, initial_rank, cfg, threshold);
            }
            return report_dict(r);
        },
        py::arg("tensor"), py::arg("initial_rank"), py::arg("config"), py::arg("threshold") = 0);

    m.def(
        "cv_select",
        [](const Int8Array& a, const std::vector<std::size_t>& ranks, double holdout, const SamplerConfig& cfg,
           std::size_t jobs) {
            const auto t = from_numpy(a);
            RankSelectionReport r;
            {
                py::gil_scoped_release release;
                r = cv_select(t, ranks, holdout, cfg, jobs);
            }
            return report_dict(r);
        },
        py::arg("tensor"), py::arg("ranks"), py::arg("holdout") = 0.2, py::arg("config"), py::arg("jobs") = 1);

    m.def(
        "relational_encode",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values, bool normalize,
           double epsilon) {
            if (values.ndim() != 2)
                throw ArgumentError("expected a 2-d objects x attributes array");
            const auto rows = static_cast<std::size_t>(values.shape(0));
            const auto cols = static_cast<std::size_t>(values.shape(1));
            std::vector<double> v(values.data(), values.data() + values.size());
            std::vector<std::uint8_t> missing(v.size());
            for (std::size_t i = 0; i < v.size(); ++i)
                missing[i] = std::isnan(v[i]);
            auto matrix = ContinuousMatrix::from_values(rows, cols, std::move(v), std::move(missing));
            if (normalize)
                matrix = zscore_normalize(matrix);
            return to_numpy(relational_encode(matrix, epsilon));
        },
        py::arg("values"), py::arg("normalize") = false, py::arg("epsilon") = 0.0,
        "NaN marks a missing value.");
}
