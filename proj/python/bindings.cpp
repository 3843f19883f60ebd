#include "axonad/checkpoint.hpp"
#include "axonad/commands.hpp"
#include "axonad/error.hpp"
#include "axonad/metrics.hpp"
#include "axonad/run_config.hpp"
#include "axonad/scoring.hpp"
#include "axonad/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

namespace py = pybind11;
using namespace axonad;

namespace {

using Labels = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Scores = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const std::uint8_t> view(const Labels& a) {
    require(a.ndim() == 1, ErrorCode::shape, "labels must be one-dimensional");
    return {a.data(), std::size_t(a.size())};
}

std::span<const double> view(const Scores& a) {
    require(a.ndim() == 1, ErrorCode::shape, "scores must be one-dimensional");
    return {a.data(), std::size_t(a.size())};
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> out(py::ssize_t(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

RunConfig config_from(const std::string& json_text) {
    if (json_text.empty()) return {};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

py::dict metric_dict(const MetricReport& r) {
    py::dict d;
    d["auc_roc"] = r.auc_roc;
    d["auc_pr"] = r.auc_pr;
    d["pa_f1"] = r.pa_f1;
    d["event_f1"] = r.event_f1;
    d["range_f1"] = r.range_f1;
    return d;
}

py::dict score_dict(const Checkpoint& ckpt, const Mat& values) {
    const auto comps = score_series(ckpt, values);
    const auto records = score_records(comps, ckpt.config.model.window, ckpt.calibration, ckpt.config.score.mode);
    std::vector<std::int64_t> end;
    std::vector<double> d_rec, d_q, score;
    for (const auto& r : records) {
        end.push_back(r.window_end_index);
        d_rec.push_back(r.d_rec);
        d_q.push_back(r.d_q);
        score.push_back(r.score);
    }
    const auto aligned =
        align_scores(records, ckpt.config.score.align, ckpt.config.model.window, std::size_t(values.rows()));
    py::dict d;
    d["window_end_index"] = to_array(end);
    d["d_rec"] = to_array(d_rec);
    d["d_q"] = to_array(d_q);
    d["score"] = to_array(score);
    d["aligned_score"] = to_array(aligned.score);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attention-guided multivariate time series anomaly detector";

    static py::exception<Error> exc(m, "AxonadError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(exc.ptr(), (std::string(code_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("default_config", [] { return to_json(RunConfig{}).dump(); },
          "Full run configuration with every default, as JSON text.");

    m.def(
        "generate_synthetic",
        [](const std::string& config_json) {
            const RunConfig cfg = config_from(config_json);
            SeriesFrame f;
            {
                py::gil_scoped_release release;
                f = generate_synthetic(cfg.generator);
            }
            py::list intervals;
            for (const auto& iv : f.intervals)
                intervals.append(py::make_tuple(iv.start, iv.end, std::string(to_string(iv.kind)), iv.channels));
            return py::make_tuple(f.values, to_array(*f.labels), intervals);
        },
        py::arg("config_json") = "",
        "Synthetic series from the `generator` section: (values N x F, labels N, intervals).");

    m.def("auc_roc", [](const Scores& s, const Labels& y) { return auc_roc(view(s), view(y)); },
          py::arg("scores"), py::arg("labels"));
    m.def("auc_pr", [](const Scores& s, const Labels& y) { return auc_pr(view(s), view(y)); },
          py::arg("scores"), py::arg("labels"));
    m.def("evaluate", [](const Scores& s, const Labels& y) { return metric_dict(evaluate_scores(view(s), view(y))); },
          py::arg("scores"), py::arg("labels"), "AUC-ROC, AUC-PR and best-threshold F1 variants.");
    m.def("robust_z", &robust_z, py::arg("u"), py::arg("median"), py::arg("iqr"), py::arg("eps_rz") = 1e-8);
    m.def(
        "tail_bounds",
        [](int window, int horizon, int tail) {
            const auto b = tail_bounds(window, horizon, tail);
            return py::make_tuple(b.tau0, b.k_eff);
        },
        py::arg("window"), py::arg("horizon"), py::arg("tail"));

    py::class_<Checkpoint>(m, "Detector")
        .def_static(
            "train",
            [](const Mat& values, const std::string& config_json, const std::function<void(int, double)>& on_epoch) {
                const RunConfig cfg = config_from(config_json);
                EpochCallback cb;
                if (on_epoch)
                    cb = [&](const EpochRecord& r) {
                        py::gil_scoped_acquire acquire;
                        on_epoch(r.epoch, r.val_rec);
                    };
                py::gil_scoped_release release;
                return train_detector(values, cfg, cb).checkpoint;
            },
            py::arg("values"), py::arg("config_json") = "", py::arg("on_epoch") = nullptr,
            "Trains on the leading training segment of `values` (N x F).")
        .def_static("load", [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"))
        .def("save", [](const Checkpoint& c, const std::string& path) { save_checkpoint(c, path); }, py::arg("path"))
        .def("to_bytes", [](const Checkpoint& c) { return py::bytes(serialize_checkpoint(c)); })
        .def_static("from_bytes", [](const py::bytes& b) { return parse_checkpoint(std::string(b)); })
        .def_property_readonly("config_json", [](const Checkpoint& c) { return to_json(c.config).dump(); })
        .def_property_readonly("calibration_json", [](const Checkpoint& c) { return to_json(c.calibration).dump(); })
        .def("score", &score_dict, py::arg("values"),
             "Per-window d_rec, d_q and combined score, plus the per-timestep aligned score.");
}
