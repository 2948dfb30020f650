#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "fedae/experiment.hpp"

namespace py = pybind11;
using namespace fedae;
using nlohmann::json;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Tensor& t) {
    py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

Tensor from_numpy(const FloatArray& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

Tensor window_batch(const FloatArray& a) {
    if (a.ndim() != 3 || a.shape(1) != static_cast<py::ssize_t>(kChannels) ||
        a.shape(2) != static_cast<py::ssize_t>(kWindowLen)) {
        throw ShapeError("expected windows of shape [n, " + std::to_string(kChannels) + ", " +
                         std::to_string(kWindowLen) + "]");
    }
    return from_numpy(a);
}

py::dict window_set_dict(const WindowSet& ws) {
    py::dict d;
    d["client_id"] = ws.client_id;
    d["source"] = ws.source;
    d["windows"] = to_numpy(ws.as_tensor());
    d["labels"] = ws.labels ? py::cast(*ws.labels) : py::none();
    return d;
}

ExperimentConfig config_from(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_experiment_config(j, base_dir);
}

}  // namespace

PYBIND11_MODULE(_fedae, m) {
    m.doc() = "Federated autoencoder pretraining for activity recognition.";
    m.attr("__version__") = std::string(kVersion);

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.attr("ACTIVITY_CODES") = [] {
        std::vector<std::string> codes;
        for (auto a : all_activities()) codes.emplace_back(activity_code(a));
        return codes;
    }();

    py::class_<ParamSet>(m, "ParamSet")
        .def(py::init<>())
        .def("names",
             [](const ParamSet& p) {
                 std::vector<std::string> out;
                 for (const auto& e : p.entries()) out.push_back(e.name);
                 return out;
             })
        .def("__getitem__", [](const ParamSet& p, const std::string& name) { return to_numpy(p.at(name)); })
        .def("__setitem__",
             [](ParamSet& p, const std::string& name, const FloatArray& a) {
                 Tensor t = from_numpy(a);
                 if (Tensor* existing = p.find(name)) {
                     if (existing->shape() != t.shape()) throw ShapeError("shape mismatch for " + name);
                     *existing = std::move(t);
                 } else {
                     p.add(name, std::move(t));
                 }
             })
        .def("__contains__", &ParamSet::contains)
        .def("__len__", &ParamSet::size)
        .def("__eq__", [](const ParamSet& a, const ParamSet& b) { return a == b; })
        .def("copy", [](const ParamSet& p) { return ParamSet(p); })
        .def_property_readonly("total_params", &ParamSet::total_params)
        .def_property_readonly("byte_size", &ParamSet::byte_size)
        .def("save", [](const ParamSet& p, const std::filesystem::path& path) { save_params(path, p); })
        .def_static("load", &load_params);

    m.def("build_autoencoder", [](std::uint64_t seed) { return build_autoencoder({}, seed); }, py::arg("seed") = 0);
    m.def("build_classifier",
          [](const ParamSet& ae, std::uint64_t seed) { return build_classifier_from_encoder(ae, seed); },
          py::arg("autoencoder"), py::arg("seed") = 0);
    m.def("encode", [](const ParamSet& p, const FloatArray& x) { return to_numpy(encode(p, window_batch(x))); });
    m.def("reconstruct",
          [](const ParamSet& p, const FloatArray& x) { return to_numpy(ae_forward(p, window_batch(x)).reconstruction); });
    m.def("classify", [](const ParamSet& p, const FloatArray& x) {
        return to_numpy(softmax_rows(classifier_forward(p, window_batch(x))));
    });

    m.def("fedavg",
          [](const std::vector<ParamSet>& models, const std::vector<double>& weights) {
              return fedavg_aggregate(models, weights);
          },
          py::arg("models"), py::arg("weights"));

    m.def("split_sizes", [](std::size_t n) {
        const SplitSizes s = split_sizes(n);
        return py::make_tuple(s.test, s.client_unlabeled, s.server_labeled);
    });
    m.def("partition_indices",
          [](std::size_t n, std::uint64_t seed) {
              WindowSet ws;
              ws.client_id = "c";
              ws.source = "s";
              ws.labels = std::vector<int>(n, 0);
              ws.values.assign(n * kWindowElems, 0.0f);
              const PartitionIndices idx = partition(ws, seed).indices;
              py::dict d;
              d["test"] = idx.test;
              d["client_unlabeled"] = idx.client_unlabeled;
              d["server_labeled"] = idx.server_labeled;
              return d;
          },
          py::arg("n"), py::arg("seed"));

    m.def("confusion", [](const std::vector<int>& truth, const std::vector<int>& pred) {
        const ConfusionMatrix cm = confusion(truth, pred);
        py::array_t<std::int64_t> out({static_cast<py::ssize_t>(kNumClasses), static_cast<py::ssize_t>(kNumClasses)});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t r = 0; r < kNumClasses; ++r)
            for (std::size_t c = 0; c < kNumClasses; ++c) v(r, c) = cm.counts[r][c];
        return out;
    });
    m.def("macro_f1",
          [](const std::vector<int>& truth, const std::vector<int>& pred) { return macro_f1(confusion(truth, pred)); });

    m.def("synthetic_clients",
          [](const std::string& config_json, std::uint64_t seed) {
              const ExperimentConfig cfg = config_from(config_json, ".");
              py::list out;
              for (const auto& ws : generate_synthetic_clients(cfg.data.synthetic, seed)) out.append(window_set_dict(ws));
              return out;
          },
          py::arg("config_json") = "{}", py::arg("seed") = 0);

    m.def("resolve_config",
          [](const std::string& config_json, const std::string& base_dir) {
              return config_to_json(config_from(config_json, base_dir)).dump();
          },
          py::arg("config_json"), py::arg("base_dir") = ".");

    m.def("generate_dataset",
          [](const std::string& config_json, const std::string& base_dir) {
              const ExperimentConfig cfg = config_from(config_json, base_dir);
              py::gil_scoped_release release;
              return generate_dataset(cfg);
          },
          py::arg("config_json"), py::arg("base_dir") = ".");

    m.def("run_experiment",
          [](const std::string& config_json, const std::string& base_dir) {
              const ExperimentConfig cfg = config_from(config_json, base_dir);
              RunOutcome outcome;
              {
                  py::gil_scoped_release release;
                  outcome = run_experiment(cfg);
              }
              py::dict d;
              d["report"] = report_to_json(outcome.report, cfg.arm, config_to_json(cfg)).dump();
              std::ostringstream rounds;
              write_rounds_csv(rounds, outcome.rounds);
              d["rounds_csv"] = rounds.str();
              d["finetune_losses"] = outcome.finetune_losses;
              d["warnings"] = outcome.warnings;
              return d;
          },
          py::arg("config_json"), py::arg("base_dir") = ".");
}
