#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "edfa/cli.hpp"
#include "edfa/config.hpp"
#include "edfa/io.hpp"

namespace py = pybind11;
using namespace edfa;

PYBIND11_MODULE(_edfa, m) {
  m.doc() = "EDFA gain spectrum surrogate, dataset tools and MLP gain model";

  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("label"));
  m.def("frequencies_thz", [] { return FrequencyGrid{}.frequencies(); });
  m.def("default_power_grid", [] {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : default_power_grid()) out.emplace_back(p.p_in_dbm, p.p_out_dbm);
    return out;
  });

  py::class_<AmplifierDevice>(m, "Device")
      .def_readonly("device_id", &AmplifierDevice::device_id)
      .def_readonly("seed", &AmplifierDevice::seed)
      .def_readonly("a", &AmplifierDevice::a)
      .def_readonly("b", &AmplifierDevice::b)
      .def_readonly("hf_slope_dev", &AmplifierDevice::hf_slope_dev)
      .def_readonly("shb_gamma", &AmplifierDevice::shb_gamma)
      .def("amplify",
           [](const AmplifierDevice& d, const std::vector<double>& psd_in_dbm, double p_out_dbm) {
             return amplify(d, PsdProfile{d.grid, psd_in_dbm}, p_out_dbm).powers_dbm;
           },
           py::arg("psd_in_dbm"), py::arg("p_out_dbm"));

  m.def(
      "make_device",
      [](const std::string& id, std::uint64_t seed, double sigma_dev, double shb_gamma) {
        MakeParams make;
        make.sigma_dev = sigma_dev;
        make.shb_gamma = shb_gamma;
        return make_device(FrequencyGrid{}, make, id, seed);
      },
      py::arg("device_id"), py::arg("seed"), py::arg("sigma_dev") = 0.0, py::arg("shb_gamma") = 0.0);

  m.def("normalize", [](const std::vector<double>& psd_dbm) {
    const auto n = normalize(PsdProfile{FrequencyGrid{}, psd_dbm});
    return py::make_tuple(n.norm_db, n.total_dbm);
  });

  py::class_<Checkpoint>(m, "Model")
      .def_property_readonly("dims", [](const Checkpoint& c) { return c.model.dims(); })
      .def_readonly("trained_on", &Checkpoint::trained_on)
      .def(
          "predict",
          [](const Checkpoint& c, const std::vector<double>& psd_in_norm_db, double p_in, double p_out) {
            Sample s;
            s.p_in_dbm = p_in;
            s.p_out_dbm = p_out;
            s.gain_db = p_out - p_in;
            s.psd_in_norm_db = psd_in_norm_db;
            return predict(c.model, s);
          },
          py::arg("psd_in_norm_db"), py::arg("p_in_dbm"), py::arg("p_out_dbm"));
  m.def("load_model", &load_checkpoint, py::arg("path"));

  m.def(
      "gradient_check",
      [](std::size_t trials, std::uint64_t seed) {
        const auto r = gradient_check(trials, seed);
        py::dict d;
        d["max_rel_error"] = r.max_rel_error;
        d["checked"] = r.checked;
        d["skipped"] = r.skipped;
        return d;
      },
      py::arg("trials") = 100, py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run an edfa subcommand; returns (exit_code, stdout, stderr).");

  py::register_exception<NumericFailure>(m, "NumericFailure");
  py::register_exception<CalibrationError>(m, "CalibrationError");
}
