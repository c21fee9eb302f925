// Copyright 2026 The pgap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "pgap/align.h"
#include "pgap/basis.h"
#include "pgap/commands.h"
#include "pgap/config.h"
#include "pgap/errors.h"
#include "pgap/lab.h"
#include "pgap/matrix.h"
#include "pgap/optimizer.h"
#include "pgap/random.h"
#include "pgap/svd.h"
#include "pgap/tasks.h"

namespace py = pybind11;

namespace pgap {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(static_cast<std::size_t>(a.shape(0)), 1);
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
  }
  if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array ToArray(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

SubspaceBasis FrameOnly(const Matrix& u, const Matrix& v) {
  return SubspaceBasis{u, std::vector<double>(u.cols(), 1.0), v, 0};
}

py::dict RunToDict(const RunResult& r, double final_loss) {
  const auto& recs = r.log.records;
  std::vector<std::int64_t> step;
  std::vector<double> loss, rho, delta, eta;
  std::vector<bool> refresh;
  for (const auto& rec : recs) {
    step.push_back(rec.step);
    loss.push_back(rec.loss);
    rho.push_back(rec.rho);
    delta.push_back(rec.delta);
    eta.push_back(rec.eta);
    refresh.push_back(rec.refresh);
  }
  py::dict d;
  d["step"] = py::array(py::cast(step));
  d["loss"] = py::array(py::cast(loss));
  d["rho"] = py::array(py::cast(rho));
  d["delta"] = py::array(py::cast(delta));
  d["eta"] = py::array(py::cast(eta));
  d["refresh"] = py::array(py::cast(refresh));
  d["steps_to_target"] = r.steps_to_target ? py::cast(*r.steps_to_target) : py::none();
  d["final_loss"] = final_loss;
  return d;
}

py::dict TrainFromText(const std::string& text, const std::string& optimizer) {
  const RunConfig config = ParseConfig(text, "<string>");
  OptimizerConfig c = optimizer.empty() ? config.optimizer : config.Resolve(optimizer);
  c.Validate();
  const Task task = BuildTask(config.task);
  RunResult r;
  {
    py::gil_scoped_release release;
    r = Run(c, *task.oracle, task.data, task.init);
  }
  return RunToDict(r, task.oracle->Loss(r.final_params, task.data));
}

py::list LabFromText(const std::string& suite, const std::string& text) {
  const RunConfig config = ParseConfig(text, "<string>");
  std::vector<McReport> reports;
  std::ostringstream progress;
  {
    py::gil_scoped_release release;
    reports = LabCommand(suite, config, progress);
  }
  py::list out;
  for (const auto& r : reports) {
    py::dict d;
    d["id"] = r.id;
    d["samples"] = r.samples;
    d["estimate"] = r.estimate;
    d["stderr"] = r.stderr_;
    d["target"] = r.target;
    d["abs_tol"] = r.abs_tol;
    d["asserted"] = r.asserted;
    d["pass"] = r.pass;
    out.append(d);
  }
  return out;
}

}  // namespace
}  // namespace pgap

PYBIND11_MODULE(_core, m) {
  using namespace pgap;
  m.doc() = "Zeroth-order optimization with gradient-aligned low-rank perturbations.";

  auto& base_error = py::register_exception<Error>(m, "PgapError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base_error.ptr());
  py::register_exception<NumericError>(m, "NumericError", base_error.ptr());
  py::register_exception<StateError>(m, "StateError", base_error.ptr());
  py::register_exception<IoError>(m, "IoError", base_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("frob_inner", [](const Array& a, const Array& b) {
    return FrobInner(ToMatrix(a), ToMatrix(b));
  }, py::arg("a"), py::arg("b"));
  m.def("frob_norm", [](const Array& a) { return FrobNorm(ToMatrix(a)); }, py::arg("a"));
  m.def("truncated_svd", [](const Array& g, std::size_t r) {
    const SvdTriple t = TruncatedSvd(ToMatrix(g), r);
    return py::make_tuple(ToArray(t.u), py::array(py::cast(t.s)), ToArray(t.v));
  }, py::arg("g"), py::arg("r"), "Best rank-r factors (u, s, v) of g.");
  m.def("project_lowdim", [](const Array& z_init, const Array& s, double delta, int xi) {
    return ToArray(ProjectLowDim(ToMatrix(z_init), ToMatrix(s), delta, xi));
  }, py::arg("z_init"), py::arg("s"), py::arg("delta"), py::arg("xi"),
     "Projects z_init onto <s, Z> = xi sqrt(delta) |s|.");
  m.def("lift", [](const Array& z, const Array& u, const Array& v) {
    return ToArray(Lift(ToMatrix(z), FrameOnly(ToMatrix(u), ToMatrix(v))));
  }, py::arg("z"), py::arg("u"), py::arg("v"), "u z v^T.");

  m.def("derive_seed", [](std::uint64_t parent, const std::string& label,
                          std::uint64_t counter) {
    return DeriveSubstream(Seed{parent}, label, counter).value;
  }, py::arg("parent"), py::arg("label"), py::arg("counter"));
  m.def("gaussian_matrix", [](std::uint64_t seed, std::size_t rows, std::size_t cols) {
    GaussStream s(Seed{seed});
    return ToArray(s.GaussMatrix(rows, cols));
  }, py::arg("seed"), py::arg("rows"), py::arg("cols"));

  m.def("resolve_config", [](const std::string& text) {
    return ToToml(ParseConfig(text, "<string>"));
  }, py::arg("text"), "Fully resolved configuration as TOML.");
  m.def("train", &TrainFromText, py::arg("config") = "", py::arg("optimizer") = "",
        "Runs one optimizer in memory; returns the per-step log as arrays.");
  m.def("lab", &LabFromText, py::arg("suite"), py::arg("config") = "",
        "Runs a lab suite, writing its reports to the configured output directory.");
  m.def("lab_suites", &LabSuiteNames);
}
