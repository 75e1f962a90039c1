#include <complex>
#include <filesystem>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mtlab/counterexample.hpp"
#include "mtlab/extension.hpp"
#include "mtlab/inequality_lab.hpp"
#include "mtlab/tomography.hpp"
#include "scenarios.hpp"

namespace py = pybind11;
using namespace mtlab;

namespace {

std::vector<py::ssize_t> shape_of(const SpatialGrid& g) {
  if (g.n == 2) return {g.extent[0], g.extent[1]};
  return {g.extent[0], g.extent[1], g.extent[2]};
}

py::dict extend(int n, double R, std::uint64_t seed, double spread, const std::string& surface, double domain_radius,
                double spacing) {
  auto patch = SurfacePatch::by_name(surface, n, domain_radius);
  Density g = random_density(patch, R, seed, spread * R);
  FastOptions fo;
  fo.spacing = spacing;
  Field f = extend_fast_grid(g, R, fo);
  py::array_t<std::complex<double>> field(shape_of(f.grid));
  std::copy(f.samples.begin(), f.samples.end(), field.mutable_data());
  py::dict d;
  d["field"] = field;
  d["origin"] = std::vector<double>(f.grid.origin.begin(), f.grid.origin.begin() + n);
  d["spacing"] = f.grid.spacing;
  d["slice_l2"] = slice_l2(f);
  d["g_norm_sq"] = g.l2_norm_sq();
  return d;
}

py::dict xray(py::array_t<double, py::array::c_style | py::array::forcecast> w, double spacing, double angular_res,
              double offset_res) {
  const int n = static_cast<int>(w.ndim());
  if (n != 2 && n != 3) throw py::value_error("weight must be a 2-d or 3-d array");
  SpatialGrid g;
  g.n = n;
  g.spacing = spacing;
  for (int a = 0; a < n; ++a) {
    g.extent[a] = static_cast<int>(w.shape(a));
    g.origin[a] = -0.5 * spacing * (g.extent[a] - 1);
  }
  Weight wt(g);
  std::copy(w.data(), w.data() + w.size(), wt.samples.begin());
  XrayOptions o;
  o.angular_res = angular_res;
  o.offset_res = offset_res;
  auto r = xray_sup(wt, o);
  py::dict d;
  d["value"] = r.value;
  d["coarse_value"] = r.coarse_value;
  d["point"] = std::vector<double>(r.line.point.begin(), r.line.point.begin() + n);
  d["direction"] = std::vector<double>(r.line.direction.begin(), r.line.direction.begin() + n);
  return d;
}

py::dict cex(double R, int n, std::uint64_t seed, int line_cap, double line_reach, int candidates, int threads) {
  OccupancyOptions occ;
  occ.seed = seed;
  occ.line_cap = line_cap;
  occ.line_reach = line_reach;
  occ.candidates = candidates;
  CexOptions opt;
  opt.threads = threads;
  CexRun run;
  {
    py::gil_scoped_release release;
    run = run_cex(R, n, occ, opt);
  }
  py::dict d;
  d["caps"] = run.families.caps.size();
  d["tubes"] = run.families.tubes.size();
  d["n_balls"] = run.weight.centers.size();
  d["certified"] = run.weight.certificate.passed;
  d["line_max"] = run.weight.certificate.line_max;
  d["selected"] = run.state.selection.balls.size();
  d["incidences"] = run.state.selection.incidences;
  d["weighted"] = run.result.weighted;
  d["total"] = run.result.total;
  d["xray"] = run.result.xray;
  d["ratio"] = run.result.ratio;
  d["large_fraction"] = run.result.large_fraction;
  d["state_json"] = state_to_json(run.state, run.families);
  return d;
}

py::dict run_scenario(const std::string& name, const std::vector<std::string>& overrides, const std::string& out_dir) {
  const auto* s = mtcli::find_scenario(name);
  if (!s) throw py::key_error("unknown scenario '" + name + "'");
  mtcli::ScenarioResult res;
  {
    py::gil_scoped_release release;
    res = mtcli::run_scenario(*s, "", overrides, out_dir);
  }
  py::list checks;
  for (const auto& c : res.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
  py::dict d;
  d["ok"] = res.ok();
  d["checks"] = checks;
  d["artifacts"] = res.artifacts;
  d["seconds"] = res.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mtlab, m) {
  m.doc() = "Bindings for the mtlab numerical library";
  py::register_exception<mtcli::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  m.def("extend", &extend, py::arg("n") = 2, py::arg("R") = 32.0, py::arg("seed") = 1, py::arg("spread") = 0.25,
        py::arg("surface") = "paraboloid", py::arg("domain_radius") = 0.5, py::arg("spacing") = 1.0,
        "Extension of a random density on [-R, R]^n. Returns field, origin, spacing, slice_l2 and g_norm_sq.");
  m.def("xray_sup", &xray, py::arg("weight"), py::arg("spacing") = 1.0, py::arg("angular_res") = 0.0,
        py::arg("offset_res") = 0.5, "Sup of the X-ray transform of a centred 2-d or 3-d weight array.");
  m.def("run_cex", &cex, py::arg("R"), py::arg("n") = 2, py::arg("seed") = 1, py::arg("line_cap") = 6,
        py::arg("line_reach") = 1.0, py::arg("candidates") = 8, py::arg("threads") = 1,
        "One counterexample run; returns the certificate, selection size and MT ratio.");
  m.def(
      "fit_loglog",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        auto f = fit_loglog(x, y);
        return py::make_tuple(f.slope, f.intercept);
      },
      py::arg("x"), py::arg("y"), "Least-squares slope and intercept of log y against log x.");
  m.def(
      "list_scenarios",
      [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : mtcli::catalog()) out.emplace_back(s.name, s.description);
        return out;
      },
      "Names and descriptions of the scenario catalog.");
  m.def("run_scenario", &run_scenario, py::arg("name"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("out_dir") = ".", "Run a catalog scenario; returns ok, checks, artifacts and seconds.");
}
