#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psrom/errors.hpp"
#include "psrom/ideal_geometry.hpp"
#include "psrom/intervention.hpp"
#include "psrom/planner_service.hpp"
#include "psrom/predictor_corrector.hpp"
#include "psrom/response_surface.hpp"
#include "psrom/synthetic.hpp"

namespace py = pybind11;
using namespace psrom;

namespace {

py::dict solution_dict(const HemodynamicSolution& s) {
  py::dict d;
  d["pressures"] = s.pressures;
  d["flows"] = s.flows;
  d["ffr"] = s.ffr;
  d["aortic_pressure"] = s.aortic_pressure;
  d["ostial_flow"] = s.ostial_flow;
  d["converged"] = s.converged;
  d["iterations"] = s.iterations;
  return d;
}

ModificationPlan plan_from(const std::vector<std::tuple<std::size_t, double, double, double>>& intervals,
                           double blend_length) {
  ModificationPlan plan;
  plan.blend_length = blend_length;
  for (const auto& [path, a, b, f] : intervals) plan.intervals.push_back({path, a, b, f});
  return plan;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reduced-order FFR model: geometry, oracle, response surface and planner service";

  // later registrations are tried first, so the base class goes in first
  const auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<TreeValidationError>(m, "TreeValidationError", base.ptr());
  py::register_exception<EnvelopeError>(m, "EnvelopeError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

  py::class_<CenterlineTree>(m, "Tree")
      .def_property_readonly("name", &CenterlineTree::name)
      .def_property_readonly("size", &CenterlineTree::size)
      .def_property_readonly("outlets", &CenterlineTree::outlets)
      .def("radii", &CenterlineTree::radii)
      .def("arc_length", &CenterlineTree::arc_length, py::arg("id"))
      .def("paths", [](const CenterlineTree& t) { return root_to_leaf_paths(t); })
      .def("with_radii", [](const CenterlineTree& t, const std::vector<double>& r) { return t.with_radii(r); })
      .def("to_json", [](const CenterlineTree& t) { return save_tree(t); })
      .def("__len__", &CenterlineTree::size);

  m.def("load_tree", &load_tree_from_string, py::arg("document"));
  m.def("load_tree_file", &load_tree_file, py::arg("path"));
  m.def(
      "synthetic_tree",
      [](std::uint64_t seed) { return generate_synthetic_patient(seed).tree; }, py::arg("seed"));

  m.def(
      "fit_ideal",
      [](const CenterlineTree& t) {
        const auto fit = fit_ideal({t, std::nullopt, std::nullopt});
        return py::make_tuple(fit.radius_ideal, fit.objective_value);
      },
      py::arg("tree"), "Monotone ideal radii and the squared-deviation objective.");

  m.def(
      "detect_lesions",
      [](const CenterlineTree& t) {
        const auto fit = fit_ideal({t, std::nullopt, std::nullopt});
        auto lesions = detect_lesions(t, fit);
        classify_lesions(t, lesions);
        py::list out;
        for (const auto& l : lesions) {
          py::dict d;
          d["path_id"] = l.path_id;
          d["arc_start"] = l.arc_start;
          d["arc_end"] = l.arc_end;
          d["max_narrowing"] = l.max_narrowing;
          d["kind"] = lesion_kind_name(l.kind);
          d["points"] = l.member_point_ids;
          out.append(d);
        }
        return out;
      },
      py::arg("tree"));

  m.def(
      "solve_oracle",
      [](const CenterlineTree& t, double kappa) {
        OracleOptions o;
        o.recovery_efficiency = kappa;
        return solution_dict(solve_steady(t, default_boundary_conditions(t), o));
      },
      py::arg("tree"), py::arg("kappa") = kDefaultRecoveryEfficiency);

  m.def("alpha", &alpha, py::arg("r"), py::arg("r_orig"), py::arg("r_ideal"));

  py::class_<ResponseSurface>(m, "Surface")
      .def_property_readonly("patient", [](const ResponseSurface& s) { return s.patient; })
      .def_property_readonly("ideal", [](const ResponseSurface& s) { return s.ideal; })
      .def("to_json", [](const ResponseSurface& s) { return save_surface(s); })
      .def(
          "solve",
          [](const ResponseSurface& s, const std::vector<std::tuple<std::size_t, double, double, double>>& intervals,
             double blend_length, double tol2, bool bc_scaling) {
            const auto mod = apply_modification(s.patient, s.ideal.radii(), plan_from(intervals, blend_length));
            SolverConfig c;
            c.tol2 = tol2;
            c.bc_scaling_enabled = bc_scaling;
            HemodynamicSolution sol;
            {
              py::gil_scoped_release release;
              sol = solve(s, mod.tree, mod.modified_edges, c);
            }
            return solution_dict(sol);
          },
          py::arg("intervals") = std::vector<std::tuple<std::size_t, double, double, double>>{},
          py::arg("blend_length") = 0.2, py::arg("tol2") = 0.02, py::arg("bc_scaling") = true,
          "Solve a plan given as (path_id, arc_start, arc_end, target_fraction) tuples.");

  m.def(
      "build_surface",
      [](const CenterlineTree& t, double kappa) {
        py::gil_scoped_release release;
        const auto fit = fit_ideal({t, std::nullopt, std::nullopt});
        OracleOptions o;
        o.recovery_efficiency = kappa;
        return build_response_surface(t, t.with_radii(fit.radius_ideal), default_boundary_conditions(t), o);
      },
      py::arg("tree"), py::arg("kappa") = kDefaultRecoveryEfficiency);
  m.def("load_surface", &load_surface, py::arg("document"));

  py::class_<PlannerService>(m, "PlannerService")
      .def(py::init([](std::size_t max_models, std::string store_dir) {
             PlannerConfig c;
             c.max_models = max_models;
             c.store_dir = std::move(store_dir);
             return std::make_unique<PlannerService>(c);
           }),
           py::arg("max_models") = 32, py::arg("store_dir") = "")
      .def("create_model",
           [](PlannerService& s, const std::string& body) {
             py::gil_scoped_release release;
             const auto r = s.create_model(body);
             return std::make_pair(r.status, r.body);
           })
      .def("list_lesions",
           [](PlannerService& s, const std::string& id) {
             const auto r = s.list_lesions(id);
             return std::make_pair(r.status, r.body);
           })
      .def("evaluate_plan",
           [](PlannerService& s, const std::string& id, const std::string& body) {
             py::gil_scoped_release release;
             const auto r = s.evaluate_plan(id, body);
             return std::make_pair(r.status, r.body);
           })
      .def(
          "traces",
          [](PlannerService& s, const std::string& id, std::optional<std::string> path) {
            const auto r = s.traces(id, path);
            return std::make_pair(r.status, r.body);
          },
          py::arg("model_id"), py::arg("path") = std::nullopt)
      .def("delete_model",
           [](PlannerService& s, const std::string& id) {
             const auto r = s.delete_model(id);
             return std::make_pair(r.status, r.body);
           })
      .def_property_readonly("model_count", &PlannerService::model_count);
}
