#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "oscdrift/errors.hpp"
#include "oscdrift/fold.hpp"
#include "oscdrift/hypotheses.hpp"
#include "oscdrift/instances.hpp"
#include "oscdrift/rda.hpp"

namespace py = pybind11;
using namespace oscdrift;

namespace {

EigenProblem full_problem(const PiecewisePotential& m, const Coefficient& c, double s) {
  EigenProblem pb;
  pb.m = m;
  pb.c = c;
  pb.s = s;
  return pb;
}

SolverOptions solver_options(bool estimate_error) {
  SolverOptions o;
  o.estimate_error = estimate_error;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Principal eigenvalues of drift operators with oscillating potentials";

  static PyObject* error_type = nullptr;
  error_type = PyErr_NewException("oscdrift._core.OscdriftError", PyExc_RuntimeError, nullptr);
  mod.attr("OscdriftError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // instance carries the error kind, e.g. "InvalidParams"
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<StepParams>(mod, "StepParams")
      .def_static("make", &StepParams::make, py::arg("a"), py::arg("h"), py::arg("alpha"), py::arg("beta"),
                  py::arg("nu"), py::arg("l"), py::arg("kappa") = 1.0)
      .def_readonly("delta", &StepParams::delta)
      .def_readonly("h", &StepParams::h)
      .def_readonly("alpha", &StepParams::alpha)
      .def_readonly("beta", &StepParams::beta)
      .def_readonly("nu", &StepParams::nu)
      .def_readonly("l", &StepParams::l)
      .def_readonly("a", &StepParams::a)
      .def_readonly("b", &StepParams::b)
      .def_readonly("kappa", &StepParams::kappa)
      .def("shifted", &StepParams::shifted, py::arg("levels"), py::arg("paper_style") = false)
      .def("__repr__", [](const StepParams& p) {
        std::ostringstream out;
        out << "StepParams(a=" << p.a << ", h=" << p.h << ", alpha=" << p.alpha << ", beta=" << p.beta
            << ", nu=" << p.nu << ", l=" << p.l << ", delta=" << p.delta << ")";
        return out.str();
      });
  mod.def("example_params", &example_params);
  mod.def("desk_params", &desk_params);
  mod.def("rda_params", &rda_params);

  py::class_<Truncation>(mod, "Truncation")
      .def(py::init([](double min_width, double min_amplitude, int max_levels) {
             return Truncation{min_width, min_amplitude, max_levels};
           }),
           py::arg("min_width") = 1e-9, py::arg("min_amplitude") = 1e-12, py::arg("max_levels") = 64)
      .def_readwrite("min_width", &Truncation::min_width)
      .def_readwrite("min_amplitude", &Truncation::min_amplitude)
      .def_readwrite("max_levels", &Truncation::max_levels);

  py::class_<PiecewisePotential>(mod, "Potential")
      .def("value", &PiecewisePotential::value)
      .def("derivative", &PiecewisePotential::derivative)
      .def("__call__", &PiecewisePotential::value)
      .def("max_abs", &PiecewisePotential::max_abs)
      .def("shifted", &PiecewisePotential::shifted)
      .def("scaled", &PiecewisePotential::scaled)
      .def_property_readonly("pieces", [](const PiecewisePotential& m) { return m.pieces().size(); })
      .def_property_readonly("zero_touch", [](const PiecewisePotential& m) { return m.meta().zero_touch; })
      .def_property_readonly("a", [](const PiecewisePotential& m) { return m.meta().a; })
      .def_property_readonly("b", [](const PiecewisePotential& m) { return m.meta().b; })
      .def_property_readonly("origin", [](const PiecewisePotential& m) { return m.meta().origin; })
      .def("dumps", [](const PiecewisePotential& m) {
        std::ostringstream out;
        write_potential(out, m);
        return out.str();
      })
      .def_static("loads", [](const std::string& text) {
        std::istringstream in(text);
        return read_potential(in);
      });
  mod.def("smooth_md", &smooth_md, py::arg("params"), py::arg("trunc") = Truncation{});
  mod.def("step_tilde", &step_tilde, py::arg("params"), py::arg("trunc") = Truncation{});
  mod.def("step_bar", &step_bar, py::arg("params"), py::arg("trunc") = Truncation{});
  mod.def("zero_potential", &zero_potential, py::arg("a") = 0.5, py::arg("b") = 0.5);
  mod.def("linear_potential", &linear_potential, py::arg("slope"));
  mod.def("fold", &fold, py::arg("m"), py::arg("z"));
  mod.def("sup_distance", &sup_distance);

  py::class_<Coefficient>(mod, "Coefficient")
      .def("__call__", &Coefficient::operator())
      .def_readonly("min", &Coefficient::min)
      .def_readonly("max", &Coefficient::max)
      .def_readonly("breakpoints", &Coefficient::breakpoints)
      .def_readonly("description", &Coefficient::description);
  mod.def("constant_coefficient", &constant_coefficient, py::arg("value"));
  mod.def("desk_profile", &desk_profile, py::arg("a"), py::arg("b"), py::arg("c_out"), py::arg("c_in") = 1.0,
          py::arg("ramp") = -1.0);
  mod.def("piecewise_linear", &piecewise_linear, py::arg("xs"), py::arg("ys"),
          py::arg("description") = "piecewise-linear");

  py::class_<Mesh>(mod, "Mesh")
      .def_readonly("nodes", &Mesh::nodes)
      .def("__len__", &Mesh::size)
      .def("min_spacing", &Mesh::min_spacing);
  mod.def(
      "build_mesh",
      [](const PiecewisePotential& m, int p_min, std::size_t cap, std::size_t base_intervals,
         std::vector<double> extra_breaks) {
        MeshOptions mo;
        mo.p_min = p_min;
        mo.cap = cap;
        mo.base_intervals = base_intervals;
        mo.extra_breaks = std::move(extra_breaks);
        return build_mesh(m, mo);
      },
      py::arg("m"), py::arg("p_min") = 8, py::arg("cap") = 2'000'000, py::arg("base_intervals") = 0,
      py::arg("extra_breaks") = std::vector<double>{});

  py::class_<EigenResult>(mod, "EigenResult")
      .def_readonly("lambda_", &EigenResult::lambda)
      .def_readonly("eigvec", &EigenResult::eigvec)
      .def_readonly("residual", &EigenResult::residual)
      .def_readonly("h_estimate", &EigenResult::h_estimate)
      .def_readonly("lambda_refined", &EigenResult::lambda_refined)
      .def_readonly("lambda_extrapolated", &EigenResult::lambda_extrapolated)
      .def_readonly("nodes", &EigenResult::nodes)
      .def("__repr__", [](const EigenResult& r) {
        std::ostringstream out;
        out.precision(15);
        out << "EigenResult(lambda=" << r.lambda << ", h_estimate=" << r.h_estimate << ", nodes=" << r.nodes << ")";
        return out.str();
      });
  mod.def(
      "principal_eigenvalue",
      [](const PiecewisePotential& m, const Coefficient& c, double s, const Mesh& mesh, bool estimate_error) {
        return principal_eigenvalue(full_problem(m, c, s), mesh, solver_options(estimate_error));
      },
      py::arg("m"), py::arg("c"), py::arg("s"), py::arg("mesh"), py::arg("estimate_error") = true,
      py::call_guard<py::gil_scoped_release>());

  py::class_<ReferencePair>(mod, "ReferencePair")
      .def_readonly("lambda_D", &ReferencePair::lambda_D)
      .def_readonly("lambda_N", &ReferencePair::lambda_N)
      .def_readonly("h_estimate_D", &ReferencePair::h_estimate_D)
      .def_readonly("h_estimate_N", &ReferencePair::h_estimate_N)
      .def_readonly("extrapolated_D", &ReferencePair::extrapolated_D)
      .def_readonly("extrapolated_N", &ReferencePair::extrapolated_N);
  mod.def(
      "reference_pair",
      [](double a, double b, const Coefficient& c, const Mesh& mesh) { return reference_pair(a, b, c, 1, mesh); },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("mesh"), py::call_guard<py::gil_scoped_release>());

  py::class_<Instance>(mod, "Instance")
      .def_readonly("name", &Instance::name)
      .def_readonly("params", &Instance::params)
      .def_readonly("m", &Instance::m)
      .def_readonly("c", &Instance::c)
      .def_readonly("mesh", &Instance::mesh)
      .def_readonly("c_out", &Instance::c_out)
      .def_readonly("lambda_D", &Instance::lambda_D)
      .def_readonly("lambda_N", &Instance::lambda_N);
  mod.def("desk_instance", [] { return desk_instance(); }, py::call_guard<py::gil_scoped_release>());
  mod.def("example_instance", [] { return example_instance(); }, py::call_guard<py::gil_scoped_release>());

  mod.def("geometric_grid", &geometric_grid, py::arg("lo"), py::arg("hi"), py::arg("count"));
  mod.def(
      "sweep",
      [](const PiecewisePotential& m, const Coefficient& c, const std::vector<double>& grid, const Mesh& mesh,
         unsigned threads) {
        SearchOptions so;
        so.threads = threads;
        std::vector<std::pair<double, double>> out;
        for (const SweepPoint& p : sweep(m, c, grid, mesh, so)) out.emplace_back(p.s, p.result.lambda);
        return out;
      },
      py::arg("m"), py::arg("c"), py::arg("grid"), py::arg("mesh"), py::arg("threads") = 0,
      py::call_guard<py::gil_scoped_release>());

  py::class_<StageRecord>(mod, "StageRecord")
      .def_readonly("k", &StageRecord::k)
      .def_property_readonly("regime", [](const StageRecord& st) { return st.regime == Regime::SD ? "S_D" : "S_N"; })
      .def_readonly("target", &StageRecord::target)
      .def_readonly("tol", &StageRecord::tol)
      .def_readonly("s", &StageRecord::s)
      .def_readonly("lambda_", &StageRecord::lambda)
      .def_readonly("fold_point", &StageRecord::fold_point)
      .def_readonly("lambda_next", &StageRecord::lambda_next);
  py::class_<FoldSequence>(mod, "FoldSequence")
      .def_readonly("stages", &FoldSequence::stages)
      .def_readonly("potentials", &FoldSequence::potentials)
      .def_readonly("lambda_D", &FoldSequence::lambda_D)
      .def_readonly("lambda_N", &FoldSequence::lambda_N)
      .def_readonly("mesh", &FoldSequence::mesh)
      .def("report", [](const FoldSequence& seq) {
        std::ostringstream out;
        write_fold_report(out, seq);
        return out.str();
      });
  mod.def(
      "construct_divergent",
      [](const Instance& inst, int stages, int start_fold_level) {
        FoldOptions fo;
        fo.stages = stages;
        fo.start_fold_level = start_fold_level;
        return construct_divergent(inst, fo);
      },
      py::arg("instance"), py::arg("stages") = 3, py::arg("start_fold_level") = -1,
      py::call_guard<py::gil_scoped_release>());

  py::class_<ClauseReport>(mod, "Clause")
      .def_readonly("name", &ClauseReport::name)
      .def_readonly("passed", &ClauseReport::pass)
      .def_readonly("margin", &ClauseReport::margin)
      .def_readonly("detail", &ClauseReport::detail);
  py::class_<Report>(mod, "Report")
      .def_readonly("clauses", &Report::clauses)
      .def("passed", &Report::pass);
  mod.def("validate_hypotheses", &validate_hypotheses, py::arg("m"), py::arg("c"), py::arg("lambda_D"));

  py::class_<SigmaProfile>(mod, "SigmaProfile")
      .def("__call__", &SigmaProfile::operator())
      .def_readonly("a", &SigmaProfile::a)
      .def_readonly("b", &SigmaProfile::b)
      .def_readonly("breakpoints", &SigmaProfile::breakpoints)
      .def_readonly("description", &SigmaProfile::description);
  mod.def("sigma_example_profile", &sigma_example_profile);
  mod.def("constant_sigma", &constant_sigma, py::arg("value"), py::arg("a") = 0.25, py::arg("b") = 0.75);
  mod.def("shifted_sigma", [](const SigmaProfile& s, double shift) { return shifted(s, shift); });
  mod.def("reaction_coefficient", &reaction_coefficient);
  mod.def("validate_sigma", &validate_sigma, py::arg("sigma"), py::arg("eps"));

  py::class_<SigmaEigenReport>(mod, "SigmaEigenReport")
      .def_readonly("lambda_N", &SigmaEigenReport::lambda_N)
      .def_readonly("lambda_D", &SigmaEigenReport::lambda_D)
      .def_readonly("outside_min", &SigmaEigenReport::outside_min)
      .def_readonly("certificate", &SigmaEigenReport::certificate)
      .def_readonly("certificate_bound", &SigmaEigenReport::certificate_bound)
      .def_readonly("report", &SigmaEigenReport::report);
  mod.def("sigma_eigen_check", &sigma_eigen_check, py::arg("sigma"), py::arg("eps"),
          py::arg("intervals") = 4000, py::call_guard<py::gil_scoped_release>());

  py::class_<RdaSummary>(mod, "RdaSummary")
      .def_property_readonly("times", [](const RdaSummary& r) {
        std::vector<double> t;
        for (const RdaSample& smp : r.series) t.push_back(smp.t);
        return t;
      })
      .def_property_readonly("sup_norm", [](const RdaSummary& r) {
        std::vector<double> v;
        for (const RdaSample& smp : r.series) v.push_back(smp.sup_norm);
        return v;
      })
      .def_readonly("final_state", &RdaSummary::final_state)
      .def_readonly("t_final", &RdaSummary::t_final)
      .def_readonly("dt", &RdaSummary::dt)
      .def_readonly("rate", &RdaSummary::rate)
      .def_readonly("relative_change", &RdaSummary::relative_change)
      .def_readonly("min_value", &RdaSummary::min_value)
      .def_readonly("max_value", &RdaSummary::max_value)
      .def_property_readonly("verdict", [](const RdaSummary& r) { return std::string(to_string(classify(r))); });
  mod.def("default_initial_state", &default_initial_state);
  mod.def(
      "rda_run",
      [](const PiecewisePotential& m, double s, const SigmaProfile& sigma, const std::vector<double>& u0,
         const Mesh& mesh, double t_max, double dt) {
        RdaOptions o;
        o.t_max = t_max;
        o.dt = dt;
        return rda_run(m, s, sigma, u0, mesh, o);
      },
      py::arg("m"), py::arg("s"), py::arg("sigma"), py::arg("u0"), py::arg("mesh"), py::arg("t_max") = 10.0,
      py::arg("dt") = 0.0, py::call_guard<py::gil_scoped_release>());
  mod.def("predicted_verdict", [](double lambda1) { return std::string(to_string(predicted_verdict(lambda1))); });
}
