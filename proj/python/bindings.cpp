#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tidalopt/optimize.hpp"
#include "tidalopt/scenario.hpp"
#include "tidalopt/verify.hpp"

namespace py = pybind11;
using namespace tidalopt;

namespace {

// fields cross the boundary as plain numpy copies: (ny, nx) for scalars,
// (2, ny, nx) for vector fields
py::array_t<double> scalar_to_numpy(const ScalarField& f) {
  py::array_t<double> out({f.grid.ny, f.grid.nx});
  std::copy(f.v.begin(), f.v.end(), out.mutable_data());
  return out;
}

void scalar_from_numpy(ScalarField& f, py::array_t<double> a) {
  auto buf = a.unchecked<2>();
  if (buf.shape(0) != f.grid.ny || buf.shape(1) != f.grid.nx)
    throw py::value_error("array shape does not match the grid");
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) f(i, j) = buf(j, i);
}

py::array_t<double> vector_to_numpy(const VectorField& f) {
  py::array_t<double> out({2, f.grid.ny, f.grid.nx});
  double* d = out.mutable_data();
  std::copy(f.c1.begin(), f.c1.end(), d);
  std::copy(f.c2.begin(), f.c2.end(), d + f.grid.size());
  return out;
}

void vector_from_numpy(VectorField& f, py::array_t<double> a) {
  auto buf = a.unchecked<3>();
  if (buf.shape(0) != 2 || buf.shape(1) != f.grid.ny ||
      buf.shape(2) != f.grid.nx)
    throw py::value_error("array shape does not match (2, ny, nx)");
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      f.c1[f.grid.index(i, j)] = buf(0, j, i);
      f.c2[f.grid.index(i, j)] = buf(1, j, i);
    }
  if (f.dirichlet) enforce_dirichlet(f);
  f.dirichlet = check_dirichlet(f);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "controlled shallow-flow dynamics: solvers, adjoints, "
            "optimization and property suites";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<CgFailure>(m, "SolverError");

  py::class_<GridSpec>(m, "Grid")
      .def(py::init<int, int, double, double>(), py::arg("nx"), py::arg("ny"),
           py::arg("lx") = 1.0, py::arg("ly") = 1.0)
      .def_readonly("nx", &GridSpec::nx)
      .def_readonly("ny", &GridSpec::ny)
      .def_readonly("lx", &GridSpec::lx)
      .def_readonly("ly", &GridSpec::ly)
      .def("dx", &GridSpec::dx)
      .def("dy", &GridSpec::dy);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def(py::init<double, int>(), py::arg("t_final"), py::arg("steps"))
      .def_readonly("t_final", &TimeGrid::t_final)
      .def_readonly("steps", &TimeGrid::steps)
      .def("dt", &TimeGrid::dt)
      .def("t", &TimeGrid::t);

  py::class_<PhysicalParams>(m, "Params")
      .def(py::init([](double alpha, double beta, double r) {
             PhysicalParams p{alpha, beta, r, 1.0};
             p.validate();
             return p;
           }),
           py::arg("alpha") = 1.0, py::arg("beta") = 0.0, py::arg("r") = 0.0)
      .def_readwrite("alpha", &PhysicalParams::alpha)
      .def_readwrite("beta", &PhysicalParams::beta)
      .def_readwrite("r", &PhysicalParams::r);

  py::class_<ScalarField>(m, "ScalarField")
      .def(py::init<const GridSpec&>(), py::arg("grid"))
      .def_readonly("grid", &ScalarField::grid)
      .def_property("values", &scalar_to_numpy, &scalar_from_numpy);

  py::class_<VectorField>(m, "VectorField")
      .def(py::init<const GridSpec&, bool>(), py::arg("grid"),
           py::arg("dirichlet") = false)
      .def_readonly("grid", &VectorField::grid)
      .def_readonly("dirichlet", &VectorField::dirichlet)
      .def_property("values", &vector_to_numpy, &vector_from_numpy);

  py::enum_<NormKind>(m, "NormKind")
      .value("L2", NormKind::L2)
      .value("L4", NormKind::L4)
      .value("H1semi", NormKind::H1semi)
      .value("Hminus1", NormKind::Hminus1);
  m.def(
      "norm",
      [](const ScalarField& f, NormKind k) { return norm(f, k); },
      py::arg("field"), py::arg("kind") = NormKind::L2);
  m.def(
      "norm",
      [](const VectorField& f, NormKind k) { return norm(f, k); },
      py::arg("field"), py::arg("kind") = NormKind::L2);

  py::class_<Bathymetry>(m, "Bathymetry")
      .def_static("from_depth", &Bathymetry::from_depth, py::arg("depth"))
      .def_static("constant",
                  [](const GridSpec& g, double depth) {
                    ScalarField h(g);
                    for (double& v : h.v) v = depth;
                    return Bathymetry::from_depth(h);
                  })
      .def_property_readonly("depth",
                             [](const Bathymetry& b) {
                               return scalar_to_numpy(b.h);
                             })
      .def_readonly("lambda_min", &Bathymetry::lambda_min)
      .def_readonly("mu_max", &Bathymetry::mu_max)
      .def_readonly("m_grad", &Bathymetry::m_grad);

  py::class_<BoundaryFlow>(m, "AmbientFlow")
      .def_static("zero", &BoundaryFlow::zero)
      .def_static("uniform", &BoundaryFlow::uniform)
      .def_readonly("snapshots", &BoundaryFlow::snapshots);

  py::class_<ForcingTrajectory>(m, "Forcing")
      .def_static("zero", &ForcingTrajectory::zero)
      .def_readwrite("snapshots", &ForcingTrajectory::snapshots);
  m.def("assemble_forcing", &assemble_forcing, py::arg("tide"), py::arg("w0"),
        py::arg("bathymetry"), py::arg("params"));

  py::class_<ControlTrajectory>(m, "Control")
      .def_static("zero", &ControlTrajectory::zero)
      .def_readwrite("snapshots", &ControlTrajectory::snapshots)
      .def_readonly("time", &ControlTrajectory::time);

  py::class_<StateTrajectory>(m, "StateTrajectory")
      .def_readonly("time", &StateTrajectory::time)
      .def_readonly("u", &StateTrajectory::u)
      .def_readonly("xi", &StateTrajectory::xi);

  py::class_<AdjointTrajectory>(m, "AdjointTrajectory")
      .def_readonly("p", &AdjointTrajectory::p)
      .def_readonly("phi", &AdjointTrajectory::phi)
      .def_readonly("p_initial", &AdjointTrajectory::p_initial);

  m.def(
      "cfl_max_dt",
      [](const GridSpec& g, const Bathymetry& b, double safety) {
        return cfl_max_dt(g, b, safety);
      },
      py::arg("grid"), py::arg("bathymetry"), py::arg("safety") = 0.9);

  py::enum_<JacobianMode>(m, "JacobianMode")
      .value("paper", JacobianMode::paper)
      .value("exact", JacobianMode::exact);

  py::class_<CgOptions>(m, "CgOptions")
      .def(py::init<>())
      .def_readwrite("tol", &CgOptions::tol)
      .def_readwrite("max_iters", &CgOptions::max_iters);

  m.def("solve_forward", &solve_forward, py::arg("u0"), py::arg("xi0"),
        py::arg("control"), py::arg("forcing"), py::arg("params"),
        py::arg("bathymetry"), py::arg("w0"), py::arg("cg") = CgOptions{});

  py::class_<CostSpec>(m, "Cost")
      .def_static("tracking", &CostSpec::tracking, py::arg("u_target"),
                  py::arg("xi_target"))
      .def_static("dissipation", &CostSpec::dissipation, py::arg("u_target"),
                  py::arg("xi_target"), py::arg("u_final"),
                  py::arg("xi_final"))
      .def_static("assimilation", &CostSpec::assimilation,
                  py::arg("u_measured"), py::arg("xi_measured"),
                  py::arg("u_final"), py::arg("xi_final"))
      .def_static("quadratic", [] { return CostSpec::general(); });

  py::class_<ModelBundle>(m, "Model")
      .def(py::init([](PhysicalParams params, Bathymetry bathy,
                       BoundaryFlow w0, ForcingTrajectory forcing,
                       VectorField u_init, ScalarField xi_init,
                       JacobianMode mode) {
             return ModelBundle{std::move(params), std::move(bathy),
                                std::move(w0), std::move(forcing),
                                std::move(u_init), std::move(xi_init), mode,
                                CgOptions{1e-12, 0}};
           }),
           py::arg("params"), py::arg("bathymetry"), py::arg("w0"),
           py::arg("forcing"), py::arg("u_init"), py::arg("xi_init"),
           py::arg("mode") = JacobianMode::exact)
      .def_readwrite("mode", &ModelBundle::mode);

  m.def(
      "eval_cost",
      [](const StateTrajectory& traj, const ControlTrajectory& c,
         const CostSpec& spec) { return eval_cost(traj, c, spec); },
      py::arg("trajectory"), py::arg("control"), py::arg("cost"));

  py::class_<GradientResult>(m, "GradientResult")
      .def_readonly("trajectory", &GradientResult::trajectory)
      .def_readonly("adjoint", &GradientResult::adjoint)
      .def_readonly("gradient", &GradientResult::gradient)
      .def_readonly("initial_gradient", &GradientResult::initial_gradient);
  m.def("reduced_gradient", &reduced_gradient, py::arg("control"),
        py::arg("cost"), py::arg("model"));

  py::enum_<DescentStrategy>(m, "DescentStrategy")
      .value("armijo", DescentStrategy::armijo)
      .value("fixed_point", DescentStrategy::fixed_point);

  py::class_<OptimizeSettings>(m, "OptimizeSettings")
      .def(py::init<>())
      .def_readwrite("max_iters", &OptimizeSettings::max_iters)
      .def_readwrite("grad_tol", &OptimizeSettings::grad_tol)
      .def_readwrite("initial_step", &OptimizeSettings::initial_step)
      .def_readwrite("relaxation", &OptimizeSettings::relaxation)
      .def_readwrite("strategy", &OptimizeSettings::strategy);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iter", &IterationRecord::iter)
      .def_readonly("cost", &IterationRecord::cost)
      .def_readonly("grad_norm", &IterationRecord::grad_norm)
      .def_readonly("pontryagin", &IterationRecord::pontryagin);

  py::class_<OptimizeTrace>(m, "OptimizeTrace")
      .def_readonly("records", &OptimizeTrace::records)
      .def_readonly("converged", &OptimizeTrace::converged);

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_readonly("control", &OptimizeResult::control)
      .def_readonly("trajectory", &OptimizeResult::trajectory)
      .def_readonly("trace", &OptimizeResult::trace);
  m.def("minimize_control", &minimize_control, py::arg("cost"),
        py::arg("init"), py::arg("settings"), py::arg("model"));

  py::class_<AssimilationResult>(m, "AssimilationResult")
      .def_readonly("initial_control", &AssimilationResult::initial_control)
      .def_readonly("trajectory", &AssimilationResult::trajectory)
      .def_readonly("trace", &AssimilationResult::trace);
  m.def("assimilate_initial", &assimilate_initial, py::arg("cost"),
        py::arg("guess"), py::arg("settings"), py::arg("model"));

  py::class_<UniquenessReport>(m, "UniquenessReport")
      .def_readonly("certified", &UniquenessReport::certified)
      .def_readonly("t_u", &UniquenessReport::t_u)
      .def_readonly("threshold", &UniquenessReport::threshold)
      .def_readonly("lhs", &UniquenessReport::lhs);
  m.def("uniqueness_horizon", &uniqueness_horizon, py::arg("trajectory"),
        py::arg("w0"), py::arg("params"), py::arg("bathymetry"));

  py::class_<PropertyReport>(m, "PropertyReport")
      .def_readonly("name", &PropertyReport::name)
      .def_readonly("trials", &PropertyReport::trials)
      .def_readonly("worst_margin", &PropertyReport::worst_margin)
      .def_readonly("tolerance", &PropertyReport::tolerance)
      .def_readonly("passed", &PropertyReport::pass)
      .def_readonly("constant", &PropertyReport::constant);
  m.def("operator_property_suite", &operator_property_suite, py::arg("model"),
        py::arg("trials") = 100, py::arg("seed") = 0);
  m.def("inequality_suite", &inequality_suite, py::arg("grid"),
        py::arg("trials") = 20, py::arg("seed") = 0);

  m.def("read_scalar_field", &read_scalar_field, py::arg("path"));
  m.def("read_vector_field", &read_vector_field, py::arg("path"));
  m.def(
      "write_field",
      [](const std::string& path, const ScalarField& f) {
        write_field(path, f);
      },
      py::arg("path"), py::arg("field"));
  m.def(
      "write_field",
      [](const std::string& path, const VectorField& f) {
        write_field(path, f);
      },
      py::arg("path"), py::arg("field"));

  m.def(
      "run_scenario",
      [](const std::string& subcommand, const std::string& config_path) {
        return run_scenario(subcommand, parse_config(config_path));
      },
      py::arg("subcommand"), py::arg("config_path"),
      "config-driven pipeline; returns the process-style exit code");
}
