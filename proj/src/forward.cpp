#include "tidalopt/forward.hpp"

#include <cmath>

namespace tidalopt {

StateTrajectory StateTrajectory::zero(const GridSpec& g, const TimeGrid& t) {
  StateTrajectory s;
  s.time = t;
  s.u.assign(t.nodes(), VectorField(g, true));
  s.xi.assign(t.nodes(), ScalarField(g));
  return s;
}

ControlTrajectory ControlTrajectory::zero(const GridSpec& g,
                                          const TimeGrid& t) {
  ControlTrajectory c;
  c.time = t;
  c.snapshots.assign(t.steps, VectorField(g, true));
  return c;
}

void ControlTrajectory::validate(const GridSpec& g) const {
  if ((int)snapshots.size() != time.steps)
    throw std::invalid_argument("control snapshot count mismatch");
  for (const VectorField& f : snapshots) {
    if (!(f.grid == g)) throw std::invalid_argument("control grid mismatch");
    if (!check_dirichlet(f))
      throw std::invalid_argument("control must be a dirichlet field");
  }
}

double cfl_max_dt(const GridSpec& g, const Bathymetry& bathy, double safety) {
  if (!(safety > 0.0 && safety <= 1.0))
    throw std::invalid_argument("CFL safety factor must be in (0,1]");
  return safety * std::min(g.dx(), g.dy()) / std::sqrt(2.0 * bathy.mu_max);
}

namespace {

VectorField depth_times(const Bathymetry& bathy, const VectorField& u) {
  VectorField hu(u.grid, u.dirichlet);
  for (size_t k = 0; k < u.c1.size(); ++k) {
    hu.c1[k] = bathy.h.v[k] * u.c1[k];
    hu.c2[k] = bathy.h.v[k] * u.c2[k];
  }
  return hu;
}

}  // namespace

void step_forward(const VectorField& u_n, const ScalarField& xi_n,
                  const VectorField& control_n, const VectorField& forcing_n,
                  const PhysicalParams& params, const Bathymetry& bathy,
                  const VectorField& w0_n, double dt, VectorField& u_next,
                  ScalarField& xi_next, const CgOptions& cg) {
  VectorField rhs = u_n;
  axpy(-dt * params.beta, rotate(u_n), rhs);
  axpy(-dt, b_apply(bathy, params.r, u_n, w0_n), rhs);
  axpy(-dt, gradient(xi_n), rhs);
  axpy(dt, forcing_n, rhs);
  axpy(dt, control_n, rhs);
  u_next = helmholtz_solve(rhs, dt * params.alpha, cg);
  xi_next = xi_n;
  axpy(-dt, divergence(depth_times(bathy, u_next)), xi_next);
}

StateTrajectory solve_forward(const VectorField& u0, const ScalarField& xi0,
                              const ControlTrajectory& control,
                              const ForcingTrajectory& forcing,
                              const PhysicalParams& params,
                              const Bathymetry& bathy, const BoundaryFlow& w0,
                              const CgOptions& cg) {
  params.validate();
  const GridSpec& g = bathy.h.grid;
  if (!(u0.grid == g) || !(xi0.grid == g))
    throw std::invalid_argument("initial data grid mismatch");
  if (!check_dirichlet(u0))
    throw std::invalid_argument("initial velocity must be a dirichlet field");
  control.validate(g);
  forcing.validate(g);
  w0.validate(g);
  if (!(control.time == forcing.time) || !(control.time == w0.time))
    throw std::invalid_argument("time grid mismatch between inputs");
  require_finite(u0, "initial velocity");
  require_finite(xi0, "initial elevation");

  StateTrajectory traj;
  traj.time = control.time;
  traj.u.reserve(traj.time.nodes());
  traj.xi.reserve(traj.time.nodes());
  traj.u.push_back(u0);
  traj.xi.push_back(xi0);
  const double dt = traj.time.dt();
  for (int n = 0; n < traj.time.steps; ++n) {
    VectorField u_next;
    ScalarField xi_next;
    step_forward(traj.u[n], traj.xi[n], control.snapshots[n],
                 forcing.snapshots[n], params, bathy, w0.snapshots[n], dt,
                 u_next, xi_next, cg);
    traj.u.push_back(std::move(u_next));
    traj.xi.push_back(std::move(xi_next));
  }
  return traj;
}

double energy_equality_residual(const StateTrajectory& traj,
                                const PhysicalParams& params,
                                const Bathymetry& bathy,
                                const BoundaryFlow& w0,
                                const ForcingTrajectory& forcing) {
  const int nodes = traj.time.nodes();
  const double dt = traj.time.dt();
  std::vector<double> energy(nodes);
  for (int n = 0; n < nodes; ++n)
    energy[n] = inner(depth_times(bathy, traj.u[n]), traj.u[n]) +
                inner(traj.xi[n], traj.xi[n]);
  double worst = 0.0;
  for (int n = 1; n + 1 < nodes; ++n) {
    VectorField flux = a_apply(params, traj.u[n]);
    axpy(1.0, b_apply(bathy, params.r, traj.u[n], w0.snapshots[n]), flux);
    axpy(-1.0, forcing.snapshots[n], flux);
    double res = (energy[n + 1] - energy[n - 1]) / (2.0 * dt) +
                 2.0 * inner(flux, depth_times(bathy, traj.u[n]));
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

std::vector<double> energy_bound_check(const StateTrajectory& traj,
                                       const PhysicalParams& params,
                                       const Bathymetry& bathy,
                                       const BoundaryFlow& w0,
                                       const ForcingTrajectory& forcing,
                                       const ControlTrajectory& control) {
  const int nodes = traj.time.nodes();
  const double dt = traj.time.dt();
  const double k = stability_k(params, bathy);
  for (int n = 0; n < nodes; ++n) {
    require_finite(traj.u[n], "state velocity");
    require_finite(traj.xi[n], "state elevation");
    require_finite(forcing.snapshots[n], "forcing");
  }

  double grad_sum = 0.0;   // alpha * sum dt ||grad u||^2
  double data_sum = 0.0;   // accumulated data terms of the bracket
  const double base = inner(traj.u[0], traj.u[0]) +
                      inner(traj.xi[0], traj.xi[0]);
  std::vector<double> margins(nodes);
  for (int n = 0; n < nodes; ++n) {
    if (n > 0) {
      double gu = norm(traj.u[n], NormKind::H1semi);
      grad_sum += params.alpha * dt * gu * gu;
      double w4 = norm(w0.snapshots[n], NormKind::L4);
      double fh = norm(forcing.snapshots[n], NormKind::Hminus1);
      data_sum += dt * ((params.r / bathy.lambda_min) * w4 * w4 * w4 * w4 +
                        fh * fh);
      if (n - 1 < (int)control.snapshots.size()) {
        double uh = norm(control.snapshots[n - 1], NormKind::Hminus1);
        data_sum += dt * uh * uh;
      }
    } else {
      double w4 = norm(w0.snapshots[0], NormKind::L4);
      double fh = norm(forcing.snapshots[0], NormKind::Hminus1);
      data_sum += dt * ((params.r / bathy.lambda_min) * w4 * w4 * w4 * w4 +
                        fh * fh);
    }
    double lhs = inner(traj.u[n], traj.u[n]) +
                 inner(traj.xi[n], traj.xi[n]) + grad_sum;
    double rhs = (base + data_sum) * std::exp(k * traj.time.t(n));
    margins[n] = rhs - lhs;
  }
  return margins;
}

}  // namespace tidalopt
