#pragma once

#include <vector>

#include "tidalopt/model.hpp"

namespace tidalopt {

/// Time-indexed snapshots of the state (u, xi). u snapshots are dirichlet.
struct StateTrajectory {
  TimeGrid time;
  std::vector<VectorField> u;    // steps+1 snapshots
  std::vector<ScalarField> xi;   // steps+1 snapshots

  static StateTrajectory zero(const GridSpec& g, const TimeGrid& t);
};

/// Time-distributed control: one field per step (U_n drives step n -> n+1),
/// so `steps` snapshots. All fields dirichlet.
struct ControlTrajectory {
  TimeGrid time;
  std::vector<VectorField> snapshots;  // size steps

  static ControlTrajectory zero(const GridSpec& g, const TimeGrid& t);
  void validate(const GridSpec& g) const;
};

/// Largest stable step for the explicit gravity-wave coupling:
/// safety * min(dx,dy) / sqrt(2 * mu_max).
double cfl_max_dt(const GridSpec& g, const Bathymetry& bathy, double safety);

/// One step of the semi-implicit scheme:
///   (I + dt*alpha*(-laplacian)) u' = u + dt*(-beta*rotate(u) - B(u)
///                                            - grad(xi) + f + U)
///   xi' = xi - dt*div(h u')        (div = -gradient^T, u' dirichlet)
void step_forward(const VectorField& u_n, const ScalarField& xi_n,
                  const VectorField& control_n, const VectorField& forcing_n,
                  const PhysicalParams& params, const Bathymetry& bathy,
                  const VectorField& w0_n, double dt, VectorField& u_next,
                  ScalarField& xi_next, const CgOptions& cg = {});

StateTrajectory solve_forward(const VectorField& u0, const ScalarField& xi0,
                              const ControlTrajectory& control,
                              const ForcingTrajectory& forcing,
                              const PhysicalParams& params,
                              const Bathymetry& bathy, const BoundaryFlow& w0,
                              const CgOptions& cg = {});

/// Max over steps of the discrete residual of the energy identity
///   d/dt(||sqrt(h) u||^2 + ||xi||^2) + 2<A u + B(u) - f, h u> = 0
/// for an uncontrolled trajectory (centered time differences). O(dt).
double energy_equality_residual(const StateTrajectory& traj,
                                const PhysicalParams& params,
                                const Bathymetry& bathy,
                                const BoundaryFlow& w0,
                                const ForcingTrajectory& forcing);

/// Margins RHS - LHS of the a-priori energy bound at every node:
///   LHS_n = ||u_n||^2 + ||xi_n||^2 + alpha*sum dt ||grad u||^2
///   RHS_n = (||u_0||^2 + ||xi_0||^2 + (r/lambda)*sum dt ||w0||^4_{L4}
///            + sum dt ||f||^2_{H-1} + sum dt ||U||^2_{H-1}) * exp(K t_n)
std::vector<double> energy_bound_check(const StateTrajectory& traj,
                                       const PhysicalParams& params,
                                       const Bathymetry& bathy,
                                       const BoundaryFlow& w0,
                                       const ForcingTrajectory& forcing,
                                       const ControlTrajectory& control);

}  // namespace tidalopt
