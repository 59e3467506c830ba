#pragma once

#include <vector>

#include "tidalopt/forward.hpp"

namespace tidalopt {

/// Backward (adjoint) trajectory. p[n] for n < steps is the control-pairing
/// field of step n (the exact dual of the control applied over that step),
/// p[steps] is the terminal field; phi[n] covers all nodes. p_initial is the
/// sensitivity with respect to the initial velocity.
struct AdjointTrajectory {
  TimeGrid time;
  std::vector<VectorField> p;     // steps+1
  std::vector<ScalarField> phi;   // steps+1
  VectorField p_initial;
  ScalarField phi_initial;
};

/// Running and terminal sources of the backward system. Running sources are
/// integrated with trapezoid weights on the solver time grid, matching the
/// quadrature of the cost functionals.
struct AdjointSourceSpec {
  std::vector<VectorField> src_u;    // steps+1 nodes (dirichlet)
  std::vector<ScalarField> src_xi;   // steps+1 nodes
  VectorField terminal_p;
  ScalarField terminal_phi;

  static AdjointSourceSpec zero(const GridSpec& g, const TimeGrid& t);
  void validate(const GridSpec& g, const TimeGrid& t) const;
};

/// Exact linearization of solve_forward around `base`, driven by the control
/// direction and an initial perturbation. Output shaped like a state
/// trajectory (w, eta).
StateTrajectory solve_tangent(const StateTrajectory& base,
                              const ControlTrajectory& direction,
                              const VectorField& w_init,
                              const ScalarField& eta_init,
                              const PhysicalParams& params,
                              const Bathymetry& bathy, const BoundaryFlow& w0,
                              JacobianMode mode, const CgOptions& cg = {});

/// Exact transpose of the tangent propagator, stepping backward from the
/// terminal data and accumulating the running sources.
AdjointTrajectory solve_adjoint(const StateTrajectory& base,
                                const AdjointSourceSpec& sources,
                                const PhysicalParams& params,
                                const Bathymetry& bathy,
                                const BoundaryFlow& w0, JacobianMode mode,
                                const CgOptions& cg = {});

struct TaylorReport {
  std::vector<double> taus;
  std::vector<double> residuals;
  double slope = 0.0;           // log-log fit of residual vs tau
  bool exact_to_rounding = false;
};

/// Nonlinear-vs-linearized remainder study:
/// R(tau) = ||S(U+tau V) - S(U) - tau*w|| over the velocity part, combining
/// the max-in-time L2 norm and the time-integrated H1 seminorm.
TaylorReport taylor_test(const VectorField& u0, const ScalarField& xi0,
                         const ControlTrajectory& control,
                         const ControlTrajectory& direction,
                         const std::vector<double>& taus,
                         const ForcingTrajectory& forcing,
                         const PhysicalParams& params, const Bathymetry& bathy,
                         const BoundaryFlow& w0, JacobianMode mode,
                         const CgOptions& cg = {});

/// Relative defect of the pairing identity
///   sum_n c_n dt (<w_n, a_n> + <eta_n, b_n>) + <w_N, p_T> + <eta_N, phi_T>
///   = sum_n dt <U_n, p_n>
/// (c_n trapezoid weights) for a tangent solve driven by U and an adjoint
/// solve driven by the sources.
double duality_check(const StateTrajectory& base,
                     const ControlTrajectory& direction,
                     const AdjointSourceSpec& sources,
                     const PhysicalParams& params, const Bathymetry& bathy,
                     const BoundaryFlow& w0, JacobianMode mode,
                     const CgOptions& cg = {});

}  // namespace tidalopt
