#pragma once

#include <optional>

#include "tidalopt/cost.hpp"

namespace tidalopt {

enum class DescentStrategy { armijo, fixed_point };

struct OptimizeSettings {
  int max_iters = 100;
  double grad_tol = 1e-8;       // relative to the first-iterate gradient norm
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  double relaxation = 1.0;      // fixed-point mixing s in (0,1]
  DescentStrategy strategy = DescentStrategy::armijo;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double grad_norm = 0.0;   // control-space trajectory norm of the gradient
  double pontryagin = 0.0;
  double step = 0.0;        // accepted step (0 for the initial record)
};

struct OptimizeTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool line_search_failed = false;
};

struct OptimizeResult {
  ControlTrajectory control;
  StateTrajectory trajectory;
  AdjointTrajectory adjoint;
  OptimizeTrace trace;
};

/// Steepest descent on the reduced cost in the control Riesz geometry
/// (H^-1 for tracking/dissipation, L2 for general). `armijo` backtracks
/// until sufficient decrease; `fixed_point` applies the relaxed update
/// U <- (1-s)U + s*laplacian(p) (resp. -s*p). Aborts with the trace after
/// 60 consecutive line-search rejections.
OptimizeResult minimize_control(const CostSpec& spec,
                                const ControlTrajectory& init,
                                const OptimizeSettings& settings,
                                const ModelBundle& bundle);

struct AssimilationResult {
  VectorField initial_control;
  StateTrajectory trajectory;
  AdjointTrajectory adjoint;
  OptimizeTrace trace;
};

/// Descent on the initial velocity only (the free-surface initial condition
/// stays at bundle.xi_init). Gradient is U0 + p(0) in L2.
AssimilationResult assimilate_initial(const CostSpec& spec,
                                      const VectorField& guess,
                                      const OptimizeSettings& settings,
                                      const ModelBundle& bundle);

struct UniquenessReport {
  bool certified = false;
  double t_u = 0.0;                 // largest certified time node
  double threshold = 0.0;           // alpha^2 / 8
  std::vector<double> lhs;          // smallness functional at each node
};

/// Small-time uniqueness certificate: finds the largest time node T at which
///   exp(2 T [(mu^2+2)(1/alpha+1) + 4/alpha + M]) *
///   exp(int_0^T ||u* + w0||_{L4}^4 dt)  <  alpha^2 / 8
/// holds strictly (trapezoid quadrature for the integral). Not certified when
/// the threshold is <= 1, since the left side starts at 1 and grows.
UniquenessReport uniqueness_horizon(const StateTrajectory& traj,
                                    const BoundaryFlow& w0,
                                    const PhysicalParams& params,
                                    const Bathymetry& bathy);

}  // namespace tidalopt
