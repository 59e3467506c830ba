#pragma once

#include <vector>

#include "tidalopt/grid.hpp"

namespace tidalopt {

/// Uniform time grid on [0, t_final] with N steps (N+1 nodes).
struct TimeGrid {
  double t_final = 0.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double t_final_, int steps_);

  double dt() const { return t_final / steps; }
  double t(int n) const { return n * dt(); }
  int nodes() const { return steps + 1; }
  bool operator==(const TimeGrid& o) const {
    return t_final == o.t_final && steps == o.steps;
  }
};

struct PhysicalParams {
  double alpha = 1.0;  // horizontal turbulent viscosity
  double beta = 0.0;   // Coriolis parameter
  double r = 0.0;      // bottom friction factor
  double g_accel = 1.0;  // fixed; the scaling absorbs gravity

  void validate() const;
};

/// Depth field with its derived constants: lambda_min = min h, mu_max = max h,
/// m_grad = max |grad h|. Depth must be strictly positive everywhere.
struct Bathymetry {
  ScalarField h;
  double lambda_min = 0.0;
  double mu_max = 0.0;
  double m_grad = 0.0;

  static Bathymetry from_depth(const ScalarField& h);
};

void bathymetry_constants(const ScalarField& h, double& lambda_min,
                          double& mu_max, double& m_grad);

/// Snapshots of the ambient flow w0 on the solver time grid. w0 need not be
/// dirichlet (it carries the boundary data of the physical problem).
struct BoundaryFlow {
  TimeGrid time;
  std::vector<VectorField> snapshots;  // size steps+1

  static BoundaryFlow zero(const GridSpec& g, const TimeGrid& t);
  static BoundaryFlow uniform(const GridSpec& g, const TimeGrid& t, double c1,
                              double c2);
  void validate(const GridSpec& g) const;
};

struct ForcingTrajectory {
  TimeGrid time;
  std::vector<VectorField> snapshots;  // size steps+1

  static ForcingTrajectory zero(const GridSpec& g, const TimeGrid& t);
  void validate(const GridSpec& g) const;
};

/// A u = -alpha*laplacian(u) + beta*rotate(u).
VectorField a_apply(const PhysicalParams& params, const VectorField& u);

/// Transpose of a_apply: -alpha*laplacian(p) - beta*rotate(p).
VectorField a_tilde_apply(const PhysicalParams& params, const VectorField& p);

/// Quadratic bottom friction: with z = u + w0 and gamma = r/h pointwise,
/// B(u) = gamma*|z|*z.
VectorField b_apply(const Bathymetry& bathy, double r, const VectorField& u,
                    const VectorField& w0);

enum class JacobianMode { paper, exact };

/// Friction Jacobian applied to v at base z = u + w0.
///   paper: 2*gamma*|z|*v (the simplified multiplication operator)
///   exact: gamma*(|z|*v + (z.v)z/|z|), 0 where z = 0 (true Jacobian of
///          z -> |z|z; needed for machine-precision tangent/adjoint closure)
/// Both are symmetric and positive semidefinite pointwise.
VectorField b_jacobian_apply(const Bathymetry& bathy, double r,
                             const VectorField& u, const VectorField& w0,
                             const VectorField& v, JacobianMode mode);

/// Builds the reduced-system forcing from the tide force g_tide and the
/// ambient flow:
///   f = g_tide - dw0/dt + grad(int_0^t div(h w0) ds)
///       + alpha*laplacian(w0) - beta*rotate(w0)
/// Time derivative by central differences (one-sided at the endpoints); the
/// time integral by the trapezoid rule.
ForcingTrajectory assemble_forcing(const std::vector<VectorField>& g_tide,
                                   const BoundaryFlow& w0,
                                   const Bathymetry& bathy,
                                   const PhysicalParams& params);

/// Maps the reduced variables back to the physical ones:
///   w = u + w0,  zeta = xi - int_0^t div(h w0) ds (trapezoid).
void reconstruct_physical(const std::vector<VectorField>& u_snaps,
                          const std::vector<ScalarField>& xi_snaps,
                          const BoundaryFlow& w0, const Bathymetry& bathy,
                          std::vector<VectorField>& w_snaps,
                          std::vector<ScalarField>& zeta_snaps);

/// Growth-rate constant of the a-priori energy bound:
///   K = max{1 + M + r/lambda, (2/alpha)(1 + mu^2) + M}.
double stability_k(const PhysicalParams& params, const Bathymetry& bathy);

}  // namespace tidalopt
