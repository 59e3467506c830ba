#pragma once

#include <functional>
#include <vector>

#include "tidalopt/tangent_adjoint.hpp"

namespace tidalopt {

enum class CostKind { tracking, dissipation, assimilation, general };

/// Plug-in integrands for the general cost: running state terms g(t,u) and
/// h(t,xi), control term l(U), with first and second Gateaux derivatives.
/// The shipped instance is the quadratic one: g = 1/2||u||^2, h = 1/2||xi||^2,
/// l = 1/2||U||^2 (all L2).
struct GeneralPlugins {
  std::function<double(double, const VectorField&)> g_eval;
  std::function<VectorField(double, const VectorField&)> g_grad;
  std::function<VectorField(double, const VectorField&, const VectorField&)>
      g_hess;  // g_uu(t, base) applied to a direction
  std::function<double(double, const ScalarField&)> h_eval;
  std::function<ScalarField(double, const ScalarField&)> h_grad;
  std::function<ScalarField(double, const ScalarField&, const ScalarField&)>
      h_hess;
  std::function<double(const VectorField&)> l_eval;
  std::function<VectorField(const VectorField&)> l_grad;
  std::function<VectorField(const VectorField&, const VectorField&)> l_hess;

  static GeneralPlugins quadratic();
};

/// Which functional is minimized, with its target data. Empty target vectors
/// mean zero targets. Control penalty space: H^-1 for tracking/dissipation,
/// L2 for general, L2 on the initial field for assimilation.
struct CostSpec {
  CostKind kind = CostKind::tracking;
  std::vector<VectorField> u_target;    // running, steps+1 when present
  std::vector<ScalarField> xi_target;   // running, steps+1 when present
  VectorField u_target_final;           // dissipation / assimilation
  ScalarField xi_target_final;
  GeneralPlugins plugins;               // general only

  static CostSpec tracking(std::vector<VectorField> u_d,
                           std::vector<ScalarField> xi_d);
  static CostSpec dissipation(std::vector<VectorField> u_d,
                              std::vector<ScalarField> xi_d,
                              VectorField u_d_final, ScalarField xi_d_final);
  static CostSpec assimilation(std::vector<VectorField> u_m,
                               std::vector<ScalarField> xi_m,
                               VectorField u_m_final, ScalarField xi_m_final);
  static CostSpec general(GeneralPlugins plugins = GeneralPlugins::quadratic());

  bool control_in_l2() const {
    return kind == CostKind::assimilation || kind == CostKind::general;
  }
  bool has_terminal() const {
    return kind == CostKind::dissipation || kind == CostKind::assimilation;
  }
  VectorField target_u(int n, const GridSpec& g) const;
  ScalarField target_xi(int n, const GridSpec& g) const;
};

/// Everything a reduced-cost evaluation needs besides the control.
struct ModelBundle {
  PhysicalParams params;
  Bathymetry bathy;
  BoundaryFlow w0;
  ForcingTrajectory forcing;
  VectorField u_init;    // ignored for assimilation (control is u(0))
  ScalarField xi_init;
  JacobianMode mode = JacobianMode::exact;
  CgOptions cg;
};

/// Trapezoid-in-time evaluation of the active functional.
double eval_cost(const StateTrajectory& traj, const ControlTrajectory& control,
                 const CostSpec& spec, const CgOptions& cg = {});
double eval_cost(const StateTrajectory& traj, const VectorField& init_control,
                 const CostSpec& spec);  // assimilation

/// The backward-system sources matching d(state cost)/d(state).
AdjointSourceSpec adjoint_sources(const StateTrajectory& traj,
                                  const CostSpec& spec);

struct GradientResult {
  StateTrajectory trajectory;
  AdjointTrajectory adjoint;
  ControlTrajectory gradient;       // distributed kinds
  VectorField initial_gradient;     // assimilation
};

/// Forward + adjoint solve, returning the Riesz gradient in the control
/// space: U - laplacian(p) in H^-1, l_U(U) + p in L2, U0 + p(0) for
/// assimilation.
GradientResult reduced_gradient(const ControlTrajectory& control,
                                const CostSpec& spec,
                                const ModelBundle& bundle);
GradientResult reduced_gradient_initial(const VectorField& init_control,
                                        const CostSpec& spec,
                                        const ModelBundle& bundle);

/// Normalized distance to the first-order fixed point (U = laplacian(p) in
/// H^-1 geometry, U = -p in L2, U0 = -p(0) for assimilation).
double pontryagin_residual(const ControlTrajectory& control,
                           const AdjointTrajectory& adjoint,
                           const CostSpec& spec, const CgOptions& cg = {});
double pontryagin_residual_initial(const VectorField& init_control,
                                   const AdjointTrajectory& adjoint);

/// Worst-case (most negative) slack of the pointwise-in-time minimum
/// principle 1/2||U*||^2 + <p,U*> <= 1/2||W||^2 + <p,W> over m random
/// candidates W. Nonnegative at an optimum.
double hamiltonian_gap(const ControlTrajectory& control,
                       const AdjointTrajectory& adjoint, const CostSpec& spec,
                       int samples, unsigned seed, const CgOptions& cg = {});

struct SecondOrderReport {
  double min_s = 0.0;       // min of S(theta) over the scan
  double max_s = 0.0;
  double strong_check = 0.0;  // positive terms minus (4r/lambda) coupling
  double sup_p_l2 = 0.0;
  double sup_p_threshold = 0.0;  // lambda/(4r); infinity when r = 0
  bool pointwise_criterion = false;
  int tuples = 0;
};

/// Curvature scan over theta in [0,1]^4 on an 11-point grid thinned to
/// `samples` latin-hypercube tuples; evaluates the second-order form at the
/// feasible difference generated by perturbing the control by delta_u.
SecondOrderReport second_order_scan(const ControlTrajectory& optimum,
                                    const StateTrajectory& opt_traj,
                                    const AdjointTrajectory& opt_adjoint,
                                    const ControlTrajectory& delta_u,
                                    const CostSpec& spec,
                                    const ModelBundle& bundle,
                                    int samples = 500, unsigned seed = 0);

}  // namespace tidalopt
