#include "tidalopt/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace tidalopt {

namespace {

double trapezoid_weight(int n, int last) {
  return (n == 0 || n == last) ? 0.5 : 1.0;
}

double sq(double x) { return x * x; }

}  // namespace

GeneralPlugins GeneralPlugins::quadratic() {
  GeneralPlugins p;
  p.g_eval = [](double, const VectorField& u) { return 0.5 * inner(u, u); };
  p.g_grad = [](double, const VectorField& u) { return u; };
  p.g_hess = [](double, const VectorField&, const VectorField& v) { return v; };
  p.h_eval = [](double, const ScalarField& s) { return 0.5 * inner(s, s); };
  p.h_grad = [](double, const ScalarField& s) { return s; };
  p.h_hess = [](double, const ScalarField&, const ScalarField& v) { return v; };
  p.l_eval = [](const VectorField& u) { return 0.5 * inner(u, u); };
  p.l_grad = [](const VectorField& u) { return u; };
  p.l_hess = [](const VectorField&, const VectorField& v) { return v; };
  return p;
}

CostSpec CostSpec::tracking(std::vector<VectorField> u_d,
                            std::vector<ScalarField> xi_d) {
  CostSpec s;
  s.kind = CostKind::tracking;
  s.u_target = std::move(u_d);
  s.xi_target = std::move(xi_d);
  return s;
}

CostSpec CostSpec::dissipation(std::vector<VectorField> u_d,
                               std::vector<ScalarField> xi_d,
                               VectorField u_d_final, ScalarField xi_d_final) {
  CostSpec s;
  s.kind = CostKind::dissipation;
  s.u_target = std::move(u_d);
  s.xi_target = std::move(xi_d);
  s.u_target_final = std::move(u_d_final);
  s.xi_target_final = std::move(xi_d_final);
  return s;
}

CostSpec CostSpec::assimilation(std::vector<VectorField> u_m,
                                std::vector<ScalarField> xi_m,
                                VectorField u_m_final, ScalarField xi_m_final) {
  CostSpec s;
  s.kind = CostKind::assimilation;
  s.u_target = std::move(u_m);
  s.xi_target = std::move(xi_m);
  s.u_target_final = std::move(u_m_final);
  s.xi_target_final = std::move(xi_m_final);
  return s;
}

CostSpec CostSpec::general(GeneralPlugins plugins) {
  CostSpec s;
  s.kind = CostKind::general;
  s.plugins = std::move(plugins);
  return s;
}

VectorField CostSpec::target_u(int n, const GridSpec& g) const {
  if (u_target.empty()) return VectorField(g, true);
  return u_target.at(n);
}

ScalarField CostSpec::target_xi(int n, const GridSpec& g) const {
  if (xi_target.empty()) return ScalarField(g);
  return xi_target.at(n);
}

double eval_cost(const StateTrajectory& traj, const ControlTrajectory& control,
                 const CostSpec& spec, const CgOptions& cg) {
  if (spec.kind == CostKind::assimilation)
    throw std::invalid_argument(
        "assimilation cost takes the initial-field control overload");
  const GridSpec& g = traj.u[0].grid;
  const int steps = traj.time.steps;
  const double dt = traj.time.dt();

  double state = 0.0;
  for (int n = 0; n <= steps; ++n) {
    double c = trapezoid_weight(n, steps) * dt;
    switch (spec.kind) {
      case CostKind::tracking: {
        VectorField du = traj.u[n] - spec.target_u(n, g);
        ScalarField dxi = traj.xi[n] - spec.target_xi(n, g);
        state += 0.5 * c * (inner(du, du) + inner(dxi, dxi));
        break;
      }
      case CostKind::dissipation: {
        VectorField du = traj.u[n] - spec.target_u(n, g);
        ScalarField dxi = traj.xi[n] - spec.target_xi(n, g);
        state += 0.5 * c *
                 (sq(norm(du, NormKind::H1semi)) + inner(dxi, dxi));
        break;
      }
      case CostKind::general:
        state += c * (spec.plugins.g_eval(traj.time.t(n), traj.u[n]) +
                      spec.plugins.h_eval(traj.time.t(n), traj.xi[n]));
        break;
      default:
        break;
    }
  }
  if (spec.has_terminal()) {
    VectorField du = traj.u[steps] - spec.u_target_final;
    ScalarField dxi = traj.xi[steps] - spec.xi_target_final;
    state += 0.5 * (inner(du, du) + inner(dxi, dxi));
  }

  double effort = 0.0;
  for (int n = 0; n < steps; ++n) {
    if (spec.kind == CostKind::general)
      effort += dt * spec.plugins.l_eval(control.snapshots[n]);
    else
      effort += 0.5 * dt * sq(norm(control.snapshots[n], NormKind::Hminus1, cg));
  }
  return state + effort;
}

double eval_cost(const StateTrajectory& traj, const VectorField& init_control,
                 const CostSpec& spec) {
  if (spec.kind != CostKind::assimilation)
    throw std::invalid_argument("initial-field overload is assimilation only");
  const GridSpec& g = traj.u[0].grid;
  const int steps = traj.time.steps;
  const double dt = traj.time.dt();
  double state = 0.5 * inner(init_control, init_control);
  for (int n = 0; n <= steps; ++n) {
    double c = trapezoid_weight(n, steps) * dt;
    VectorField du = traj.u[n] - spec.target_u(n, g);
    ScalarField dxi = traj.xi[n] - spec.target_xi(n, g);
    state += 0.5 * c * (inner(du, du) + inner(dxi, dxi));
  }
  VectorField du = traj.u[steps] - spec.u_target_final;
  ScalarField dxi = traj.xi[steps] - spec.xi_target_final;
  state += 0.5 * (inner(du, du) + inner(dxi, dxi));
  return state;
}

AdjointSourceSpec adjoint_sources(const StateTrajectory& traj,
                                  const CostSpec& spec) {
  const GridSpec& g = traj.u[0].grid;
  const int steps = traj.time.steps;
  AdjointSourceSpec src = AdjointSourceSpec::zero(g, traj.time);
  for (int n = 0; n <= steps; ++n) {
    switch (spec.kind) {
      case CostKind::tracking:
      case CostKind::assimilation:
        src.src_u[n] = traj.u[n] - spec.target_u(n, g);
        src.src_xi[n] = traj.xi[n] - spec.target_xi(n, g);
        break;
      case CostKind::dissipation:
        src.src_u[n] = grad_transpose_grad(traj.u[n] - spec.target_u(n, g));
        src.src_xi[n] = traj.xi[n] - spec.target_xi(n, g);
        break;
      case CostKind::general:
        src.src_u[n] = spec.plugins.g_grad(traj.time.t(n), traj.u[n]);
        enforce_dirichlet(src.src_u[n]);
        src.src_xi[n] = spec.plugins.h_grad(traj.time.t(n), traj.xi[n]);
        break;
    }
    enforce_dirichlet(src.src_u[n]);
  }
  if (spec.has_terminal()) {
    src.terminal_p = traj.u[steps] - spec.u_target_final;
    enforce_dirichlet(src.terminal_p);
    src.terminal_phi = traj.xi[steps] - spec.xi_target_final;
  }
  return src;
}

GradientResult reduced_gradient(const ControlTrajectory& control,
                                const CostSpec& spec,
                                const ModelBundle& bundle) {
  if (spec.kind == CostKind::assimilation)
    throw std::invalid_argument(
        "assimilation gradient takes the initial-field overload");
  GradientResult res;
  res.trajectory =
      solve_forward(bundle.u_init, bundle.xi_init, control, bundle.forcing,
                    bundle.params, bundle.bathy, bundle.w0, bundle.cg);
  res.adjoint =
      solve_adjoint(res.trajectory, adjoint_sources(res.trajectory, spec),
                    bundle.params, bundle.bathy, bundle.w0, bundle.mode,
                    bundle.cg);
  res.gradient = control;
  for (int n = 0; n < control.time.steps; ++n) {
    if (spec.kind == CostKind::general) {
      res.gradient.snapshots[n] =
          spec.plugins.l_grad(control.snapshots[n]) + res.adjoint.p[n];
      enforce_dirichlet(res.gradient.snapshots[n]);
    } else {
      res.gradient.snapshots[n] = control.snapshots[n];
      axpy(-1.0, laplacian(res.adjoint.p[n]), res.gradient.snapshots[n]);
    }
  }
  return res;
}

GradientResult reduced_gradient_initial(const VectorField& init_control,
                                        const CostSpec& spec,
                                        const ModelBundle& bundle) {
  if (spec.kind != CostKind::assimilation)
    throw std::invalid_argument("initial-field overload is assimilation only");
  GradientResult res;
  ControlTrajectory zero_ctrl =
      ControlTrajectory::zero(bundle.bathy.h.grid, bundle.forcing.time);
  res.trajectory =
      solve_forward(init_control, bundle.xi_init, zero_ctrl, bundle.forcing,
                    bundle.params, bundle.bathy, bundle.w0, bundle.cg);
  res.adjoint =
      solve_adjoint(res.trajectory, adjoint_sources(res.trajectory, spec),
                    bundle.params, bundle.bathy, bundle.w0, bundle.mode,
                    bundle.cg);
  res.initial_gradient = init_control + res.adjoint.p_initial;
  return res;
}

double pontryagin_residual(const ControlTrajectory& control,
                           const AdjointTrajectory& adjoint,
                           const CostSpec& spec, const CgOptions& cg) {
  const int steps = control.time.steps;
  const double dt = control.time.dt();
  NormKind space = spec.control_in_l2() ? NormKind::L2 : NormKind::Hminus1;
  double num = 0.0, den_u = 0.0, den_t = 0.0;
  for (int n = 0; n < steps; ++n) {
    VectorField target = spec.control_in_l2()
                             ? (-1.0) * adjoint.p[n]
                             : laplacian(adjoint.p[n]);
    VectorField diff = control.snapshots[n] - target;
    num += dt * sq(norm(diff, space, cg));
    den_u += dt * sq(norm(control.snapshots[n], space, cg));
    den_t += dt * sq(norm(target, space, cg));
  }
  double den = std::sqrt(std::max({den_u, den_t, 1e-300}));
  return std::sqrt(num) / den;
}

double pontryagin_residual_initial(const VectorField& init_control,
                                   const AdjointTrajectory& adjoint) {
  VectorField diff = init_control + adjoint.p_initial;
  double den = std::max({norm(init_control, NormKind::L2),
                         norm(adjoint.p_initial, NormKind::L2), 1e-300});
  return norm(diff, NormKind::L2) / den;
}

double hamiltonian_gap(const ControlTrajectory& control,
                       const AdjointTrajectory& adjoint, const CostSpec& spec,
                       int samples, unsigned seed, const CgOptions& cg) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const GridSpec& g = control.snapshots.empty()
                          ? adjoint.p[0].grid
                          : control.snapshots[0].grid;
  NormKind space = spec.control_in_l2() ? NormKind::L2 : NormKind::Hminus1;
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  std::uniform_int_distribution<int> pick(0, control.time.steps - 1);
  std::uniform_real_distribution<double> log_amp(-3.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    int n = pick(rng);
    // candidate amplitudes span several decades so near-zero controls are
    // probed as well as O(1) ones
    double amp = std::pow(10.0, log_amp(rng));
    VectorField w(g);
    for (double& x : w.c1) x = amp * dist(rng);
    for (double& x : w.c2) x = amp * dist(rng);
    enforce_dirichlet(w);
    const VectorField& u = control.snapshots[n];
    const VectorField& p = adjoint.p[n];
    double lhs = 0.5 * sq(norm(u, space, cg)) + inner(p, u);
    double rhs = 0.5 * sq(norm(w, space, cg)) + inner(p, w);
    worst = std::min(worst, rhs - lhs);
  }
  return worst;
}

SecondOrderReport second_order_scan(const ControlTrajectory& optimum,
                                    const StateTrajectory& opt_traj,
                                    const AdjointTrajectory& opt_adjoint,
                                    const ControlTrajectory& delta_u,
                                    const CostSpec& spec,
                                    const ModelBundle& bundle,
                                    int samples, unsigned seed) {
  const GridSpec& g = bundle.bathy.h.grid;
  const int steps = optimum.time.steps;
  const double dt = optimum.time.dt();
  const GeneralPlugins plugins = spec.kind == CostKind::general
                                     ? spec.plugins
                                     : GeneralPlugins::quadratic();

  // feasible difference: forward solve at the perturbed control
  ControlTrajectory shifted = optimum;
  for (int n = 0; n < steps; ++n)
    axpy(1.0, delta_u.snapshots[n], shifted.snapshots[n]);
  StateTrajectory pert =
      solve_forward(bundle.u_init, bundle.xi_init, shifted, bundle.forcing,
                    bundle.params, bundle.bathy, bundle.w0, bundle.cg);
  std::vector<VectorField> du(steps + 1);
  std::vector<ScalarField> dxi(steps + 1);
  for (int n = 0; n <= steps; ++n) {
    du[n] = pert.u[n] - opt_traj.u[n];
    dxi[n] = pert.xi[n] - opt_traj.xi[n];
  }

  // theta grid: 11 values per axis, latin-hypercube thinning
  const int grid_pts = 11;
  std::mt19937 rng(seed);
  std::vector<std::vector<double>> axes(4, std::vector<double>(samples));
  for (auto& axis : axes) {
    for (int s = 0; s < samples; ++s)
      axis[s] = (s % grid_pts) / double(grid_pts - 1);
    std::shuffle(axis.begin(), axis.end(), rng);
  }
  for (auto& axis : axes) {
    axis[0] = 0.0;  // always include the endpoints of the scan
    axis[samples - 1] = 1.0;
  }

  auto friction_coupling = [&](double theta4) {
    // 4 * sum c_n dt <gamma(|u*+theta4 du + w0| - |u*+w0|) du, p>
    double total = 0.0;
    for (int n = 0; n <= steps; ++n) {
      double c = trapezoid_weight(n, steps) * dt;
      const VectorField& base = opt_traj.u[n];
      const VectorField& w0n = bundle.w0.snapshots[n];
      const VectorField& p = opt_adjoint.p[n];
      double acc = 0.0;
      for (size_t k = 0; k < base.c1.size(); ++k) {
        double z1 = base.c1[k] + w0n.c1[k];
        double z2 = base.c2[k] + w0n.c2[k];
        double m0 = std::hypot(z1, z2);
        double m1 = std::hypot(z1 + theta4 * du[n].c1[k],
                               z2 + theta4 * du[n].c2[k]);
        double gamma = bundle.params.r / bundle.bathy.h.v[k];
        acc += gamma * (m1 - m0) *
               (du[n].c1[k] * p.c1[k] + du[n].c2[k] * p.c2[k]);
      }
      total += c * acc * g.dx() * g.dy();
    }
    return 4.0 * total;
  };

  auto curvature = [&](double t1, double t2, double t3) {
    double s1 = 0.0, s2 = 0.0;
    for (int n = 0; n <= steps; ++n) {
      double c = trapezoid_weight(n, steps) * dt;
      double t = opt_traj.time.t(n);
      VectorField ub = opt_traj.u[n];
      axpy(t1, du[n], ub);
      s1 += c * inner(plugins.g_hess(t, ub, du[n]), du[n]);
      ScalarField xib = opt_traj.xi[n];
      axpy(t2, dxi[n], xib);
      s2 += c * inner(plugins.h_hess(t, xib, dxi[n]), dxi[n]);
    }
    double s3 = 0.0;
    for (int n = 0; n < steps; ++n) {
      VectorField ubc = optimum.snapshots[n];
      axpy(t3, delta_u.snapshots[n], ubc);
      s3 += dt * inner(plugins.l_hess(ubc, delta_u.snapshots[n]),
                       delta_u.snapshots[n]);
    }
    return s1 + s2 + s3;
  };

  SecondOrderReport rep;
  rep.tuples = samples;
  rep.min_s = std::numeric_limits<double>::infinity();
  rep.max_s = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    double val = curvature(axes[0][s], axes[1][s], axes[2][s]) -
                 friction_coupling(axes[3][s]);
    rep.min_s = std::min(rep.min_s, val);
    rep.max_s = std::max(rep.max_s, val);
  }

  double coupling_bound = 0.0;
  for (int n = 0; n <= steps; ++n) {
    double c = trapezoid_weight(n, steps) * dt;
    coupling_bound += c * sq(norm(du[n], NormKind::L4)) *
                      norm(opt_adjoint.p[n], NormKind::L2);
  }
  rep.strong_check =
      curvature(0.0, 0.0, 0.0) -
      (4.0 * bundle.params.r / bundle.bathy.lambda_min) * coupling_bound;

  rep.sup_p_l2 = 0.0;
  for (int n = 0; n <= steps; ++n)
    rep.sup_p_l2 = std::max(rep.sup_p_l2,
                            norm(opt_adjoint.p[n], NormKind::L2));
  if (bundle.params.r == 0.0) {
    rep.sup_p_threshold = std::numeric_limits<double>::infinity();
    rep.pointwise_criterion = true;  // vacuous without friction
  } else {
    rep.sup_p_threshold =
        bundle.bathy.lambda_min / (4.0 * bundle.params.r);
    rep.pointwise_criterion = rep.sup_p_l2 <= rep.sup_p_threshold;
  }
  return rep;
}

}  // namespace tidalopt
