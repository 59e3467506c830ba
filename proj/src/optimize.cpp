#include "tidalopt/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace tidalopt {

namespace {

constexpr int kLineSearchCap = 60;

double sq(double x) { return x * x; }

double trajectory_grad_norm(const ControlTrajectory& g, NormKind space,
                            const CgOptions& cg) {
  double s = 0.0;
  for (int n = 0; n < g.time.steps; ++n)
    s += g.time.dt() * sq(norm(g.snapshots[n], space, cg));
  return std::sqrt(s);
}

}  // namespace

void OptimizeSettings::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0))
    throw std::invalid_argument("armijo constant must lie in (0,1)");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw std::invalid_argument("backtrack factor must lie in (0,1)");
  if (!(initial_step > 0.0))
    throw std::invalid_argument("initial step must be > 0");
  if (!(relaxation > 0.0 && relaxation <= 1.0))
    throw std::invalid_argument("relaxation must lie in (0,1]");
}

OptimizeResult minimize_control(const CostSpec& spec,
                                const ControlTrajectory& init,
                                const OptimizeSettings& settings,
                                const ModelBundle& bundle) {
  settings.validate();
  if (spec.kind == CostKind::assimilation)
    throw std::invalid_argument("assimilation uses assimilate_initial");
  const NormKind space =
      spec.control_in_l2() ? NormKind::L2 : NormKind::Hminus1;

  OptimizeResult res;
  res.control = init;
  GradientResult state = reduced_gradient(res.control, spec, bundle);
  double cost = eval_cost(state.trajectory, res.control, spec, bundle.cg);
  double gnorm = trajectory_grad_norm(state.gradient, space, bundle.cg);
  const double gscale = std::max(1.0, gnorm);
  res.trace.records.push_back(
      {0, cost, gnorm,
       pontryagin_residual(res.control, state.adjoint, spec, bundle.cg), 0.0});

  auto evaluate = [&](const ControlTrajectory& c) {
    StateTrajectory t =
        solve_forward(bundle.u_init, bundle.xi_init, c, bundle.forcing,
                      bundle.params, bundle.bathy, bundle.w0, bundle.cg);
    return eval_cost(t, c, spec, bundle.cg);
  };

  for (int it = 1; it <= settings.max_iters; ++it) {
    if (gnorm <= settings.grad_tol * gscale) {
      res.trace.converged = true;
      break;
    }
    double step;
    ControlTrajectory candidate = res.control;
    if (settings.strategy == DescentStrategy::fixed_point) {
      // U <- (1-s)U + s*laplacian(p) == U - s*(Riesz gradient) in both
      // control geometries
      step = settings.relaxation;
      for (int n = 0; n < candidate.time.steps; ++n)
        axpy(-step, state.gradient.snapshots[n], candidate.snapshots[n]);
    } else {
      step = settings.initial_step;
      bool accepted = false;
      for (int trial = 0; trial < kLineSearchCap; ++trial) {
        candidate = res.control;
        for (int n = 0; n < candidate.time.steps; ++n)
          axpy(-step, state.gradient.snapshots[n], candidate.snapshots[n]);
        double trial_cost = evaluate(candidate);
        if (trial_cost <= cost - settings.armijo_c * step * sq(gnorm)) {
          accepted = true;
          break;
        }
        step *= settings.backtrack;
      }
      if (!accepted) {
        res.trace.line_search_failed = true;
        break;
      }
    }
    res.control = std::move(candidate);
    state = reduced_gradient(res.control, spec, bundle);
    cost = eval_cost(state.trajectory, res.control, spec, bundle.cg);
    gnorm = trajectory_grad_norm(state.gradient, space, bundle.cg);
    res.trace.records.push_back(
        {it, cost, gnorm,
         pontryagin_residual(res.control, state.adjoint, spec, bundle.cg),
         step});
  }
  if (!res.trace.converged && gnorm <= settings.grad_tol * gscale)
    res.trace.converged = true;
  res.trajectory = std::move(state.trajectory);
  res.adjoint = std::move(state.adjoint);
  return res;
}

AssimilationResult assimilate_initial(const CostSpec& spec,
                                      const VectorField& guess,
                                      const OptimizeSettings& settings,
                                      const ModelBundle& bundle) {
  settings.validate();
  if (spec.kind != CostKind::assimilation)
    throw std::invalid_argument("assimilate_initial needs assimilation spec");
  if (!check_dirichlet(guess))
    throw std::invalid_argument("initial control must satisfy the boundary");

  AssimilationResult res;
  res.initial_control = guess;
  GradientResult state = reduced_gradient_initial(res.initial_control, spec,
                                                  bundle);
  double cost = eval_cost(state.trajectory, res.initial_control, spec);
  double gnorm = norm(state.initial_gradient, NormKind::L2);
  const double gscale = std::max(1.0, gnorm);
  res.trace.records.push_back(
      {0, cost, gnorm,
       pontryagin_residual_initial(res.initial_control, state.adjoint), 0.0});

  auto evaluate = [&](const VectorField& u0) {
    ControlTrajectory zc =
        ControlTrajectory::zero(bundle.bathy.h.grid, bundle.forcing.time);
    StateTrajectory t =
        solve_forward(u0, bundle.xi_init, zc, bundle.forcing, bundle.params,
                      bundle.bathy, bundle.w0, bundle.cg);
    return eval_cost(t, u0, spec);
  };

  for (int it = 1; it <= settings.max_iters; ++it) {
    if (gnorm <= settings.grad_tol * gscale) {
      res.trace.converged = true;
      break;
    }
    double step;
    VectorField candidate = res.initial_control;
    if (settings.strategy == DescentStrategy::fixed_point) {
      step = settings.relaxation;
      axpy(-step, state.initial_gradient, candidate);
    } else {
      step = settings.initial_step;
      bool accepted = false;
      for (int trial = 0; trial < kLineSearchCap; ++trial) {
        candidate = res.initial_control;
        axpy(-step, state.initial_gradient, candidate);
        double trial_cost = evaluate(candidate);
        if (trial_cost <= cost - settings.armijo_c * step * sq(gnorm)) {
          accepted = true;
          break;
        }
        step *= settings.backtrack;
      }
      if (!accepted) {
        res.trace.line_search_failed = true;
        break;
      }
    }
    res.initial_control = std::move(candidate);
    state = reduced_gradient_initial(res.initial_control, spec, bundle);
    cost = eval_cost(state.trajectory, res.initial_control, spec);
    gnorm = norm(state.initial_gradient, NormKind::L2);
    res.trace.records.push_back(
        {it, cost, gnorm,
         pontryagin_residual_initial(res.initial_control, state.adjoint),
         step});
  }
  if (!res.trace.converged && gnorm <= settings.grad_tol * gscale)
    res.trace.converged = true;
  res.trajectory = std::move(state.trajectory);
  res.adjoint = std::move(state.adjoint);
  return res;
}

UniquenessReport uniqueness_horizon(const StateTrajectory& traj,
                                    const BoundaryFlow& w0,
                                    const PhysicalParams& params,
                                    const Bathymetry& bathy) {
  params.validate();
  w0.validate(bathy.h.grid);
  if (!(traj.time == w0.time))
    throw std::invalid_argument("trajectory / boundary-flow time mismatch");
  const int steps = traj.time.steps;
  const double dt = traj.time.dt();
  const double mu = bathy.mu_max;
  const double coeff = (mu * mu + 2.0) * (1.0 / params.alpha + 1.0) +
                       4.0 / params.alpha + bathy.m_grad;

  UniquenessReport rep;
  rep.threshold = sq(params.alpha) / 8.0;

  std::vector<double> l4(steps + 1);
  for (int n = 0; n <= steps; ++n) {
    VectorField w = traj.u[n] + w0.snapshots[n];
    l4[n] = std::pow(norm(w, NormKind::L4), 4);
  }
  double integral = 0.0;
  rep.lhs.reserve(steps + 1);
  for (int n = 0; n <= steps; ++n) {
    if (n > 0) integral += 0.5 * dt * (l4[n - 1] + l4[n]);
    double lhs = std::exp(2.0 * traj.time.t(n) * coeff + integral);
    rep.lhs.push_back(lhs);
    if (lhs < rep.threshold) {
      rep.certified = true;
      rep.t_u = traj.time.t(n);
    }
  }
  return rep;
}

}  // namespace tidalopt
