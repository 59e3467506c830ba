#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tidalopt/cost.hpp"

using namespace tidalopt;
using namespace testsup;

namespace {

const CgOptions kTight{1e-13, 0};

ModelBundle make_bundle(const Scenario& sc) {
  ModelBundle b{sc.params, sc.bathy,  sc.w0,
                sc.forcing, smooth_bump(sc.grid, 0.15, -0.1),
                ScalarField(sc.grid), JacobianMode::exact, kTight};
  return b;
}

CostSpec make_spec(CostKind kind, const Scenario& sc, std::mt19937& rng) {
  std::vector<VectorField> ud(sc.time.nodes());
  std::vector<ScalarField> xid(sc.time.nodes());
  for (int n = 0; n < sc.time.nodes(); ++n) {
    ud[n] = smooth_bump(sc.grid, 0.1 * std::cos(sc.time.t(n)), 0.05);
    xid[n] = random_scalar(sc.grid, rng, 0.05);
  }
  switch (kind) {
    case CostKind::tracking:
      return CostSpec::tracking(ud, xid);
    case CostKind::dissipation:
      return CostSpec::dissipation(ud, xid, smooth_bump(sc.grid, 0.1, 0.0),
                                   random_scalar(sc.grid, rng, 0.05));
    case CostKind::assimilation:
      return CostSpec::assimilation(ud, xid, smooth_bump(sc.grid, 0.1, 0.0),
                                    random_scalar(sc.grid, rng, 0.05));
    case CostKind::general:
      return CostSpec::general();
  }
  throw std::logic_error("unreachable");
}

double control_dirdot(const ControlTrajectory& a, const ControlTrajectory& b,
                      const CostSpec& spec) {
  double s = 0.0;
  for (int n = 0; n < a.time.steps; ++n) {
    if (spec.control_in_l2())
      s += a.time.dt() * inner(a.snapshots[n], b.snapshots[n]);
    else
      s += a.time.dt() *
           inner(poisson_solve(a.snapshots[n], kTight), b.snapshots[n]);
  }
  return s;
}

// best-over-h relative error of the adjoint directional derivative against
// central finite differences
double fd_relative_error(const ControlTrajectory& control,
                         const ControlTrajectory& dir, const CostSpec& spec,
                         const ModelBundle& bundle) {
  GradientResult res = reduced_gradient(control, spec, bundle);
  double adjoint_dd = control_dirdot(res.gradient, dir, spec);
  double best = 1e300;
  for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
    ControlTrajectory up = control, dn = control;
    for (int n = 0; n < control.time.steps; ++n) {
      axpy(h, dir.snapshots[n], up.snapshots[n]);
      axpy(-h, dir.snapshots[n], dn.snapshots[n]);
    }
    auto evaluate = [&](const ControlTrajectory& c) {
      StateTrajectory t =
          solve_forward(bundle.u_init, bundle.xi_init, c, bundle.forcing,
                        bundle.params, bundle.bathy, bundle.w0, bundle.cg);
      return eval_cost(t, c, spec, bundle.cg);
    };
    double fd = (evaluate(up) - evaluate(dn)) / (2.0 * h);
    best = std::min(best, std::abs(fd - adjoint_dd) /
                              std::max(1e-300, std::abs(adjoint_dd)));
  }
  return best;
}

}  // namespace

TEST_CASE("cost of the zero problem is zero") {
  Scenario sc(12, 8, 0.2);
  StateTrajectory z = StateTrajectory::zero(sc.grid, sc.time);
  ControlTrajectory zc = ControlTrajectory::zero(sc.grid, sc.time);
  CHECK(eval_cost(z, zc, CostSpec::tracking({}, {})) == 0.0);
  CHECK(eval_cost(z, zc,
                  CostSpec::dissipation({}, {}, VectorField(sc.grid, true),
                                        ScalarField(sc.grid))) == 0.0);
  CHECK(eval_cost(z, zc, CostSpec::general()) == 0.0);
  CHECK(eval_cost(z, VectorField(sc.grid, true),
                  CostSpec::assimilation({}, {}, VectorField(sc.grid, true),
                                         ScalarField(sc.grid))) == 0.0);
}

TEST_CASE("effort-only cost matches the eigenfunction closed form") {
  GridSpec g(129, 129);
  TimeGrid t(1.0, 8);
  VectorField u_eig(g, true);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      u_eig.c1[g.index(i, j)] =
          std::sin(M_PI * g.x(i)) * std::sin(M_PI * g.y(j));
  enforce_dirichlet(u_eig);

  StateTrajectory traj = StateTrajectory::zero(g, t);
  ControlTrajectory ctrl = ControlTrajectory::zero(g, t);
  for (int n = 0; n < t.steps; ++n) ctrl.snapshots[n] = u_eig;
  double j_val = eval_cost(traj, ctrl, CostSpec::tracking({}, {}), {1e-12, 0});
  CHECK(j_val == doctest::Approx(1.0 / (16.0 * M_PI * M_PI)).epsilon(0.01));
}

TEST_CASE("targets met exactly: adjoint vanishes and gradient equals U") {
  Scenario sc(16, 16, 0.25);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(3);
  ControlTrajectory u = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    u.snapshots[n] = random_dirichlet(sc.grid, rng, 0.1);
  StateTrajectory traj =
      solve_forward(bundle.u_init, bundle.xi_init, u, sc.forcing, sc.params,
                    sc.bathy, sc.w0, kTight);
  CostSpec spec = CostSpec::tracking(traj.u, traj.xi);
  GradientResult res = reduced_gradient(u, spec, bundle);
  for (int n = 0; n <= sc.time.steps; ++n)
    CHECK(norm(res.adjoint.p[n], NormKind::L2) <= 1e-11);
  for (int n = 0; n < sc.time.steps; ++n)
    CHECK(norm(res.gradient.snapshots[n] - u.snapshots[n], NormKind::L2) <=
          1e-9);
}

TEST_CASE("adjoint gradient matches finite differences for all kinds") {
  Scenario sc(16, 16, 0.25);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(17);
  ControlTrajectory base = ControlTrajectory::zero(sc.grid, sc.time);
  ControlTrajectory dir = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n) {
    base.snapshots[n] = random_dirichlet(sc.grid, rng, 0.05);
    dir.snapshots[n] = random_dirichlet(sc.grid, rng, 1.0);
  }
  for (CostKind kind :
       {CostKind::tracking, CostKind::dissipation, CostKind::general}) {
    CostSpec spec = make_spec(kind, sc, rng);
    double err = fd_relative_error(base, dir, spec, bundle);
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("linear dynamics make the gradient exact to rounding") {
  Scenario sc(16, 16, 0.25, /*r=*/0.0);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(19);
  ControlTrajectory base = ControlTrajectory::zero(sc.grid, sc.time);
  ControlTrajectory dir = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n) {
    base.snapshots[n] = random_dirichlet(sc.grid, rng, 0.05);
    dir.snapshots[n] = random_dirichlet(sc.grid, rng, 1.0);
  }
  CostSpec spec = make_spec(CostKind::tracking, sc, rng);
  CHECK(fd_relative_error(base, dir, spec, bundle) <= 1e-9);
}

TEST_CASE("assimilation gradient matches finite differences") {
  Scenario sc(16, 16, 0.25);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(23);
  CostSpec spec = make_spec(CostKind::assimilation, sc, rng);
  VectorField u0 = smooth_bump(sc.grid, 0.1, -0.05);
  VectorField dir = random_dirichlet(sc.grid, rng);

  GradientResult res = reduced_gradient_initial(u0, spec, bundle);
  double adjoint_dd = inner(res.initial_gradient, dir);
  ControlTrajectory zc = ControlTrajectory::zero(sc.grid, sc.time);
  auto evaluate = [&](const VectorField& init) {
    StateTrajectory t =
        solve_forward(init, bundle.xi_init, zc, bundle.forcing, bundle.params,
                      bundle.bathy, bundle.w0, bundle.cg);
    return eval_cost(t, init, spec);
  };
  double best = 1e300;
  for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
    VectorField up = u0, dn = u0;
    axpy(h, dir, up);
    axpy(-h, dir, dn);
    double fd = (evaluate(up) - evaluate(dn)) / (2.0 * h);
    best = std::min(best, std::abs(fd - adjoint_dd) /
                              std::max(1e-300, std::abs(adjoint_dd)));
  }
  CHECK(best <= 1e-6);
}

TEST_CASE("pontryagin residual vanishes at the fixed point") {
  Scenario sc(16, 16, 0.25);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(29);
  CostSpec spec = make_spec(CostKind::tracking, sc, rng);
  ControlTrajectory u = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    u.snapshots[n] = random_dirichlet(sc.grid, rng, 0.1);
  GradientResult res = reduced_gradient(u, spec, bundle);

  ControlTrajectory fixed = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    fixed.snapshots[n] = laplacian(res.adjoint.p[n]);
  CHECK(pontryagin_residual(fixed, res.adjoint, spec, kTight) <= 1e-12);
  CHECK(pontryagin_residual(u, res.adjoint, spec, kTight) > 1e-3);

  // norm identity: ||laplacian(p)||_{H-1}^2 equals the dirichlet energy
  const VectorField& p = res.adjoint.p[4];
  VectorField lp = laplacian(p);
  double hm = inner(lp, poisson_solve(lp, kTight));
  CHECK(hm == doctest::Approx(inner((-1.0) * lp, p)).epsilon(1e-9));
}

TEST_CASE("hamiltonian gap sign at and away from the fixed point") {
  Scenario sc(12, 12, 0.2);
  ModelBundle bundle = make_bundle(sc);
  std::mt19937 rng(31);
  CostSpec spec = make_spec(CostKind::tracking, sc, rng);
  ControlTrajectory u = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    u.snapshots[n] = random_dirichlet(sc.grid, rng, 0.1);
  GradientResult res = reduced_gradient(u, spec, bundle);
  ControlTrajectory fixed = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    fixed.snapshots[n] = laplacian(res.adjoint.p[n]);
  CHECK(hamiltonian_gap(fixed, res.adjoint, spec, 100, 7, kTight) >= -1e-9);

  // zero adjoint, nonzero control: the minimizer is W = 0, so the gap goes
  // negative (deficiency flagged by the sign)
  AdjointTrajectory zero_adj = solve_adjoint(
      StateTrajectory::zero(sc.grid, sc.time),
      AdjointSourceSpec::zero(sc.grid, sc.time), sc.params, sc.bathy, sc.w0,
      JacobianMode::exact, kTight);
  CHECK(hamiltonian_gap(u, zero_adj, spec, 200, 7, kTight) < 0.0);
}

TEST_CASE("second-order scan is positive when the adjoint vanishes") {
  Scenario sc(12, 12, 0.2);
  ModelBundle bundle = make_bundle(sc);
  bundle.u_init = VectorField(sc.grid, true);
  bundle.forcing = ForcingTrajectory::zero(sc.grid, sc.time);
  bundle.w0 = BoundaryFlow::zero(sc.grid, sc.time);
  CostSpec spec = CostSpec::general();
  ControlTrajectory u_star = ControlTrajectory::zero(sc.grid, sc.time);
  GradientResult res = reduced_gradient(u_star, spec, bundle);
  // zero data: u* = 0, all sources vanish, p = 0
  for (int n = 0; n <= sc.time.steps; ++n)
    CHECK(norm(res.adjoint.p[n], NormKind::L2) == 0.0);

  std::mt19937 rng(37);
  ControlTrajectory delta = ControlTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.steps; ++n)
    delta.snapshots[n] = random_dirichlet(sc.grid, rng, 0.1);
  SecondOrderReport rep = second_order_scan(u_star, res.trajectory,
                                            res.adjoint, delta, spec, bundle,
                                            100, 5);
  CHECK(rep.min_s > 0.0);
  CHECK(rep.max_s >= rep.min_s);
  CHECK(rep.strong_check > 0.0);
  CHECK(rep.pointwise_criterion);  // sup ||p|| = 0
}
