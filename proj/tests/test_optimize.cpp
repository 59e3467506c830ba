#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tidalopt/optimize.hpp"

using namespace tidalopt;
using namespace testsup;

namespace {

const CgOptions kTight{1e-12, 0};

double sq(double x) { return x * x; }

ModelBundle make_bundle(const Scenario& sc) {
  return ModelBundle{sc.params, sc.bathy,  sc.w0,
                     sc.forcing, smooth_bump(sc.grid, 0.15, -0.1),
                     ScalarField(sc.grid), JacobianMode::exact, kTight};
}

CostSpec tracking_toward(const Scenario& sc, double amp) {
  std::vector<VectorField> ud(sc.time.nodes());
  std::vector<ScalarField> xid(sc.time.nodes());
  for (int n = 0; n < sc.time.nodes(); ++n) {
    ud[n] = smooth_bump(sc.grid, amp, amp / 2.0);
    xid[n] = ScalarField(sc.grid);
  }
  return CostSpec::tracking(std::move(ud), std::move(xid));
}

}  // namespace

TEST_CASE("already optimal: targets met by the zero control") {
  Scenario sc(12, 8, 0.2);
  ModelBundle bundle = make_bundle(sc);
  ControlTrajectory zero = ControlTrajectory::zero(sc.grid, sc.time);
  StateTrajectory free_run =
      solve_forward(bundle.u_init, bundle.xi_init, zero, sc.forcing, sc.params,
                    sc.bathy, sc.w0, kTight);
  CostSpec spec = CostSpec::tracking(free_run.u, free_run.xi);
  OptimizeSettings settings;
  settings.max_iters = 5;
  OptimizeResult res = minimize_control(spec, zero, settings, bundle);
  CHECK(res.trace.converged);
  CHECK(res.trace.records.size() == 1);  // stopped at iteration 0
  for (int n = 0; n < sc.time.steps; ++n)
    CHECK(norm(res.control.snapshots[n], NormKind::L2) == 0.0);
}

TEST_CASE("linear dynamics: residual below 1e-6 and strategies agree") {
  Scenario sc(16, 16, 0.25, /*r=*/0.0);
  ModelBundle bundle = make_bundle(sc);
  CostSpec spec = tracking_toward(sc, 0.1);
  ControlTrajectory zero = ControlTrajectory::zero(sc.grid, sc.time);

  OptimizeSettings armijo;
  armijo.max_iters = 60;
  armijo.grad_tol = 1e-9;
  OptimizeResult a = minimize_control(spec, zero, armijo, bundle);
  CHECK(a.trace.records.back().pontryagin <= 1e-6);
  for (size_t k = 1; k < a.trace.records.size(); ++k)
    CHECK(a.trace.records[k].cost <= a.trace.records[k - 1].cost);

  OptimizeSettings fp = armijo;
  fp.strategy = DescentStrategy::fixed_point;
  fp.relaxation = 0.8;
  fp.max_iters = 120;
  OptimizeResult f = minimize_control(spec, zero, fp, bundle);
  CHECK(f.trace.records.back().pontryagin <= 1e-6);

  double dist_sq = 0.0, scale_sq = 0.0;
  for (int n = 0; n < sc.time.steps; ++n) {
    VectorField d = a.control.snapshots[n] - f.control.snapshots[n];
    dist_sq += sq(norm(d, NormKind::Hminus1, kTight));
    scale_sq += sq(norm(a.control.snapshots[n], NormKind::Hminus1, kTight));
  }
  CHECK(std::sqrt(dist_sq) <= 1e-6 * std::max(1.0, std::sqrt(scale_sq)));
}

TEST_CASE("nonlinear tracking: monotone cost, residual below 1e-3") {
  Scenario sc(16, 16, 0.25, /*r=*/0.5);
  ModelBundle bundle = make_bundle(sc);
  CostSpec spec = tracking_toward(sc, 0.1);
  OptimizeSettings settings;
  settings.max_iters = 50;
  settings.grad_tol = 1e-10;
  OptimizeResult res = minimize_control(
      spec, ControlTrajectory::zero(sc.grid, sc.time), settings, bundle);
  REQUIRE(res.trace.records.size() > 2);
  for (size_t k = 1; k < res.trace.records.size(); ++k)
    CHECK(res.trace.records[k].cost <= res.trace.records[k - 1].cost);
  CHECK(res.trace.records.back().pontryagin <= 1e-3);
  CHECK(!res.trace.line_search_failed);
}

TEST_CASE("assimilation twins") {
  Scenario sc(16, 16, 0.25, /*r=*/0.5);
  ModelBundle bundle = make_bundle(sc);
  ControlTrajectory zero = ControlTrajectory::zero(sc.grid, sc.time);

  auto measure = [&](const VectorField& u0_true) {
    return solve_forward(u0_true, bundle.xi_init, zero, sc.forcing, sc.params,
                         sc.bathy, sc.w0, kTight);
  };

  OptimizeSettings settings;
  settings.max_iters = 40;
  settings.grad_tol = 1e-10;

  SUBCASE("zero truth recovered exactly from the zero guess") {
    StateTrajectory truth = measure(VectorField(sc.grid, true));
    CostSpec spec = CostSpec::assimilation(truth.u, truth.xi, truth.u.back(),
                                           truth.xi.back());
    AssimilationResult res = assimilate_initial(
        spec, VectorField(sc.grid, true), settings, bundle);
    CHECK(res.trace.converged);
    CHECK(norm(res.initial_control, NormKind::L2) <= 1e-8);
    // gradient U0 + p(0) vanishes at the optimum
    GradientResult g = reduced_gradient_initial(res.initial_control, spec,
                                                bundle);
    CHECK(norm(g.initial_gradient, NormKind::L2) <= 1e-8);
  }

  SUBCASE("nonzero truth: twin run beats the zero guess by 10x") {
    // a deep, weakly viscous basin keeps the initial signal observable long
    // enough for the data term to dominate the L2 penalty on U0
    Scenario deep(12, 400, 8.0, /*r=*/0.0, /*beta=*/0.0);
    deep.params.alpha = 1e-3;
    ScalarField h(deep.grid);
    for (double& v : h.v) v = 5.0;
    deep.bathy = Bathymetry::from_depth(h);
    deep.w0 = BoundaryFlow::zero(deep.grid, deep.time);
    deep.forcing = ForcingTrajectory::zero(deep.grid, deep.time);
    ModelBundle db{deep.params, deep.bathy, deep.w0, deep.forcing,
                   VectorField(deep.grid, true), ScalarField(deep.grid),
                   JacobianMode::exact, kTight};
    ControlTrajectory zc = ControlTrajectory::zero(deep.grid, deep.time);
    StateTrajectory truth =
        solve_forward(smooth_bump(deep.grid, 0.2, -0.1), db.xi_init, zc,
                      deep.forcing, deep.params, deep.bathy, deep.w0, kTight);
    CostSpec spec = CostSpec::assimilation(truth.u, truth.xi, truth.u.back(),
                                           truth.xi.back());
    double zero_cost = eval_cost(
        solve_forward(VectorField(deep.grid, true), db.xi_init, zc,
                      deep.forcing, deep.params, deep.bathy, deep.w0, kTight),
        VectorField(deep.grid, true), spec);
    OptimizeSettings deep_settings;
    deep_settings.max_iters = 80;
    deep_settings.grad_tol = 1e-10;
    AssimilationResult res = assimilate_initial(
        spec, VectorField(deep.grid, true), deep_settings, db);
    CHECK(res.trace.records.back().cost <= 0.10 * zero_cost);
  }
}

TEST_CASE("uniqueness horizon closed forms on the zero trajectory") {
  GridSpec g(16, 16);
  ScalarField depth(g);
  for (double& v : depth.v) v = 1.0;  // mu = 1, M = 0
  Bathymetry bathy = Bathymetry::from_depth(depth);
  BoundaryFlow w0 = BoundaryFlow::zero(g, TimeGrid(0.5, 500));
  StateTrajectory traj = StateTrajectory::zero(g, TimeGrid(0.5, 500));
  const double dt = traj.time.dt();

  SUBCASE("alpha = 4") {
    UniquenessReport rep = uniqueness_horizon(
        traj, w0, PhysicalParams{4.0, 0.5, 0.5}, bathy);
    CHECK(rep.certified);
    // exponent coefficient 2*4.75 = 9.5, threshold 2
    CHECK(std::abs(rep.t_u - std::log(2.0) / 9.5) <= dt + 1e-12);
  }
  SUBCASE("alpha = 2: threshold below 1, never certified") {
    UniquenessReport rep = uniqueness_horizon(
        traj, w0, PhysicalParams{2.0, 0.5, 0.5}, bathy);
    CHECK(!rep.certified);
  }
  SUBCASE("alpha = 8") {
    UniquenessReport rep = uniqueness_horizon(
        traj, w0, PhysicalParams{8.0, 0.5, 0.5}, bathy);
    CHECK(rep.certified);
    // exponent coefficient 2*3.875 = 7.75, threshold 8
    CHECK(std::abs(rep.t_u - std::log(8.0) / 7.75) <= dt + 1e-12);
  }
}

TEST_CASE("uniqueness horizon is monotone in alpha") {
  Scenario sc(12, 32, 0.5);
  std::mt19937 rng(5);
  StateTrajectory traj = StateTrajectory::zero(sc.grid, sc.time);
  for (int n = 0; n < sc.time.nodes(); ++n)
    traj.u[n] = random_dirichlet(sc.grid, rng, 0.3);
  double prev = -1.0;
  for (double alpha : {3.0, 4.5, 9.0}) {
    UniquenessReport rep = uniqueness_horizon(
        traj, sc.w0, PhysicalParams{alpha, sc.params.beta, sc.params.r},
        sc.bathy);
    double t = rep.certified ? rep.t_u : -1.0;
    CHECK(t >= prev);
    prev = t;
  }
}
