#include "tidalopt/model.hpp"

#include <algorithm>
#include <cmath>

namespace tidalopt {

TimeGrid::TimeGrid(double t_final_, int steps_)
    : t_final(t_final_), steps(steps_) {
  if (t_final <= 0) throw std::invalid_argument("time grid needs T > 0");
  if (steps < 1) throw std::invalid_argument("time grid needs N >= 1");
}

void PhysicalParams::validate() const {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
  if (r < 0) throw std::invalid_argument("r must be >= 0");
  if (g_accel != 1.0)
    throw std::invalid_argument("g_accel is fixed to 1 by the scaling");
}

void bathymetry_constants(const ScalarField& h, double& lambda_min,
                          double& mu_max, double& m_grad) {
  require_finite(h, "depth field");
  lambda_min = *std::min_element(h.v.begin(), h.v.end());
  mu_max = *std::max_element(h.v.begin(), h.v.end());
  if (lambda_min <= 0)
    throw std::invalid_argument("depth must be strictly positive everywhere");
  VectorField gh = gradient(h);
  m_grad = 0.0;
  for (size_t k = 0; k < gh.c1.size(); ++k)
    m_grad = std::max(m_grad, std::hypot(gh.c1[k], gh.c2[k]));
}

Bathymetry Bathymetry::from_depth(const ScalarField& h) {
  Bathymetry b;
  b.h = h;
  bathymetry_constants(h, b.lambda_min, b.mu_max, b.m_grad);
  return b;
}

BoundaryFlow BoundaryFlow::zero(const GridSpec& g, const TimeGrid& t) {
  BoundaryFlow w;
  w.time = t;
  w.snapshots.assign(t.nodes(), VectorField(g));
  return w;
}

BoundaryFlow BoundaryFlow::uniform(const GridSpec& g, const TimeGrid& t,
                                   double c1, double c2) {
  BoundaryFlow w = zero(g, t);
  for (VectorField& f : w.snapshots) {
    f.c1.assign(f.c1.size(), c1);
    f.c2.assign(f.c2.size(), c2);
  }
  return w;
}

void BoundaryFlow::validate(const GridSpec& g) const {
  if ((int)snapshots.size() != time.nodes())
    throw std::invalid_argument("ambient flow snapshot count mismatch");
  for (const VectorField& f : snapshots)
    if (!(f.grid == g)) throw std::invalid_argument("ambient flow grid mismatch");
}

ForcingTrajectory ForcingTrajectory::zero(const GridSpec& g,
                                          const TimeGrid& t) {
  ForcingTrajectory f;
  f.time = t;
  f.snapshots.assign(t.nodes(), VectorField(g));
  return f;
}

void ForcingTrajectory::validate(const GridSpec& g) const {
  if ((int)snapshots.size() != time.nodes())
    throw std::invalid_argument("forcing snapshot count mismatch");
  for (const VectorField& f : snapshots)
    if (!(f.grid == g)) throw std::invalid_argument("forcing grid mismatch");
}

VectorField a_apply(const PhysicalParams& params, const VectorField& u) {
  VectorField out = (-params.alpha) * laplacian(u);
  axpy(params.beta, rotate(u), out);
  return out;
}

VectorField a_tilde_apply(const PhysicalParams& params, const VectorField& p) {
  VectorField out = (-params.alpha) * laplacian(p);
  axpy(-params.beta, rotate(p), out);
  return out;
}

VectorField b_apply(const Bathymetry& bathy, double r, const VectorField& u,
                    const VectorField& w0) {
  if (!(u.grid == w0.grid) || !(u.grid == bathy.h.grid))
    throw std::invalid_argument("friction operand grid mismatch");
  VectorField out(u.grid, u.dirichlet && w0.dirichlet);
  for (size_t k = 0; k < u.c1.size(); ++k) {
    double z1 = u.c1[k] + w0.c1[k];
    double z2 = u.c2[k] + w0.c2[k];
    double gm = r / bathy.h.v[k];
    double mag = std::hypot(z1, z2);
    out.c1[k] = gm * mag * z1;
    out.c2[k] = gm * mag * z2;
  }
  return out;
}

VectorField b_jacobian_apply(const Bathymetry& bathy, double r,
                             const VectorField& u, const VectorField& w0,
                             const VectorField& v, JacobianMode mode) {
  if (!(u.grid == w0.grid) || !(u.grid == v.grid) || !(u.grid == bathy.h.grid))
    throw std::invalid_argument("friction operand grid mismatch");
  VectorField out(u.grid, v.dirichlet);
  for (size_t k = 0; k < u.c1.size(); ++k) {
    double z1 = u.c1[k] + w0.c1[k];
    double z2 = u.c2[k] + w0.c2[k];
    double gm = r / bathy.h.v[k];
    double mag = std::hypot(z1, z2);
    if (mode == JacobianMode::paper) {
      out.c1[k] = 2.0 * gm * mag * v.c1[k];
      out.c2[k] = 2.0 * gm * mag * v.c2[k];
    } else if (mag == 0.0) {
      out.c1[k] = 0.0;
      out.c2[k] = 0.0;
    } else {
      double zv = z1 * v.c1[k] + z2 * v.c2[k];
      out.c1[k] = gm * (mag * v.c1[k] + zv * z1 / mag);
      out.c2[k] = gm * (mag * v.c2[k] + zv * z2 / mag);
    }
  }
  return out;
}

namespace {

ScalarField depth_weighted_divergence(const Bathymetry& bathy,
                                      const VectorField& w0) {
  VectorField hw(w0.grid);
  for (size_t k = 0; k < w0.c1.size(); ++k) {
    hw.c1[k] = bathy.h.v[k] * w0.c1[k];
    hw.c2[k] = bathy.h.v[k] * w0.c2[k];
  }
  return divergence_pointwise(hw);
}

// Trapezoid-accumulated int_0^{t_n} div(h w0) ds for every node.
std::vector<ScalarField> accumulated_divergence(const BoundaryFlow& w0,
                                                const Bathymetry& bathy) {
  const double dt = w0.time.dt();
  std::vector<ScalarField> acc(w0.snapshots.size());
  ScalarField prev = depth_weighted_divergence(bathy, w0.snapshots[0]);
  acc[0] = ScalarField(w0.snapshots[0].grid);
  for (size_t n = 1; n < w0.snapshots.size(); ++n) {
    ScalarField cur = depth_weighted_divergence(bathy, w0.snapshots[n]);
    acc[n] = acc[n - 1];
    axpy(0.5 * dt, prev, acc[n]);
    axpy(0.5 * dt, cur, acc[n]);
    prev = cur;
  }
  return acc;
}

VectorField time_derivative(const std::vector<VectorField>& snaps, int n,
                            double dt) {
  const int last = (int)snaps.size() - 1;
  if (last < 2) {  // two snapshots only: first-order difference
    VectorField d = snaps[1] - snaps[0];
    return (1.0 / dt) * d;
  }
  if (n == 0) {
    VectorField d = (-3.0) * snaps[0] + 4.0 * snaps[1];
    axpy(-1.0, snaps[2], d);
    return (0.5 / dt) * d;
  }
  if (n == last) {
    VectorField d = 3.0 * snaps[last];
    axpy(-4.0, snaps[last - 1], d);
    axpy(1.0, snaps[last - 2], d);
    return (0.5 / dt) * d;
  }
  VectorField d = snaps[n + 1] - snaps[n - 1];
  return (0.5 / dt) * d;
}

}  // namespace

ForcingTrajectory assemble_forcing(const std::vector<VectorField>& g_tide,
                                   const BoundaryFlow& w0,
                                   const Bathymetry& bathy,
                                   const PhysicalParams& params) {
  params.validate();
  const GridSpec& grid = bathy.h.grid;
  w0.validate(grid);
  if (g_tide.size() != w0.snapshots.size())
    throw std::invalid_argument("tide force and ambient flow time grids differ");
  std::vector<ScalarField> acc = accumulated_divergence(w0, bathy);
  ForcingTrajectory f;
  f.time = w0.time;
  f.snapshots.reserve(g_tide.size());
  for (size_t n = 0; n < g_tide.size(); ++n) {
    if (!(g_tide[n].grid == grid))
      throw std::invalid_argument("tide force grid mismatch");
    VectorField fn = g_tide[n];
    axpy(-1.0, time_derivative(w0.snapshots, (int)n, w0.time.dt()), fn);
    axpy(1.0, gradient(acc[n]), fn);
    axpy(params.alpha, laplacian(w0.snapshots[n]), fn);
    axpy(-params.beta, rotate(w0.snapshots[n]), fn);
    f.snapshots.push_back(std::move(fn));
  }
  return f;
}

void reconstruct_physical(const std::vector<VectorField>& u_snaps,
                          const std::vector<ScalarField>& xi_snaps,
                          const BoundaryFlow& w0, const Bathymetry& bathy,
                          std::vector<VectorField>& w_snaps,
                          std::vector<ScalarField>& zeta_snaps) {
  if (u_snaps.size() != w0.snapshots.size() ||
      xi_snaps.size() != w0.snapshots.size())
    throw std::invalid_argument("trajectory and ambient flow time grids differ");
  std::vector<ScalarField> acc = accumulated_divergence(w0, bathy);
  w_snaps.clear();
  zeta_snaps.clear();
  w_snaps.reserve(u_snaps.size());
  zeta_snaps.reserve(u_snaps.size());
  for (size_t n = 0; n < u_snaps.size(); ++n) {
    w_snaps.push_back(u_snaps[n] + w0.snapshots[n]);
    zeta_snaps.push_back(xi_snaps[n] - acc[n]);
  }
}

double stability_k(const PhysicalParams& params, const Bathymetry& bathy) {
  params.validate();
  double k1 = 1.0 + bathy.m_grad + params.r / bathy.lambda_min;
  double k2 = (2.0 / params.alpha) * (1.0 + bathy.mu_max * bathy.mu_max) +
              bathy.m_grad;
  return std::max(k1, k2);
}

}  // namespace tidalopt
