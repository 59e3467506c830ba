#include "tidalopt/grid.hpp"

#include <cmath>
#include <numeric>

namespace tidalopt {

GridSpec::GridSpec(int nx_, int ny_, double lx_, double ly_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
  if (nx < 3 || ny < 3) throw std::invalid_argument("grid needs nx,ny >= 3");
  if (lx <= 0 || ly <= 0) throw std::invalid_argument("grid needs lx,ly > 0");
}

namespace {
void check_same(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw std::invalid_argument("field grid mismatch");
}
}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  check_same(a.grid, b.grid);
  ScalarField r = a;
  for (size_t k = 0; k < r.v.size(); ++k) r.v[k] += b.v[k];
  return r;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  check_same(a.grid, b.grid);
  ScalarField r = a;
  for (size_t k = 0; k < r.v.size(); ++k) r.v[k] -= b.v[k];
  return r;
}

ScalarField operator*(double s, const ScalarField& a) {
  ScalarField r = a;
  for (double& x : r.v) x *= s;
  return r;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  check_same(a.grid, b.grid);
  VectorField r = a;
  r.dirichlet = a.dirichlet && b.dirichlet;
  for (size_t k = 0; k < r.c1.size(); ++k) {
    r.c1[k] += b.c1[k];
    r.c2[k] += b.c2[k];
  }
  return r;
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  check_same(a.grid, b.grid);
  VectorField r = a;
  r.dirichlet = a.dirichlet && b.dirichlet;
  for (size_t k = 0; k < r.c1.size(); ++k) {
    r.c1[k] -= b.c1[k];
    r.c2[k] -= b.c2[k];
  }
  return r;
}

VectorField operator*(double s, const VectorField& a) {
  VectorField r = a;
  for (double& x : r.c1) x *= s;
  for (double& x : r.c2) x *= s;
  return r;
}

void axpy(double a, const ScalarField& x, ScalarField& y) {
  check_same(x.grid, y.grid);
  for (size_t k = 0; k < y.v.size(); ++k) y.v[k] += a * x.v[k];
}

void axpy(double a, const VectorField& x, VectorField& y) {
  check_same(x.grid, y.grid);
  for (size_t k = 0; k < y.c1.size(); ++k) {
    y.c1[k] += a * x.c1[k];
    y.c2[k] += a * x.c2[k];
  }
}

double inner(const ScalarField& a, const ScalarField& b) {
  check_same(a.grid, b.grid);
  double s = 0.0;
  for (size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
  return s * a.grid.dx() * a.grid.dy();
}

double inner(const VectorField& a, const VectorField& b) {
  check_same(a.grid, b.grid);
  double s = 0.0;
  for (size_t k = 0; k < a.c1.size(); ++k)
    s += a.c1[k] * b.c1[k] + a.c2[k] * b.c2[k];
  return s * a.grid.dx() * a.grid.dy();
}

void enforce_dirichlet(VectorField& v) {
  const GridSpec& g = v.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.boundary(i, j)) {
        v.c1[g.index(i, j)] = 0.0;
        v.c2[g.index(i, j)] = 0.0;
      }
  v.dirichlet = true;
}

bool check_dirichlet(const VectorField& v) {
  const GridSpec& g = v.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.boundary(i, j)) {
        int k = g.index(i, j);
        if (v.c1[k] != 0.0 || v.c2[k] != 0.0) return false;
      }
  return true;
}

void require_finite(const ScalarField& f, const std::string& what) {
  for (double x : f.v)
    if (!std::isfinite(x))
      throw std::runtime_error("non-finite value in " + what);
}

void require_finite(const VectorField& f, const std::string& what) {
  for (size_t k = 0; k < f.c1.size(); ++k)
    if (!std::isfinite(f.c1[k]) || !std::isfinite(f.c2[k]))
      throw std::runtime_error("non-finite value in " + what);
}

namespace {

void laplacian_component(const GridSpec& g, const std::vector<double>& in,
                         std::vector<double>& out) {
  const double ix2 = 1.0 / (g.dx() * g.dx());
  const double iy2 = 1.0 / (g.dy() * g.dy());
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      int k = g.index(i, j);
      out[k] = ix2 * (in[k - 1] - 2.0 * in[k] + in[k + 1]) +
               iy2 * (in[k - g.nx] - 2.0 * in[k] + in[k + g.nx]);
    }
}

// d/dx rows: interior central, one-sided second order at i=0 and i=nx-1.
void ddx(const GridSpec& g, const std::vector<double>& in,
         std::vector<double>& out) {
  const double h = g.dx();
  for (int j = 0; j < g.ny; ++j) {
    int row = j * g.nx;
    out[row] = (-3.0 * in[row] + 4.0 * in[row + 1] - in[row + 2]) / (2.0 * h);
    for (int i = 1; i < g.nx - 1; ++i)
      out[row + i] = (in[row + i + 1] - in[row + i - 1]) / (2.0 * h);
    int e = row + g.nx - 1;
    out[e] = (3.0 * in[e] - 4.0 * in[e - 1] + in[e - 2]) / (2.0 * h);
  }
}

void ddy(const GridSpec& g, const std::vector<double>& in,
         std::vector<double>& out) {
  const double h = g.dy();
  const int nx = g.nx;
  for (int i = 0; i < nx; ++i) {
    out[i] = (-3.0 * in[i] + 4.0 * in[i + nx] - in[i + 2 * nx]) / (2.0 * h);
    for (int j = 1; j < g.ny - 1; ++j) {
      int k = j * nx + i;
      out[k] = (in[k + nx] - in[k - nx]) / (2.0 * h);
    }
    int e = (g.ny - 1) * nx + i;
    out[e] = (3.0 * in[e] - 4.0 * in[e - nx] + in[e - 2 * nx]) / (2.0 * h);
  }
}

// Transposes of ddx/ddy: scatter each row's stencil coefficients.
void ddx_transpose(const GridSpec& g, const std::vector<double>& in,
                   std::vector<double>& out) {
  const double h = g.dx();
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < g.ny; ++j) {
    int row = j * g.nx;
    double w0 = in[row] / (2.0 * h);
    out[row] += -3.0 * w0;
    out[row + 1] += 4.0 * w0;
    out[row + 2] += -1.0 * w0;
    for (int i = 1; i < g.nx - 1; ++i) {
      double w = in[row + i] / (2.0 * h);
      out[row + i + 1] += w;
      out[row + i - 1] -= w;
    }
    int e = row + g.nx - 1;
    double we = in[e] / (2.0 * h);
    out[e] += 3.0 * we;
    out[e - 1] += -4.0 * we;
    out[e - 2] += 1.0 * we;
  }
}

void ddy_transpose(const GridSpec& g, const std::vector<double>& in,
                   std::vector<double>& out) {
  const double h = g.dy();
  const int nx = g.nx;
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < nx; ++i) {
    double w0 = in[i] / (2.0 * h);
    out[i] += -3.0 * w0;
    out[i + nx] += 4.0 * w0;
    out[i + 2 * nx] += -1.0 * w0;
    for (int j = 1; j < g.ny - 1; ++j) {
      int k = j * nx + i;
      double w = in[k] / (2.0 * h);
      out[k + nx] += w;
      out[k - nx] -= w;
    }
    int e = (g.ny - 1) * nx + i;
    double we = in[e] / (2.0 * h);
    out[e] += 3.0 * we;
    out[e - nx] += -4.0 * we;
    out[e - 2 * nx] += 1.0 * we;
  }
}

}  // namespace

ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  laplacian_component(f.grid, f.v, out.v);
  return out;
}

VectorField laplacian(const VectorField& f) {
  VectorField out(f.grid, true);
  laplacian_component(f.grid, f.c1, out.c1);
  laplacian_component(f.grid, f.c2, out.c2);
  return out;
}

VectorField gradient(const ScalarField& s) {
  VectorField out(s.grid);
  ddx(s.grid, s.v, out.c1);
  ddy(s.grid, s.v, out.c2);
  return out;
}

ScalarField divergence(const VectorField& v) {
  if (!check_dirichlet(v))
    throw std::invalid_argument("divergence requires a dirichlet field");
  ScalarField out(v.grid);
  std::vector<double> tmp(v.grid.size());
  ddx_transpose(v.grid, v.c1, out.v);
  ddy_transpose(v.grid, v.c2, tmp);
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] = -(out.v[k] + tmp[k]);
  return out;
}

ScalarField divergence_pointwise(const VectorField& v) {
  ScalarField out(v.grid);
  std::vector<double> tmp(v.grid.size());
  ddx(v.grid, v.c1, out.v);
  ddy(v.grid, v.c2, tmp);
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += tmp[k];
  return out;
}

VectorField grad_transpose_grad(const VectorField& v) {
  const GridSpec& g = v.grid;
  VectorField out(g);
  std::vector<double> gx(g.size()), gy(g.size()), tmp(g.size());
  const std::vector<double>* comps[2] = {&v.c1, &v.c2};
  std::vector<double>* outs[2] = {&out.c1, &out.c2};
  for (int c = 0; c < 2; ++c) {
    ddx(g, *comps[c], gx);
    ddy(g, *comps[c], gy);
    ddx_transpose(g, gx, *outs[c]);
    ddy_transpose(g, gy, tmp);
    for (int k = 0; k < g.size(); ++k) (*outs[c])[k] += tmp[k];
  }
  enforce_dirichlet(out);
  return out;
}

VectorField rotate(const VectorField& v) {
  VectorField out(v.grid, v.dirichlet);
  for (size_t k = 0; k < v.c1.size(); ++k) {
    out.c1[k] = -v.c2[k];
    out.c2[k] = v.c1[k];
  }
  return out;
}

namespace {

// CG on the Dirichlet interior for op(x) = rhs, where `op` maps stacked
// component vectors and is SPD on the subspace with zero boundary values.
struct Stacked {
  const GridSpec* g;
  int comps;
  std::vector<double> data;  // comps * nx*ny

  Stacked(const GridSpec& gr, int c) : g(&gr), comps(c), data(c * gr.size(), 0.0) {}
};

void zero_boundary(Stacked& s) {
  const GridSpec& g = *s.g;
  for (int c = 0; c < s.comps; ++c) {
    double* v = s.data.data() + c * g.size();
    for (int i = 0; i < g.nx; ++i) {
      v[g.index(i, 0)] = 0.0;
      v[g.index(i, g.ny - 1)] = 0.0;
    }
    for (int j = 0; j < g.ny; ++j) {
      v[g.index(0, j)] = 0.0;
      v[g.index(g.nx - 1, j)] = 0.0;
    }
  }
}

double dot(const Stacked& a, const Stacked& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.data.size(); ++k) s += a.data[k] * b.data[k];
  return s;
}

template <class Op>
Stacked cg_solve(const GridSpec& g, int comps, const Stacked& rhs, Op&& op,
                 const CgOptions& opts) {
  Stacked x(g, comps), r = rhs, p(g, comps), ap(g, comps);
  zero_boundary(r);
  double rhs_norm = std::sqrt(dot(r, r));
  if (rhs_norm == 0.0) return x;
  p = r;
  double rr = dot(r, r);
  int max_iters = opts.max_iters > 0 ? opts.max_iters : 10 * g.size();
  for (int it = 0; it < max_iters; ++it) {
    op(p, ap);
    zero_boundary(ap);
    double pap = dot(p, ap);
    if (pap <= 0.0) throw CgFailure("CG: operator lost positivity", rr);
    double alpha = rr / pap;
    for (size_t k = 0; k < x.data.size(); ++k) {
      x.data[k] += alpha * p.data[k];
      r.data[k] -= alpha * ap.data[k];
    }
    double rr_new = dot(r, r);
    if (std::sqrt(rr_new) <= opts.tol * rhs_norm) return x;
    double beta = rr_new / rr;
    rr = rr_new;
    for (size_t k = 0; k < p.data.size(); ++k)
      p.data[k] = r.data[k] + beta * p.data[k];
  }
  throw CgFailure("CG: no convergence after max iterations, residual " +
                      std::to_string(std::sqrt(rr) / rhs_norm),
                  std::sqrt(rr) / rhs_norm);
}

void neg_lap_stacked(const GridSpec& g, const Stacked& in, Stacked& out) {
  std::vector<double> tmp(g.size());
  for (int c = 0; c < in.comps; ++c) {
    const double* src = in.data.data() + c * g.size();
    double* dst = out.data.data() + c * g.size();
    std::vector<double> comp(src, src + g.size());
    std::fill(tmp.begin(), tmp.end(), 0.0);
    laplacian_component(g, comp, tmp);
    for (int k = 0; k < g.size(); ++k) dst[k] = -tmp[k];
  }
}

}  // namespace

ScalarField poisson_solve(const ScalarField& rhs, const CgOptions& opts) {
  require_finite(rhs, "poisson rhs");
  Stacked b(rhs.grid, 1);
  b.data = rhs.v;
  auto x = cg_solve(rhs.grid, 1, b,
                    [&](const Stacked& in, Stacked& out) {
                      neg_lap_stacked(rhs.grid, in, out);
                    },
                    opts);
  ScalarField out(rhs.grid);
  out.v = x.data;
  return out;
}

VectorField poisson_solve(const VectorField& rhs, const CgOptions& opts) {
  require_finite(rhs, "poisson rhs");
  Stacked b(rhs.grid, 2);
  std::copy(rhs.c1.begin(), rhs.c1.end(), b.data.begin());
  std::copy(rhs.c2.begin(), rhs.c2.end(), b.data.begin() + rhs.grid.size());
  auto x = cg_solve(rhs.grid, 2, b,
                    [&](const Stacked& in, Stacked& out) {
                      neg_lap_stacked(rhs.grid, in, out);
                    },
                    opts);
  VectorField out(rhs.grid, true);
  std::copy(x.data.begin(), x.data.begin() + rhs.grid.size(), out.c1.begin());
  std::copy(x.data.begin() + rhs.grid.size(), x.data.end(), out.c2.begin());
  return out;
}

VectorField helmholtz_solve(const VectorField& rhs, double sigma,
                            const CgOptions& opts) {
  require_finite(rhs, "helmholtz rhs");
  Stacked b(rhs.grid, 2);
  std::copy(rhs.c1.begin(), rhs.c1.end(), b.data.begin());
  std::copy(rhs.c2.begin(), rhs.c2.end(), b.data.begin() + rhs.grid.size());
  auto x = cg_solve(rhs.grid, 2, b,
                    [&](const Stacked& in, Stacked& out) {
                      neg_lap_stacked(rhs.grid, in, out);
                      for (size_t k = 0; k < out.data.size(); ++k)
                        out.data[k] = in.data[k] + sigma * out.data[k];
                    },
                    opts);
  VectorField out(rhs.grid, true);
  std::copy(x.data.begin(), x.data.begin() + rhs.grid.size(), out.c1.begin());
  std::copy(x.data.begin() + rhs.grid.size(), x.data.end(), out.c2.begin());
  return out;
}

namespace {
double quadrature_p(const GridSpec& g, const std::vector<double>& mag2,
                    double p_half) {
  // sum of (|.|^2)^{p/2} over nodes times cell weight
  double s = 0.0;
  for (double m2 : mag2) s += std::pow(m2, p_half);
  return s * g.dx() * g.dy();
}
}  // namespace

double norm(const ScalarField& f, NormKind kind, const CgOptions& opts) {
  switch (kind) {
    case NormKind::L2:
      return std::sqrt(inner(f, f));
    case NormKind::L4: {
      std::vector<double> m2(f.v.size());
      for (size_t k = 0; k < f.v.size(); ++k) m2[k] = f.v[k] * f.v[k];
      return std::pow(quadrature_p(f.grid, m2, 2.0), 0.25);
    }
    case NormKind::H1semi: {
      VectorField g = gradient(f);
      return std::sqrt(inner(g, g));
    }
    case NormKind::Hminus1: {
      ScalarField x = poisson_solve(f, opts);
      return std::sqrt(std::max(0.0, inner(f, x)));
    }
  }
  throw std::logic_error("unknown norm kind");
}

double norm(const VectorField& f, NormKind kind, const CgOptions& opts) {
  switch (kind) {
    case NormKind::L2:
      return std::sqrt(inner(f, f));
    case NormKind::L4: {
      std::vector<double> m2(f.c1.size());
      for (size_t k = 0; k < f.c1.size(); ++k)
        m2[k] = f.c1[k] * f.c1[k] + f.c2[k] * f.c2[k];
      return std::pow(quadrature_p(f.grid, m2, 2.0), 0.25);
    }
    case NormKind::H1semi: {
      ScalarField a(f.grid), b(f.grid);
      a.v = f.c1;
      b.v = f.c2;
      VectorField ga = gradient(a), gb = gradient(b);
      return std::sqrt(inner(ga, ga) + inner(gb, gb));
    }
    case NormKind::Hminus1: {
      VectorField x = poisson_solve(f, opts);
      return std::sqrt(std::max(0.0, inner(f, x)));
    }
  }
  throw std::logic_error("unknown norm kind");
}

double smallest_laplacian_eigenvalue(const GridSpec& g, int iters) {
  ScalarField x(g);
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i)
      x(i, j) = std::sin(M_PI * g.x(i) / g.lx) * std::sin(M_PI * g.y(j) / g.ly);
  CgOptions opts;
  opts.tol = 1e-12;
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    ScalarField y = poisson_solve(x, opts);
    double ny = std::sqrt(inner(y, y));
    if (ny == 0.0) throw std::runtime_error("power iteration collapsed");
    lambda = std::sqrt(inner(x, x)) / ny;
    x = (1.0 / ny) * y;
  }
  return lambda;
}

}  // namespace tidalopt
