#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tidalopt {

/// Uniform rectangular grid covering [0,lx] x [0,ly], including boundary nodes.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double lx = 1.0;
  double ly = 1.0;

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double lx_ = 1.0, double ly_ = 1.0);

  double dx() const { return lx / (nx - 1); }
  double dy() const { return ly / (ny - 1); }
  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  bool boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }
  bool operator==(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g) : grid(g), v(g.size(), 0.0) {}
  double& operator()(int i, int j) { return v[grid.index(i, j)]; }
  double operator()(int i, int j) const { return v[grid.index(i, j)]; }
};

/// Two-component field. A field marked `dirichlet` keeps both components
/// exactly zero on every boundary node.
struct VectorField {
  GridSpec grid;
  std::vector<double> c1, c2;
  bool dirichlet = false;

  VectorField() = default;
  explicit VectorField(const GridSpec& g, bool dirichlet_ = false)
      : grid(g), c1(g.size(), 0.0), c2(g.size(), 0.0), dirichlet(dirichlet_) {}
};

// -- field algebra (pointwise, same grid) --
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(double s, const VectorField& a);
void axpy(double a, const ScalarField& x, ScalarField& y);  // y += a*x
void axpy(double a, const VectorField& x, VectorField& y);

/// Grid inner products: uniform weight dx*dy at every node.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);

void enforce_dirichlet(VectorField& v);
bool check_dirichlet(const VectorField& v);
void require_finite(const ScalarField& f, const std::string& what);
void require_finite(const VectorField& f, const std::string& what);

/// 5-point second difference at interior nodes using stored neighbor values;
/// boundary nodes of the output are zero.
ScalarField laplacian(const ScalarField& f);
VectorField laplacian(const VectorField& f);

/// Central differences at interior nodes, one-sided second-order at the
/// boundary.
VectorField gradient(const ScalarField& s);

/// Transpose of `gradient` under the grid inner product, applied to one
/// component each; divergence is defined as -gradient^T so that
/// <gradient(s), v> = -<s, divergence(v)> holds to rounding.
ScalarField divergence(const VectorField& v);

/// Pointwise-consistent divergence d(v1)/dx + d(v2)/dy using the same
/// central/one-sided formulas as `gradient`. Not the transpose pair; used
/// where a plain derivative of a non-dirichlet field is needed.
ScalarField divergence_pointwise(const VectorField& v);

/// k x v = (-v2, v1).
VectorField rotate(const VectorField& v);

/// G^T G applied to each component, with the output restricted to the
/// dirichlet subspace (boundary rows zeroed). This is the exact derivative
/// of the squared H1semi norm on dirichlet fields, which the 5-point
/// stencil is not (the one-sided boundary formulas of `gradient` differ).
VectorField grad_transpose_grad(const VectorField& v);

struct CgOptions {
  double tol = 1e-10;  // relative residual
  int max_iters = 0;   // 0 -> 10*nx*ny
};

struct CgFailure : std::runtime_error {
  double residual;
  CgFailure(const std::string& msg, double res)
      : std::runtime_error(msg), residual(res) {}
};

/// Solves (-Laplacian) x = rhs with homogeneous Dirichlet data by conjugate
/// gradients; boundary entries of rhs are ignored and x is zero there.
ScalarField poisson_solve(const ScalarField& rhs, const CgOptions& opts = {});
VectorField poisson_solve(const VectorField& rhs, const CgOptions& opts = {});

/// Solves (I + sigma*(-Laplacian)) x = rhs on the Dirichlet subspace, the
/// implicit-diffusion system of the time steppers.
VectorField helmholtz_solve(const VectorField& rhs, double sigma,
                            const CgOptions& opts = {});

enum class NormKind { L2, L4, H1semi, Hminus1 };

double norm(const ScalarField& f, NormKind kind, const CgOptions& opts = {});
double norm(const VectorField& f, NormKind kind, const CgOptions& opts = {});

/// Smallest eigenvalue of the Dirichlet (-Laplacian) by inverse power
/// iteration; the discrete Poincare constant is 1/sqrt of it.
double smallest_laplacian_eigenvalue(const GridSpec& g, int iters = 60);

}  // namespace tidalopt
