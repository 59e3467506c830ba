#pragma once

#include <string>

#include "tidalopt/cost.hpp"

namespace tidalopt {

/// One property check: `worst_margin` is the most adverse value of
/// (bound - quantity) over all trials, so pass means worst_margin >= -tol.
/// `constant` records the constant formula / values used, making a failure
/// reproducible from the report alone.
struct PropertyReport {
  std::string name;
  int trials = 0;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string constant;
};

/// Randomized checks of the friction-operator inequalities and the combined
/// monotonicity of A + B. Seeded; identical seeds give identical reports.
std::vector<PropertyReport> operator_property_suite(const ModelBundle& bundle,
                                                    int trials, unsigned seed);

/// Interpolation and embedding inequalities on smooth band-limited fields:
/// the L4 interpolation bound with constant 2^{1/4} (5% slack), its
/// eigenfunction closed form, and the measured Poincare constant.
std::vector<PropertyReport> inequality_suite(const GridSpec& grid, int trials,
                                             unsigned seed);

/// Best-over-h, worst-over-direction relative error between the adjoint
/// directional derivative and central finite differences of the reduced cost.
double gradient_fd_check(const CostSpec& spec, const ModelBundle& bundle,
                         const ControlTrajectory& control,
                         const std::vector<ControlTrajectory>& directions,
                         const std::vector<double>& hs);

/// A-priori bound monitors along actual solves at the given control:
/// the forward energy bound, the linearized-state bound, the backward-state
/// bound (tracking sources), and the two-solve perturbation bound at tau.
std::vector<PropertyReport> bound_monitors(const ControlTrajectory& control,
                                           const CostSpec& spec,
                                           const ModelBundle& bundle,
                                           double tau, unsigned seed);

}  // namespace tidalopt
