#pragma once

#include "slpinn/ansatz.hpp"

#include <functional>
#include <span>
#include <vector>

namespace slpinn {

/// Test grid concentrating points inside the boundary layers: 50 uniform
/// z-points on [0, sqrt(eps)], 500 strictly inside (sqrt(eps), 1-sqrt(eps)),
/// 50 uniform on [1-sqrt(eps), 1]; 500 uniform x-points on [0, 1].
struct LayeredGrid {
  std::vector<double> z;
  std::vector<double> x;
};

LayeredGrid make_layered_grid(const Viscosity& nu);

/// Same layout with n_z total z-points (n_z/12 per layer) and n_x x-points.
LayeredGrid make_layered_grid(const Viscosity& nu, int n_z, int n_x);

struct RelErrors {
  double rel_l2 = 0.0;
  double rel_linf = 0.0;
};

/// Plain vector-norm ratios ||pred - exact|| / ||exact|| over the grid
/// (tensor product when two_d). Throws std::invalid_argument when the
/// reference vanishes on the grid.
RelErrors relative_errors(const std::function<double(double, double)>& pred,
                          const std::function<double(double, double)>& exact,
                          const LayeredGrid& grid, bool two_d);

struct ErrorRow {
  double eps = 0.0;
  Target target = Target::u1;
  Method method = Method::plain;
  double rel_l2 = 0.0;
  double rel_linf = 0.0;
};

/// One row of the benchmark tables: errors of a trained structure against
/// the closed-form field of its target over the layered grid.
ErrorRow error_row(const Ansatz& a, const ExactFields& fields);

/// Integral of f over [0, 1] on a composite Gauss-Legendre mesh graded into
/// the boundary layers (panel width <= sqrt(eps)/20 within 10 sqrt(eps) of
/// each wall, geometric coarsening outside). The result is accepted once one
/// uniform refinement moves it by less than 1e-8 relative; two failed
/// refinements throw std::runtime_error.
double layered_quadrature(const std::function<double(double)>& f,
                          const Viscosity& nu);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct SlopeFit {
  std::vector<double> eps;
  std::vector<double> values;
  double slope = 0.0;
};

/// L2(0,1) distance between the viscous and inviscid first velocity
/// components across eps_list, with the fitted decay slope (expected near
/// 1/4: the layer contributes ~ eps^{1/4}, the interior O(eps)). Needs at
/// least 4 viscosities.
SlopeFit inviscid_rate_check(std::span<const double> eps_list);

struct WeakLimitRecord {
  std::vector<double> eps;
  std::vector<double> deltas;
  double target = 0.0;
  double slope = 0.0;  // NaN when the deltas vanish identically
};

/// Tests weak convergence of the second vorticity component against a
/// continuous function psi: the limit of (w2, psi) is
/// integral (1-2z) psi dz + psi(0) - psi(1), the boundary terms being the
/// wall measure picked up by the layer kernels. Returns the gap for each
/// viscosity and its decay slope (expected near 1/2 for psi with nonzero
/// first moment at the walls).
WeakLimitRecord weak_vorticity_limit_check(
    const std::function<double(double)>& psi, std::span<const double> eps_list);

/// Norm scaling of the explicit layer profile -f1(0) exp(-z/sqrt(eps)):
/// fits ||d_z^m profile||_{L^p} against eps; the exponent is
/// 1/(2p) - m/2 (p = infinity gives -m/2). m in 0..2, p in {1, 2, inf}.
SlopeFit corrector_norm_check(int m, double p, std::span<const double> eps_list);

}  // namespace slpinn
