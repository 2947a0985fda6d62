#pragma once

#include <string>
#include <vector>

namespace slpinn {

/// Viscosity parameter with its cached square root (the boundary-layer
/// width scale). Valid range (0, 1].
struct Viscosity {
  double eps;
  double sqrt_eps;

  explicit Viscosity(double eps_value);
};

/// Forcing for the first velocity component: f1 = 1 + z(1-z).
double f1(double z);
double dz_f1(double z);

/// Inviscid limit of the first velocity component (equals f1).
double u1_inviscid(double z);

/// Viscous first velocity component:
///   u1(z) = z(1-z) + (1-2e) (1 - c (E + F))
/// with E = exp(-z/sqrt(e)), F = exp(-(1-z)/sqrt(e)) and
/// c = 1/(1 + exp(-1/sqrt(e))) (cancellation-free form). The combination
/// 1 - c(E+F) is evaluated as c((1-E) + (exp(-1/sqrt(e)) - F)) so the wall
/// values vanish exactly in floating point. Satisfies u - e u'' = f1 with
/// u(0) = u(1) = 0.
double u1_exact(const Viscosity& nu, double z);
double dz_u1_exact(const Viscosity& nu, double z);
double d2z_u1_exact(const Viscosity& nu, double z);
double d3z_u1_exact(const Viscosity& nu, double z);

/// Forcing for the second component, built from the viscous u1:
///   f2 = f1 (1 + sin 2 pi x) + 4 pi^2 e u1 sin 2 pi x + 2 pi u1^2 cos 2 pi x.
double f2(const Viscosity& nu, double x, double z);
double dx_f2(const Viscosity& nu, double x, double z);
double dz_f2(const Viscosity& nu, double x, double z);
double dxx_f2(const Viscosity& nu, double x, double z);

/// Second velocity component u2 = u1(z) (1 + sin 2 pi x).
double u2_exact(const Viscosity& nu, double x, double z);

/// Vorticity components (curl of the exact velocity):
///   w1 = -w2(z) (1 + sin 2 pi x),  w2 = d_z u1,  w3 = 2 pi u1 cos 2 pi x.
/// component must be 1, 2 or 3.
double omega_exact(const Viscosity& nu, int component, double x, double z);

/// Closed-form field bundle used by the residual verifier and the error
/// tables. The two flags produce deliberately broken variants: canaries that
/// the verifier is expected to reject.
class ExactFields {
 public:
  explicit ExactFields(const Viscosity& nu) : nu_(nu) {}

  /// Variant without the polynomial interior part of u1. Fails the
  /// first-component momentum residual by about 1/4 + 2 eps.
  static ExactFields without_interior_poly(const Viscosity& nu);

  /// Variant with the sign of f2 flipped. Fails the second-component
  /// momentum residual.
  static ExactFields with_flipped_f2(const Viscosity& nu);

  const Viscosity& nu() const { return nu_; }

  double u1(double z) const;
  double dz_u1(double z) const;
  double d2z_u1(double z) const;
  double d3z_u1(double z) const;

  double u2(double x, double z) const;
  double dx_u2(double x, double z) const;
  double dz_u2(double x, double z) const;
  double dxx_u2(double x, double z) const;
  double dzz_u2(double x, double z) const;

  double w1(double x, double z) const;
  double dx_w1(double x, double z) const;
  double dz_w1(double x, double z) const;
  double dxx_w1(double x, double z) const;
  double dzz_w1(double x, double z) const;

  double w2(double z) const;
  double dz_w2(double z) const;
  double d2z_w2(double z) const;

  double w3(double x, double z) const;
  double dx_w3(double x, double z) const;
  double dz_w3(double x, double z) const;
  double dxx_w3(double x, double z) const;
  double dzz_w3(double x, double z) const;

  double f2v(double x, double z) const;
  double dx_f2v(double x, double z) const;
  double dz_f2v(double x, double z) const;

 private:
  Viscosity nu_;
  bool drop_interior_poly_ = false;
  bool flip_f2_sign_ = false;
};

struct ResidualCheck {
  std::string name;          // e.g. "u1-momentum", "w2-neumann"
  double max_rel_residual = 0.0;
  double worst_x = 0.0;
  double worst_z = 0.0;
  bool pass = false;
};

struct ResidualReport {
  bool pass = false;
  std::vector<ResidualCheck> checks;

  const ResidualCheck* find(const std::string& name) const;
};

/// Substitutes the closed-form fields into every interior equation and
/// boundary condition and demands residuals <= 1e-8 relative to the largest
/// term of each equation. Throws std::invalid_argument on an empty grid.
ResidualReport verify_manufactured(const ExactFields& fields,
                                   const std::vector<double>& zs,
                                   const std::vector<double>& xs);

/// Same on a default layered grid (61 z points, 21 x points).
ResidualReport verify_manufactured(const ExactFields& fields);

}  // namespace slpinn
