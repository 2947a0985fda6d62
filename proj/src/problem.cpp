#include "slpinn/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slpinn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

// Trig factors on the periodic cell (period 1). Wrapping first makes the
// closed forms exactly periodic: x = 1 evaluates the same doubles as x = 0.
struct Trig {
  double s;  // sin(2 pi x)
  double c;  // cos(2 pi x)
};

Trig trig(double x) {
  const double xw = x - std::floor(x);
  return Trig{std::sin(kTwoPi * xw), std::cos(kTwoPi * xw)};
}

// Layer exponentials and the wall-exact combination g = 1 - c (E + F).
struct LayerParts {
  double E;  // exp(-z/sqrt(eps))
  double F;  // exp(-(1-z)/sqrt(eps))
  double c;  // 1 / (1 + exp(-1/sqrt(eps)))
  double g;  // evaluated as c ((1-E) + (q-F)); exactly 0 at z = 0 and z = 1
};

LayerParts layer_parts(const Viscosity& nu, double z) {
  LayerParts p;
  const double q = std::exp(-1.0 / nu.sqrt_eps);
  p.E = std::exp(-z / nu.sqrt_eps);
  p.F = std::exp(-(1.0 - z) / nu.sqrt_eps);
  p.c = 1.0 / (1.0 + q);
  p.g = p.c * ((1.0 - p.E) + (q - p.F));
  return p;
}

struct U1Parts {
  double v;    // u1
  double d1;   // d_z u1
  double d2;   // d^2_z u1
  double d3;   // d^3_z u1
};

U1Parts u1_parts(const Viscosity& nu, double z, bool drop_poly) {
  const LayerParts p = layer_parts(nu, z);
  const double amp = 1.0 - 2.0 * nu.eps;
  const double se = nu.sqrt_eps;
  U1Parts u;
  u.v = amp * p.g;
  u.d1 = amp * p.c * (p.E - p.F) / se;
  u.d2 = -amp * p.c * (p.E + p.F) / nu.eps;
  u.d3 = amp * p.c * (p.E - p.F) / (nu.eps * se);
  if (!drop_poly) {
    u.v += z * (1.0 - z);
    u.d1 += 1.0 - 2.0 * z;
    u.d2 += -2.0;
  }
  return u;
}

}  // namespace

Viscosity::Viscosity(double eps_value) : eps(eps_value) {
  if (!(eps > 0.0) || eps > 1.0) {
    throw std::invalid_argument("Viscosity: eps must be in (0, 1]");
  }
  sqrt_eps = std::sqrt(eps);
}

double f1(double z) { return 1.0 + z * (1.0 - z); }

double dz_f1(double z) { return 1.0 - 2.0 * z; }

double u1_inviscid(double z) { return f1(z); }

double u1_exact(const Viscosity& nu, double z) {
  return u1_parts(nu, z, false).v;
}

double dz_u1_exact(const Viscosity& nu, double z) {
  return u1_parts(nu, z, false).d1;
}

double d2z_u1_exact(const Viscosity& nu, double z) {
  return u1_parts(nu, z, false).d2;
}

double d3z_u1_exact(const Viscosity& nu, double z) {
  return u1_parts(nu, z, false).d3;
}

namespace {

struct F2Parts {
  double v, dx, dz, dxx;
};

F2Parts f2_parts(const Viscosity& nu, double x, double z, bool flip_sign) {
  const U1Parts u = u1_parts(nu, z, false);
  const Trig t = trig(x);
  const double s = t.s;
  const double co = t.c;
  const double four_pi2_eps = 4.0 * kPi * kPi * nu.eps;
  F2Parts f;
  f.v = f1(z) * (1.0 + s) + four_pi2_eps * u.v * s + kTwoPi * u.v * u.v * co;
  f.dx = kTwoPi * co * f1(z) + kTwoPi * four_pi2_eps * u.v * co -
         kTwoPi * kTwoPi * u.v * u.v * s;
  f.dz = dz_f1(z) * (1.0 + s) + four_pi2_eps * u.d1 * s +
         2.0 * kTwoPi * u.v * u.d1 * co;
  f.dxx = -kTwoPi * kTwoPi * s * f1(z) -
          kTwoPi * kTwoPi * four_pi2_eps * u.v * s -
          kTwoPi * kTwoPi * kTwoPi * u.v * u.v * co;
  if (flip_sign) {
    f.v = -f.v;
    f.dx = -f.dx;
    f.dz = -f.dz;
    f.dxx = -f.dxx;
  }
  return f;
}

}  // namespace

double f2(const Viscosity& nu, double x, double z) {
  return f2_parts(nu, x, z, false).v;
}

double dx_f2(const Viscosity& nu, double x, double z) {
  return f2_parts(nu, x, z, false).dx;
}

double dz_f2(const Viscosity& nu, double x, double z) {
  return f2_parts(nu, x, z, false).dz;
}

double dxx_f2(const Viscosity& nu, double x, double z) {
  return f2_parts(nu, x, z, false).dxx;
}

double u2_exact(const Viscosity& nu, double x, double z) {
  return u1_exact(nu, z) * (1.0 + trig(x).s);
}

double omega_exact(const Viscosity& nu, int component, double x, double z) {
  switch (component) {
    case 1:
      return -dz_u1_exact(nu, z) * (1.0 + trig(x).s);
    case 2:
      return dz_u1_exact(nu, z);
    case 3:
      return kTwoPi * u1_exact(nu, z) * trig(x).c;
    default:
      throw std::invalid_argument("omega_exact: component must be 1, 2 or 3");
  }
}

ExactFields ExactFields::without_interior_poly(const Viscosity& nu) {
  ExactFields fields(nu);
  fields.drop_interior_poly_ = true;
  return fields;
}

ExactFields ExactFields::with_flipped_f2(const Viscosity& nu) {
  ExactFields fields(nu);
  fields.flip_f2_sign_ = true;
  return fields;
}

double ExactFields::u1(double z) const {
  return u1_parts(nu_, z, drop_interior_poly_).v;
}
double ExactFields::dz_u1(double z) const {
  return u1_parts(nu_, z, drop_interior_poly_).d1;
}
double ExactFields::d2z_u1(double z) const {
  return u1_parts(nu_, z, drop_interior_poly_).d2;
}
double ExactFields::d3z_u1(double z) const {
  return u1_parts(nu_, z, drop_interior_poly_).d3;
}

double ExactFields::u2(double x, double z) const {
  return u1(z) * (1.0 + trig(x).s);
}
double ExactFields::dx_u2(double x, double z) const {
  return u1(z) * kTwoPi * trig(x).c;
}
double ExactFields::dz_u2(double x, double z) const {
  return dz_u1(z) * (1.0 + trig(x).s);
}
double ExactFields::dxx_u2(double x, double z) const {
  return -u1(z) * kTwoPi * kTwoPi * trig(x).s;
}
double ExactFields::dzz_u2(double x, double z) const {
  return d2z_u1(z) * (1.0 + trig(x).s);
}

double ExactFields::w1(double x, double z) const {
  return -w2(z) * (1.0 + trig(x).s);
}
double ExactFields::dx_w1(double x, double z) const {
  return -w2(z) * kTwoPi * trig(x).c;
}
double ExactFields::dz_w1(double x, double z) const {
  return -dz_w2(z) * (1.0 + trig(x).s);
}
double ExactFields::dxx_w1(double x, double z) const {
  return w2(z) * kTwoPi * kTwoPi * trig(x).s;
}
double ExactFields::dzz_w1(double x, double z) const {
  return -d2z_w2(z) * (1.0 + trig(x).s);
}

double ExactFields::w2(double z) const { return dz_u1(z); }
double ExactFields::dz_w2(double z) const { return d2z_u1(z); }
double ExactFields::d2z_w2(double z) const { return d3z_u1(z); }

double ExactFields::w3(double x, double z) const {
  return kTwoPi * u1(z) * trig(x).c;
}
double ExactFields::dx_w3(double x, double z) const {
  return -kTwoPi * kTwoPi * u1(z) * trig(x).s;
}
double ExactFields::dz_w3(double x, double z) const {
  return kTwoPi * dz_u1(z) * trig(x).c;
}
double ExactFields::dxx_w3(double x, double z) const {
  return -kTwoPi * kTwoPi * kTwoPi * u1(z) * trig(x).c;
}
double ExactFields::dzz_w3(double x, double z) const {
  return kTwoPi * d2z_u1(z) * trig(x).c;
}

double ExactFields::f2v(double x, double z) const {
  return f2_parts(nu_, x, z, flip_f2_sign_).v;
}
double ExactFields::dx_f2v(double x, double z) const {
  return f2_parts(nu_, x, z, flip_f2_sign_).dx;
}
double ExactFields::dz_f2v(double x, double z) const {
  return f2_parts(nu_, x, z, flip_f2_sign_).dz;
}

const ResidualCheck* ResidualReport::find(const std::string& name) const {
  for (const ResidualCheck& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

constexpr double kResidualTol = 1e-8;

struct CheckAccumulator {
  ResidualCheck check;

  explicit CheckAccumulator(std::string name) { check.name = std::move(name); }

  // terms: the individual addends of the equation; their largest magnitude
  // (floored at 1) sets the local scale.
  void add(double x, double z, std::initializer_list<double> terms) {
    double residual = 0.0;
    double scale = 1.0;
    for (double t : terms) {
      residual += t;
      scale = std::max(scale, std::abs(t));
    }
    const double rel = std::abs(residual) / scale;
    if (rel > check.max_rel_residual) {
      check.max_rel_residual = rel;
      check.worst_x = x;
      check.worst_z = z;
    }
  }

  ResidualCheck finish() {
    check.pass = check.max_rel_residual <= kResidualTol;
    return check;
  }
};

}  // namespace

ResidualReport verify_manufactured(const ExactFields& fields,
                                   const std::vector<double>& zs,
                                   const std::vector<double>& xs) {
  if (zs.empty() || xs.empty()) {
    throw std::invalid_argument("verify_manufactured: empty grid");
  }
  const Viscosity& nu = fields.nu();
  const double eps = nu.eps;

  CheckAccumulator u1_mom("u1-momentum");
  CheckAccumulator u2_mom("u2-momentum");
  CheckAccumulator w1_tr("w1-transport");
  CheckAccumulator w2_tr("w2-transport");
  CheckAccumulator w3_tr("w3-transport");
  for (double z : zs) {
    u1_mom.add(0.0, z,
               {fields.u1(z), -eps * fields.d2z_u1(z), -f1(z)});
    w2_tr.add(0.0, z, {fields.w2(z), -eps * fields.d2z_w2(z), -dz_f1(z)});
    for (double x : xs) {
      u2_mom.add(x, z,
                 {fields.u2(x, z), -eps * fields.dxx_u2(x, z),
                  -eps * fields.dzz_u2(x, z),
                  fields.u1(z) * fields.dx_u2(x, z), -fields.f2v(x, z)});
      w1_tr.add(x, z,
                {fields.w1(x, z), -eps * fields.dxx_w1(x, z),
                 -eps * fields.dzz_w1(x, z), -fields.w2(z) * fields.w3(x, z),
                 fields.u1(z) * fields.dx_w1(x, z), fields.dz_f2v(x, z)});
      w3_tr.add(x, z,
                {fields.w3(x, z), -eps * fields.dxx_w3(x, z),
                 -eps * fields.dzz_w3(x, z),
                 fields.u1(z) * fields.dx_w3(x, z), -fields.dx_f2v(x, z)});
    }
  }

  CheckAccumulator u1_bc("u1-dirichlet");
  CheckAccumulator u2_bc("u2-dirichlet");
  CheckAccumulator w1_bc("w1-neumann");
  CheckAccumulator w2_bc("w2-neumann");
  CheckAccumulator w3_bc("w3-dirichlet");
  for (double zw : {0.0, 1.0}) {
    u1_bc.add(0.0, zw, {fields.u1(zw)});
    w2_bc.add(0.0, zw, {fields.dz_w2(zw), f1(zw) / eps});
    for (double x : xs) {
      u2_bc.add(x, zw, {fields.u2(x, zw)});
      w1_bc.add(x, zw, {fields.dz_w1(x, zw), -fields.f2v(x, zw) / eps});
      w3_bc.add(x, zw, {fields.w3(x, zw)});
    }
  }

  ResidualReport report;
  report.checks = {u1_mom.finish(), u2_mom.finish(), w1_tr.finish(),
                   w2_tr.finish(), w3_tr.finish(), u1_bc.finish(),
                   u2_bc.finish(), w1_bc.finish(), w2_bc.finish(),
                   w3_bc.finish()};
  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [](const ResidualCheck& c) { return c.pass; });
  return report;
}

ResidualReport verify_manufactured(const ExactFields& fields) {
  const double se = fields.nu().sqrt_eps;
  std::vector<double> zs;
  // Walls, layers, transition, interior.
  for (int k = 0; k <= 10; ++k) zs.push_back(se * k / 10.0);
  for (int k = 1; k <= 10; ++k) zs.push_back(std::min(1.0, se * (1.0 + k)));
  for (int k = 1; k <= 19; ++k) zs.push_back(k / 20.0);
  for (int k = 0; k <= 10; ++k) zs.push_back(1.0 - se * k / 10.0);
  for (int k = 1; k <= 10; ++k) zs.push_back(std::max(0.0, 1.0 - se * (1.0 + k)));
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

  std::vector<double> xs;
  for (int k = 0; k <= 20; ++k) xs.push_back(k / 20.0);
  return verify_manufactured(fields, zs, xs);
}

}  // namespace slpinn
