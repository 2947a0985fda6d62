#include "slpinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slpinn {

namespace {

void append_uniform(std::vector<double>& out, double lo, double hi, int n,
                    bool include_lo, bool include_hi) {
  // n points; open ends are realized by sampling the open interval uniformly.
  if (include_lo && include_hi) {
    for (int k = 0; k < n; ++k) {
      out.push_back(lo + (hi - lo) * k / static_cast<double>(n - 1));
    }
  } else if (!include_lo && !include_hi) {
    for (int k = 1; k <= n; ++k) {
      out.push_back(lo + (hi - lo) * k / static_cast<double>(n + 1));
    }
  } else {
    throw std::logic_error("append_uniform: unsupported end combination");
  }
}

}  // namespace

LayeredGrid make_layered_grid(const Viscosity& nu, int n_z, int n_x) {
  if (n_z < 12 || n_x < 2) {
    throw std::invalid_argument("make_layered_grid: grid too small");
  }
  const int n_layer = std::max(2, n_z / 12);
  const int n_inner = n_z - 2 * n_layer;
  const double se = std::min(nu.sqrt_eps, 1.0 / 3.0);

  LayeredGrid grid;
  grid.z.reserve(n_z);
  append_uniform(grid.z, 0.0, se, n_layer, true, true);
  append_uniform(grid.z, se, 1.0 - se, n_inner, false, false);
  append_uniform(grid.z, 1.0 - se, 1.0, n_layer, true, true);

  grid.x.reserve(n_x);
  append_uniform(grid.x, 0.0, 1.0, n_x, true, true);
  return grid;
}

LayeredGrid make_layered_grid(const Viscosity& nu) {
  return make_layered_grid(nu, 600, 500);
}

RelErrors relative_errors(const std::function<double(double, double)>& pred,
                          const std::function<double(double, double)>& exact,
                          const LayeredGrid& grid, bool two_d) {
  double diff2 = 0.0, ref2 = 0.0, diff_max = 0.0, ref_max = 0.0;
  auto visit = [&](double x, double z) {
    const double p = pred(x, z);
    const double e = exact(x, z);
    const double d = p - e;
    diff2 += d * d;
    ref2 += e * e;
    diff_max = std::max(diff_max, std::abs(d));
    ref_max = std::max(ref_max, std::abs(e));
  };
  if (two_d) {
    for (double x : grid.x) {
      for (double z : grid.z) visit(x, z);
    }
  } else {
    for (double z : grid.z) visit(0.0, z);
  }
  if (ref2 == 0.0 || ref_max == 0.0) {
    throw std::invalid_argument("relative_errors: reference vanishes on grid");
  }
  return RelErrors{std::sqrt(diff2 / ref2), diff_max / ref_max};
}

ErrorRow error_row(const Ansatz& a, const ExactFields& fields) {
  const LayeredGrid grid = make_layered_grid(a.nu);
  const bool two_d = target_dim(a.target) == 2;

  std::function<double(double, double)> exact;
  switch (a.target) {
    case Target::u1:
      exact = [&](double, double z) { return fields.u1(z); };
      break;
    case Target::u2:
      exact = [&](double x, double z) { return fields.u2(x, z); };
      break;
    case Target::w1:
      exact = [&](double x, double z) { return fields.w1(x, z); };
      break;
    case Target::w2:
      exact = [&](double, double z) { return fields.w2(z); };
      break;
    case Target::w3:
      exact = [&](double x, double z) { return fields.w3(x, z); };
      break;
  }
  auto pred = [&](double x, double z) { return predict_value(a, x, z); };

  const RelErrors err = relative_errors(pred, exact, grid, two_d);
  return ErrorRow{a.nu.eps, a.target, a.method, err.rel_l2, err.rel_linf};
}

namespace {

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[7] = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972,
    0.0,
    0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
constexpr double kGlWeight[7] = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

struct QuadResult {
  double integral = 0.0;
  double abs_integral = 0.0;
};

QuadResult integrate_panels(const std::function<double(double)>& f,
                            const std::vector<double>& knots, int split) {
  QuadResult r;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double width = (knots[i + 1] - knots[i]) / split;
    for (int s = 0; s < split; ++s) {
      const double lo = knots[i] + s * width;
      const double mid = lo + 0.5 * width;
      const double half = 0.5 * width;
      double acc = 0.0, aacc = 0.0;
      for (int g = 0; g < 7; ++g) {
        const double v = f(mid + half * kGlNode[g]);
        acc += kGlWeight[g] * v;
        aacc += kGlWeight[g] * std::abs(v);
      }
      r.integral += half * acc;
      r.abs_integral += half * aacc;
    }
  }
  return r;
}

std::vector<double> graded_knots(const Viscosity& nu) {
  const double se = nu.sqrt_eps;
  const double fine = se / 20.0;
  const double layer = std::min(10.0 * se, 0.5);
  const double coarse = 1.0 / 64.0;

  std::vector<double> left;
  left.push_back(0.0);
  while (left.back() < layer) {
    left.push_back(std::min(layer, left.back() + fine));
  }
  // Geometric coarsening from the layer edge to the interior cap.
  double h = fine;
  while (left.back() < 0.5) {
    h = std::min(h * 1.5, coarse);
    left.push_back(std::min(0.5, left.back() + h));
  }

  std::vector<double> knots;
  knots.reserve(2 * left.size());
  for (double v : left) knots.push_back(v);
  for (std::size_t i = left.size(); i-- > 0;) {
    const double mirrored = 1.0 - left[i];
    if (mirrored > knots.back()) knots.push_back(mirrored);
  }
  return knots;
}

}  // namespace

double layered_quadrature(const std::function<double(double)>& f,
                          const Viscosity& nu) {
  const std::vector<double> knots = graded_knots(nu);
  QuadResult prev = integrate_panels(f, knots, 1);
  for (int refinement = 1; refinement <= 2; ++refinement) {
    const QuadResult cur = integrate_panels(f, knots, 1 << refinement);
    // The abs_integral term is the summation rounding floor; it decides
    // convergence only for integrals that cancel to zero.
    const double tol =
        1e-8 * std::abs(cur.integral) + 1e-12 * cur.abs_integral + 1e-300;
    if (std::abs(cur.integral - prev.integral) < tol) return cur.integral;
    prev = cur;
  }
  throw std::runtime_error(
      "layered_quadrature: no convergence after two refinements");
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need >= 2 samples");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("loglog_slope: nonpositive sample");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) {
    throw std::runtime_error("loglog_slope: degenerate abscissae");
  }
  return (n * sxy - sx * sy) / denom;
}

SlopeFit inviscid_rate_check(std::span<const double> eps_list) {
  if (eps_list.size() < 4) {
    throw std::invalid_argument("inviscid_rate_check: need >= 4 viscosities");
  }
  SlopeFit fit;
  for (double eps : eps_list) {
    const Viscosity nu(eps);
    const double norm2 = layered_quadrature(
        [&](double z) {
          const double d = u1_exact(nu, z) - u1_inviscid(z);
          return d * d;
        },
        nu);
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
      throw std::runtime_error("inviscid_rate_check: degenerate norm");
    }
    fit.eps.push_back(eps);
    fit.values.push_back(std::sqrt(norm2));
  }
  fit.slope = loglog_slope(fit.eps, fit.values);
  return fit;
}

WeakLimitRecord weak_vorticity_limit_check(
    const std::function<double(double)>& psi,
    std::span<const double> eps_list) {
  if (eps_list.empty()) {
    throw std::invalid_argument("weak_vorticity_limit_check: empty eps list");
  }
  WeakLimitRecord rec;
  // The limit functional only involves the inviscid vorticity and the wall
  // values; evaluate it on the finest sweep viscosity's mesh.
  const Viscosity nu_ref(eps_list.back());
  rec.target = layered_quadrature(
                   [&](double z) { return (1.0 - 2.0 * z) * psi(z); }, nu_ref) +
               psi(0.0) - psi(1.0);

  std::vector<double> fit_eps, fit_delta;
  for (double eps : eps_list) {
    const Viscosity nu(eps);
    const double moment = layered_quadrature(
        [&](double z) { return omega_exact(nu, 2, 0.0, z) * psi(z); }, nu);
    const double delta = std::abs(moment - rec.target);
    rec.eps.push_back(eps);
    rec.deltas.push_back(delta);
    if (delta > 1e-13 * std::max(1.0, std::abs(rec.target))) {
      fit_eps.push_back(eps);
      fit_delta.push_back(delta);
    }
  }
  rec.slope = (fit_eps.size() >= 2)
                  ? loglog_slope(fit_eps, fit_delta)
                  : std::numeric_limits<double>::quiet_NaN();
  return rec;
}

SlopeFit corrector_norm_check(int m, double p,
                              std::span<const double> eps_list) {
  if (m < 0 || m > 2) {
    throw std::invalid_argument("corrector_norm_check: m must be in 0..2");
  }
  const bool inf_norm = std::isinf(p);
  if (!inf_norm && p != 1.0 && p != 2.0) {
    throw std::invalid_argument("corrector_norm_check: p must be 1, 2 or inf");
  }
  if (eps_list.size() < 2) {
    throw std::invalid_argument("corrector_norm_check: need >= 2 viscosities");
  }

  const double amp = f1(0.0);  // inviscid wall value carried by the profile
  SlopeFit fit;
  for (double eps : eps_list) {
    const Viscosity nu(eps);
    const double deriv_scale = std::pow(nu.sqrt_eps, -m);
    double norm;
    if (inf_norm) {
      const LayeredGrid grid = make_layered_grid(nu);
      double mx = 0.0;
      for (double z : grid.z) {
        mx = std::max(mx, amp * deriv_scale * std::exp(-z / nu.sqrt_eps));
      }
      norm = mx;
    } else {
      const double integral = layered_quadrature(
          [&](double z) {
            return std::pow(amp * deriv_scale * std::exp(-z / nu.sqrt_eps), p);
          },
          nu);
      norm = std::pow(integral, 1.0 / p);
    }
    fit.eps.push_back(eps);
    fit.values.push_back(norm);
  }
  fit.slope = loglog_slope(fit.eps, fit.values);
  return fit;
}

}  // namespace slpinn
