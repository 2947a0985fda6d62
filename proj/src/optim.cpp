#include "slpinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace slpinn {

void LbfgsConfig::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw std::invalid_argument("LbfgsConfig: need 0 < c1 < c2 < 1");
  }
  if (history < 1 || max_iter < 1 || max_ls < 1 || !(init_step > 0.0) ||
      !(tol > 0.0)) {
    throw std::invalid_argument("LbfgsConfig: invalid field");
  }
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iter: return "max_iter";
    case StopReason::line_search_failure: return "line-search failure";
  }
  return "unknown";
}

void LossTrace::write_csv(std::ostream& out) const {
  out << "iter,loss,grad_inf_norm,step\n";
  char buf[128];
  for (const TraceRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.iter, r.loss,
                  r.grad_inf_norm, r.step);
    out << buf;
  }
}

void LossTrace::write_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_csv(out);
}

namespace {

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative g.d
};

// Minimizer of the cubic Hermite interpolant of (lo, hi); exact on cubics
// and hence on 1-D restrictions of quadratics. NaN when degenerate.
double cubic_minimizer(const LinePoint& lo, const LinePoint& hi) {
  const double d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
  const double disc = d1 * d1 - lo.df * hi.df;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  double d2 = std::sqrt(disc);
  if (hi.alpha < lo.alpha) d2 = -d2;
  const double denom = hi.df - lo.df + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return hi.alpha - (hi.alpha - lo.alpha) * (hi.df + d2 - d1) / denom;
}

struct WolfeResult {
  bool ok = false;
  LinePoint pt;
  Vector x;
  Vector g;
};

// Strong Wolfe line search (bracket + zoom with cubic interpolation).
// `evals` is the remaining objective-evaluation budget, shared with the
// caller so one iteration never exceeds config.max_ls evaluations.
WolfeResult wolfe_search(const Objective& objective, const Vector& x0,
                         double f0, const Vector& g0, const Vector& dir,
                         double trial, const LbfgsConfig& cfg) {
  WolfeResult res;
  const double df0 = g0.dot(dir);
  if (!(df0 < 0.0)) return res;  // not a descent direction

  const double armijo_slope = cfg.c1 * df0;
  const double curv_bound = cfg.c2 * std::abs(df0);
  int evals = cfg.max_ls;

  Vector x(x0.size());
  Vector g(x0.size());
  auto probe = [&](double alpha, LinePoint& p) -> bool {
    x = x0 + alpha * dir;
    const double f = objective(x, g);
    --evals;
    p.alpha = alpha;
    p.f = f;
    p.df = g.dot(dir);
    return std::isfinite(f) && std::isfinite(p.df);
  };
  auto wolfe_ok = [&](const LinePoint& p) {
    return p.f <= f0 + p.alpha * armijo_slope && std::abs(p.df) <= curv_bound;
  };
  auto accept = [&](const LinePoint& p) {
    res.ok = true;
    res.pt = p;
    res.x = x;
    res.g = g;
  };

  LinePoint prev{0.0, f0, df0};
  double alpha = trial;
  LinePoint lo, hi;
  bool bracketed = false;

  // Bracketing phase.
  while (evals > 0) {
    LinePoint cur;
    if (!probe(alpha, cur)) {
      // Non-finite: step too far, pull back toward the last good point.
      alpha = 0.5 * (prev.alpha + alpha);
      if (!(alpha > prev.alpha) || alpha < 1e-300) return res;
      continue;
    }
    if (cur.f > f0 + cur.alpha * armijo_slope ||
        (prev.alpha > 0.0 && cur.f >= prev.f)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (std::abs(cur.df) <= curv_bound) {
      accept(cur);
      return res;
    }
    if (cur.df >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = cur;
    alpha *= 2.0;
    if (alpha > 1e20) return res;
  }
  if (!bracketed) return res;

  // Zoom phase: lo has the lower f and satisfies Armijo; the minimum lies
  // between lo and hi.
  while (evals > 0) {
    double mid = cubic_minimizer(lo, hi);
    const double a = std::min(lo.alpha, hi.alpha);
    const double b = std::max(lo.alpha, hi.alpha);
    if (!std::isfinite(mid) || mid <= a || mid >= b) {
      mid = 0.5 * (a + b);
    }
    LinePoint cur;
    if (!probe(mid, cur)) {
      // Non-finite: shrink the interval toward lo.
      if (b - a < 1e-300) return res;
      hi = LinePoint{mid, std::numeric_limits<double>::infinity(), 0.0};
      continue;
    }
    if (cur.f > f0 + cur.alpha * armijo_slope || cur.f >= lo.f) {
      hi = cur;
    } else {
      if (std::abs(cur.df) <= curv_bound) {
        accept(cur);
        return res;
      }
      if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
    if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) {
      return res;  // interval collapsed below rounding resolution
    }
  }
  return res;
}

}  // namespace

MinimizeResult minimize(const Objective& objective, const Vector& x0,
                        const LbfgsConfig& config) {
  config.validate();
  const Eigen::Index n = x0.size();

  Vector x = x0;
  Vector g(n);
  double f = objective(x, g);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw std::invalid_argument("minimize: objective non-finite at x0");
  }

  MinimizeResult result;
  result.trace.records.push_back({0, f, g.lpNorm<Eigen::Infinity>(), 0.0});
  result.x = x;
  result.loss = f;

  if (g.lpNorm<Eigen::Infinity>() < config.tol) {
    result.trace.reason = StopReason::tolerance;
    return result;
  }

  // Curvature pairs, newest at the back.
  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;

  Vector q(n), dir(n);
  std::vector<double> alpha_buf;

  StopReason reason = StopReason::max_iter;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const double ginf = g.lpNorm<Eigen::Infinity>();
    if (ginf < config.tol) {
      // Gradient already converged: a null step closes the loss-decrease
      // condition as well.
      result.trace.records.push_back({iter, f, ginf, 0.0});
      reason = StopReason::tolerance;
      break;
    }

    // Two-loop recursion.
    q = g;
    const int m = static_cast<int>(s_hist.size());
    alpha_buf.assign(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
      alpha_buf[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_buf[i] * y_hist[i];
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha_buf[i] - beta) * s_hist[i];
    }
    dir = -q;
    if (!dir.allFinite() || !(g.dot(dir) < 0.0)) {
      dir = -g;  // fall back to steepest descent
    }

    const double trial = (iter == 1) ? config.init_step : 1.0;
    WolfeResult ls = wolfe_search(objective, x, f, g, dir, trial, config);
    if (!ls.ok) {
      reason = StopReason::line_search_failure;
      break;
    }

    // Post-acceptance recheck (loose slack for rounding).
    const double df0 = g.dot(dir);
    const bool armijo =
        ls.pt.f <= f + config.c1 * ls.pt.alpha * df0 + 1e-12 * std::abs(f);
    const bool curv = std::abs(ls.pt.df) <=
                      config.c2 * std::abs(df0) * (1.0 + 1e-12) + 1e-300;
    if (!armijo || !curv) ++result.trace.wolfe_violations;

    Vector s = ls.x - x;
    Vector y = ls.g - g;
    const double sy = s.dot(y);
    const double f_prev = f;
    x = ls.x;
    g = ls.g;
    f = ls.pt.f;

    const double new_ginf = g.lpNorm<Eigen::Infinity>();
    result.trace.records.push_back({iter, f, new_ginf, ls.pt.alpha});
    if (f <= result.loss) {
      result.loss = f;
      result.x = x;
    }

    if (sy > 0.0 && std::isfinite(sy)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      gamma = sy / y_hist.back().squaredNorm();
      if (static_cast<int>(s_hist.size()) > config.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    } else {
      ++result.trace.skipped_pairs;
    }

    if (std::abs(f - f_prev) < config.tol && new_ginf < config.tol) {
      reason = StopReason::tolerance;
      break;
    }
  }

  result.trace.reason = reason;
  return result;
}

}  // namespace slpinn
