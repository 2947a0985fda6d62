#include "slpinn/loss.hpp"

#include "ansatz_internal.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace slpinn {

namespace {

using detail::Contribution;

constexpr double kBinom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};

std::string point_str(double x, double z) {
  return "(" + std::to_string(x) + ", " + std::to_string(z) + ")";
}

}  // namespace

NonFiniteResidual::NonFiniteResidual(double x_value, double z_value)
    : std::runtime_error("non-finite residual at " + point_str(x_value, z_value)),
      x(x_value),
      z(z_value) {}

int LossEvaluator::add_eval_point(int slot, const double* pt, int pt_len,
                                  int jet_order) {
  // Dedup on exact coordinates; tensor grids share anchor evaluations and
  // the periodic pairs share the x = 0 interior column.
  const auto key = std::make_tuple(slot, pt[0], pt_len == 2 ? pt[1] : -1.0);
  auto [it, inserted] = dedup_.try_emplace(key, 0);
  if (!inserted) {
    EvalPoint& ep = eval_points_[it->second];
    ep.jet_order = std::max(ep.jet_order, jet_order);
    return it->second;
  }
  EvalPoint ep;
  ep.slot = slot;
  ep.pt[0] = pt[0];
  ep.pt[1] = pt_len == 2 ? pt[1] : 0.0;
  ep.pt_len = pt_len;
  ep.jet_order = jet_order;
  eval_points_.push_back(ep);
  it->second = static_cast<int>(eval_points_.size()) - 1;
  return it->second;
}

void LossEvaluator::add_functional(const Ansatz& a, double x, double z,
                                   const double lam[3][3], int lam_order,
                                   double sign, double& const_accum,
                                   std::vector<UnitTerm>& terms) {
  Contribution cs[8];
  const int n = detail::build_contributions(a, cs);

  for (int ci = 0; ci < n; ++ci) {
    const Contribution& c = cs[ci];
    double e[3] = {1.0, 0.0, 0.0};
    if (c.enveloped) {
      c.env.eval(a.nu, z, e);
      if (e[0] == 0.0 && e[1] == 0.0 && e[2] == 0.0) continue;
    }

    if (c.net_slot < 0) {
      // Analytic anchor: parameter-free, folds into the constant.
      const double zw = static_cast<double>(c.wall);
      double A[3] = {0.0, 0.0, 0.0};
      if (c.f_kind == 1) {
        A[0] = f1(zw);
      } else {
        A[0] = f2(a.nu, x, zw);
        A[1] = dx_f2(a.nu, x, zw);
        A[2] = dxx_f2(a.nu, x, zw);
      }
      double acc = 0.0;
      for (int i = 0; i <= lam_order; ++i) {
        for (int j = 0; i + j <= lam_order; ++j) {
          acc += lam[i][j] * A[i] * e[j];
        }
      }
      const_accum += sign * c.coeff * acc;
      continue;
    }

    const ShallowNet* net = detail::net_for_slot(a, c.net_slot);
    const bool net2d = net->n_in == 2;
    UnitTerm term;
    double pt[2];
    int pt_len;
    bool nonzero = false;

    if (c.wall >= 0) {
      const int x_order = net2d ? lam_order : 0;
      term.w.max_order = x_order + c.base_dz;
      for (int i = 0; i <= x_order; ++i) {
        double acc = 0.0;
        for (int j = 0; i + j <= lam_order; ++j) acc += lam[i][j] * e[j];
        const double wij = sign * c.coeff * acc;
        term.w.c[net2d ? i : 0][c.base_dz] += wij;
        if (wij != 0.0) nonzero = true;
      }
      if (net2d) {
        pt[0] = x;
        pt[1] = static_cast<double>(c.wall);
        pt_len = 2;
      } else {
        pt[0] = static_cast<double>(c.wall);
        pt_len = 1;
      }
    } else {
      term.w.max_order = lam_order;
      const int x_order = net2d ? lam_order : 0;
      for (int i = 0; i <= x_order; ++i) {
        for (int j = 0; i + j <= lam_order; ++j) {
          const double lij = lam[i][j];
          if (lij == 0.0) continue;
          if (!c.enveloped) {
            term.w.c[i][j] += sign * c.coeff * lij;
            nonzero = true;
          } else {
            for (int k = 0; k <= j; ++k) {
              const double wij = sign * c.coeff * lij * kBinom[j][k] * e[k];
              term.w.c[i][j - k] += wij;
              if (wij != 0.0) nonzero = true;
            }
          }
        }
      }
      if (net2d) {
        pt[0] = x;
        pt[1] = z;
        pt_len = 2;
      } else {
        pt[0] = z;
        pt_len = 1;
      }
    }
    if (!nonzero) continue;
    term.eval_idx = add_eval_point(c.net_slot, pt, pt_len, term.w.max_order);
    terms.push_back(term);
  }
}

LossEvaluator::LossEvaluator(const Ansatz& a, TrainingSets sets)
    : sets_(std::move(sets)) {
  const int dim = target_dim(a.target);
  const bool plain = a.method == Method::plain;
  const double eps = a.nu.eps;

  if (dim == 1 && (!sets_.gamma_x.empty() || !sets_.periodic_z.empty())) {
    throw std::invalid_argument(
        "TrainingSets: 1-D targets take interior points only");
  }
  if (dim == 2 && !plain && !sets_.gamma_x.empty()) {
    throw std::invalid_argument(
        "TrainingSets: singular-layer 2-D losses have no wall penalty set");
  }
  if (sets_.interior.empty()) {
    throw std::invalid_argument("TrainingSets: interior set is empty");
  }
  if ((a.target == Target::u2 || a.target == Target::w3 ||
       a.target == Target::w1) &&
      !a.up_u1) {
    throw std::invalid_argument("loss: missing frozen u1 model");
  }
  if (a.target == Target::w1 && (!a.up_w2 || !a.up_w3)) {
    throw std::invalid_argument("loss: missing frozen w2/w3 models");
  }

  // Interior residual units.
  const double inv_n = 1.0 / static_cast<double>(sets_.interior.size());
  for (const auto& p : sets_.interior) {
    const double x = dim == 2 ? p[0] : 0.0;
    const double z = p[1];

    double lam[3][3] = {};
    lam[0][0] = 1.0;
    lam[0][2] = -eps;
    if (dim == 2) lam[2][0] = -eps;

    double cterm = 0.0;
    switch (a.target) {
      case Target::u1:
        cterm = -f1(z);
        break;
      case Target::w2:
        cterm = -dz_f1(z);
        break;
      case Target::u2:
        lam[1][0] = predict_value(*a.up_u1, z);
        cterm = -f2(a.nu, x, z);
        break;
      case Target::w3:
        lam[1][0] = predict_value(*a.up_u1, z);
        cterm = -dx_f2(a.nu, x, z);
        break;
      case Target::w1:
        lam[1][0] = predict_value(*a.up_u1, z);
        cterm = -predict_value(*a.up_w2, z) * predict_value(*a.up_w3, x, z) +
                dz_f2(a.nu, x, z);
        break;
    }

    Unit unit;
    unit.x = x;
    unit.z = z;
    unit.sq_weight = inv_n;
    unit.term_begin = static_cast<int>(terms_.size());
    add_functional(a, x, z, lam, 2, 1.0, cterm, terms_);
    unit.term_end = static_cast<int>(terms_.size());
    unit.const_term = cterm;
    units_.push_back(unit);
  }

  // Plain-method boundary penalties. The 1-D losses add their two wall
  // penalties unaveraged; the 2-D losses average over gamma_x.
  if (plain && dim == 1) {
    for (int wall = 0; wall <= 1; ++wall) {
      const double zw = static_cast<double>(wall);
      double lam[3][3] = {};
      double cterm = 0.0;
      if (a.target == Target::u1) {
        lam[0][0] = 1.0;  // |u(wall)|^2
      } else {
        lam[0][1] = 1.0;  // |u'(wall) + f1(wall)/eps|^2
        cterm = f1(zw) / eps;
      }
      Unit unit;
      unit.x = 0.0;
      unit.z = zw;
      unit.sq_weight = 1.0;
      unit.term_begin = static_cast<int>(terms_.size());
      add_functional(a, 0.0, zw, lam, 1, 1.0, cterm, terms_);
      unit.term_end = static_cast<int>(terms_.size());
      unit.const_term = cterm;
      units_.push_back(unit);
    }
  }
  if (plain && dim == 2 && !sets_.gamma_x.empty()) {
    const double inv_g = 1.0 / static_cast<double>(sets_.gamma_x.size());
    for (double x : sets_.gamma_x) {
      for (int wall = 0; wall <= 1; ++wall) {
        const double zw = static_cast<double>(wall);
        double lam[3][3] = {};
        double cterm = 0.0;
        if (a.target == Target::w1) {
          lam[0][1] = 1.0;  // |dz w(x, wall) - f2(x, wall)/eps|^2
          cterm = -f2(a.nu, x, zw) / eps;
        } else {
          lam[0][0] = 1.0;  // |u(x, wall)|^2
        }
        Unit unit;
        unit.x = x;
        unit.z = zw;
        unit.sq_weight = inv_g;
        unit.term_begin = static_cast<int>(terms_.size());
        add_functional(a, x, zw, lam, 1, 1.0, cterm, terms_);
        unit.term_end = static_cast<int>(terms_.size());
        unit.const_term = cterm;
        units_.push_back(unit);
      }
    }
  }

  // Periodic pairing |P(0, z) - P(1, z)|^2, both methods, 2-D targets.
  if (dim == 2 && !sets_.periodic_z.empty()) {
    const double inv_b = 1.0 / static_cast<double>(sets_.periodic_z.size());
    for (double z : sets_.periodic_z) {
      double lam[3][3] = {};
      lam[0][0] = 1.0;
      Unit unit;
      unit.x = 0.0;
      unit.z = z;
      unit.sq_weight = inv_b;
      double cterm = 0.0;
      unit.term_begin = static_cast<int>(terms_.size());
      add_functional(a, 0.0, z, lam, 0, 1.0, cterm, terms_);
      add_functional(a, 1.0, z, lam, 0, -1.0, cterm, terms_);
      unit.term_end = static_cast<int>(terms_.size());
      unit.const_term = cterm;
      units_.push_back(unit);
    }
  }

  tables_.resize(eval_points_.size());
  jets_.resize(eval_points_.size());
  residuals_.resize(units_.size());
}

double LossEvaluator::run(const Ansatz& a, Vector* grad) {
  const bool with_grad = grad != nullptr;
  for (std::size_t i = 0; i < eval_points_.size(); ++i) {
    const EvalPoint& ep = eval_points_[i];
    const ShallowNet* net = detail::net_for_slot(a, ep.slot);
    const std::span<const double> pt(ep.pt, static_cast<std::size_t>(ep.pt_len));
    tables_[i].compute(*net, pt, ep.jet_order + (with_grad ? 1 : 0));
    jets_[i] = jet_from_table(*net, tables_[i], ep.jet_order);
  }

  double loss = 0.0;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const Unit& unit = units_[u];
    double res = unit.const_term;
    for (int t = unit.term_begin; t < unit.term_end; ++t) {
      const UnitTerm& term = terms_[t];
      const Jet& jet = jets_[term.eval_idx];
      double dot = 0.0;
      for (int i = 0; i <= term.w.max_order; ++i) {
        for (int j = 0; i + j <= term.w.max_order; ++j) {
          const double c = term.w.c[i][j];
          if (c != 0.0) dot += c * jet.d[i][j];
        }
      }
      res += dot;
    }
    if (!std::isfinite(res)) throw NonFiniteResidual(unit.x, unit.z);
    residuals_[u] = res;
    loss += unit.sq_weight * res * res;
  }

  if (with_grad) {
    grad->setZero();
    for (std::size_t u = 0; u < units_.size(); ++u) {
      const Unit& unit = units_[u];
      const double scale = 2.0 * unit.sq_weight * residuals_[u];
      if (scale == 0.0) continue;
      for (int t = unit.term_begin; t < unit.term_end; ++t) {
        const UnitTerm& term = terms_[t];
        const EvalPoint& ep = eval_points_[term.eval_idx];
        const ShallowNet* net = detail::net_for_slot(a, ep.slot);
        const std::span<const double> pt(ep.pt,
                                         static_cast<std::size_t>(ep.pt_len));
        pullback_from_table(*net, tables_[term.eval_idx], pt, term.w, scale,
                            grad->data() + detail::slot_param_offset(a, ep.slot));
      }
    }
  }
  return loss;
}

double LossEvaluator::value(const Ansatz& a) { return run(a, nullptr); }

double LossEvaluator::value_and_gradient(const Ansatz& a, Vector& grad) {
  grad.resize(trainable_parameter_count(a));
  return run(a, &grad);
}

double loss_value(const Ansatz& a, const TrainingSets& sets) {
  LossEvaluator ev(a, sets);
  return ev.value(a);
}

Vector loss_gradient(const Ansatz& a, const TrainingSets& sets) {
  LossEvaluator ev(a, sets);
  Vector grad;
  ev.value_and_gradient(a, grad);
  return grad;
}

Objective make_objective(Ansatz& a, const TrainingSets& sets) {
  auto ev = std::make_shared<LossEvaluator>(a, sets);
  Ansatz* target = &a;
  return [ev, target](const Vector& params, Vector& grad) -> double {
    set_parameters(*target, params);
    grad.resize(trainable_parameter_count(*target));
    try {
      return ev->value_and_gradient(*target, grad);
    } catch (const NonFiniteResidual&) {
      grad.setZero();
      return std::numeric_limits<double>::infinity();
    }
  };
}

}  // namespace slpinn
