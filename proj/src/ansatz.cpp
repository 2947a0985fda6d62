#include "slpinn/ansatz.hpp"

#include "ansatz_internal.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace slpinn {

const char* to_string(Target t) {
  switch (t) {
    case Target::u1: return "u1";
    case Target::u2: return "u2";
    case Target::w2: return "w2";
    case Target::w3: return "w3";
    case Target::w1: return "w1";
  }
  return "?";
}

const char* to_string(Method m) {
  return m == Method::plain ? "plain" : "sl";
}

Target target_from_string(const std::string& s) {
  if (s == "u1") return Target::u1;
  if (s == "u2") return Target::u2;
  if (s == "w1") return Target::w1;
  if (s == "w2") return Target::w2;
  if (s == "w3") return Target::w3;
  throw std::invalid_argument("unknown target: " + s);
}

Method method_from_string(const std::string& s) {
  if (s == "plain") return Method::plain;
  if (s == "sl" || s == "singular_layer" || s == "singular-layer") {
    return Method::singular_layer;
  }
  throw std::invalid_argument("unknown method: " + s);
}

int target_dim(Target t) {
  return (t == Target::u1 || t == Target::w2) ? 1 : 2;
}

void Envelope::eval(const Viscosity& nu, double z, double out[3]) const {
  const double w = (side == Side::left) ? z : 1.0 - z;
  const double se = nu.sqrt_eps;
  const double scale = inv_sqrt_scale ? 1.0 / se : 1.0;
  const double ex = std::exp(-w / se);
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;  // derivatives in w
  switch (power) {
    case 0:
      v0 = ex;
      v1 = -ex / se;
      v2 = ex / nu.eps;
      break;
    case 1:
      v0 = w * ex;
      v1 = ex * (1.0 - w / se);
      v2 = ex * (w / nu.eps - 2.0 / se);
      break;
    case 2:
      v0 = w * w * ex;
      v1 = ex * (2.0 * w - w * w / se);
      v2 = ex * (2.0 - 4.0 * w / se + w * w / nu.eps);
      break;
    default:
      throw std::invalid_argument("Envelope: power must be 0, 1 or 2");
  }
  const double sign = (side == Side::left) ? 1.0 : -1.0;  // dw/dz
  out[0] = scale * v0;
  out[1] = sign * scale * v1;
  out[2] = scale * v2;
}

namespace detail {

int build_contributions(const Ansatz& a, Contribution* out) {
  using Side = Envelope::Side;
  const double eps = a.nu.eps;
  int n = 0;
  out[n++] = Contribution{0, -1, 0, 1.0, false, {}, 0};
  if (a.method == Method::plain) return n;

  const Envelope left0{Side::left, 0, false};
  const Envelope right0{Side::right, 0, false};
  const Envelope left0s{Side::left, 0, true};
  const Envelope right0s{Side::right, 0, true};

  switch (a.target) {
    case Target::u1:
      out[n++] = Contribution{0, 0, 0, -1.0, true, left0, 0};
      out[n++] = Contribution{0, 1, 0, -1.0, true, right0, 0};
      break;
    case Target::u2:
    case Target::w3:
      out[n++] = Contribution{0, 0, 0, -1.0, true, left0, 0};
      out[n++] = Contribution{1, -1, 0, 1.0, true, {Side::left, 1, false}, 0};
      out[n++] = Contribution{0, 1, 0, -1.0, true, right0, 0};
      out[n++] = Contribution{2, -1, 0, 1.0, true, {Side::right, 1, false}, 0};
      break;
    case Target::w2:
      out[n++] = Contribution{-1, 0, 0, 1.0, true, left0s, 1};
      out[n++] = Contribution{0, 0, 1, eps, true, left0s, 0};
      out[n++] = Contribution{-1, 1, 0, -1.0, true, right0s, 1};
      out[n++] = Contribution{0, 1, 1, -eps, true, right0s, 0};
      break;
    case Target::w1:
      out[n++] = Contribution{-1, 0, 0, -1.0, true, left0s, 2};
      out[n++] = Contribution{0, 0, 1, eps, true, left0s, 0};
      out[n++] = Contribution{1, -1, 0, 1.0, true, {Side::left, 2, false}, 0};
      out[n++] = Contribution{-1, 1, 0, 1.0, true, right0s, 2};
      out[n++] = Contribution{0, 1, 1, -eps, true, right0s, 0};
      out[n++] = Contribution{2, -1, 0, 1.0, true, {Side::right, 2, false}, 0};
      break;
  }
  return n;
}

const ShallowNet* net_for_slot(const Ansatz& a, int slot) {
  switch (slot) {
    case 0: return &a.main;
    case 1: return a.cor_left ? &*a.cor_left : nullptr;
    case 2: return a.cor_right ? &*a.cor_right : nullptr;
  }
  return nullptr;
}

int slot_param_offset(const Ansatz& a, int slot) {
  int offset = 0;
  if (slot > 0) offset += a.main.parameter_count();
  if (slot > 1) offset += a.cor_left->parameter_count();
  return offset;
}

}  // namespace detail

namespace {

using detail::Contribution;

bool needs_correctors(Target t, Method m) {
  return m == Method::singular_layer &&
         (t == Target::u2 || t == Target::w3 || t == Target::w1);
}

void check_upstream(const Ansatz& a) {
  auto require = [&](const std::shared_ptr<const Ansatz>& up, Target t,
                     const char* role) {
    if (!up) {
      throw std::invalid_argument(std::string("ansatz for ") +
                                  to_string(a.target) + " needs a frozen " +
                                  role + " model");
    }
    if (up->target != t || up->method != a.method) {
      throw std::invalid_argument(std::string("upstream ") + role +
                                  " model has wrong target or method");
    }
  };
  if (a.target == Target::u2 || a.target == Target::w3 ||
      a.target == Target::w1) {
    require(a.up_u1, Target::u1, "u1");
  }
  if (a.target == Target::w1) {
    require(a.up_w2, Target::w2, "w2");
    require(a.up_w3, Target::w3, "w3");
  }
}

// Binomial coefficients up to order 2.
constexpr double kBinom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};

}  // namespace

Ansatz make_ansatz(Target target, Method method, const Viscosity& nu,
                   std::uint64_t seed, std::shared_ptr<const Ansatz> up_u1,
                   std::shared_ptr<const Ansatz> up_w2,
                   std::shared_ptr<const Ansatz> up_w3, int n_hidden) {
  Ansatz a;
  a.target = target;
  a.method = method;
  a.nu = nu;
  a.up_u1 = std::move(up_u1);
  a.up_w2 = std::move(up_w2);
  a.up_w3 = std::move(up_w3);
  a.main = init_net(target_dim(target), n_hidden, seed);
  if (needs_correctors(target, method)) {
    a.cor_left = init_net(2, n_hidden, seed + 1000);
    a.cor_right = init_net(2, n_hidden, seed + 2000);
  }
  check_upstream(a);
  return a;
}

int trainable_parameter_count(const Ansatz& a) {
  int n = a.main.parameter_count();
  if (a.cor_left) n += a.cor_left->parameter_count();
  if (a.cor_right) n += a.cor_right->parameter_count();
  return n;
}

Vector get_parameters(const Ansatz& a) {
  std::vector<const ShallowNet*> nets{&a.main};
  if (a.cor_left) nets.push_back(&*a.cor_left);
  if (a.cor_right) nets.push_back(&*a.cor_right);
  return flatten_all(nets);
}

void set_parameters(Ansatz& a, const Vector& params) {
  std::vector<ShallowNet*> nets{&a.main};
  if (a.cor_left) nets.push_back(&*a.cor_left);
  if (a.cor_right) nets.push_back(&*a.cor_right);
  unflatten_all(nets, params);
}

Jet predict(const Ansatz& a, double x, double z, int order) {
  if (order < 0 || order > 2) {
    throw std::invalid_argument("predict: order must be in 0..2");
  }
  const int dim = target_dim(a.target);
  Jet out;
  out.n_in = dim;
  out.order = order;

  Contribution cs[8];
  const int n = detail::build_contributions(a, cs);
  for (int ci = 0; ci < n; ++ci) {
    const Contribution& c = cs[ci];
    double e[3] = {1.0, 0.0, 0.0};
    if (c.enveloped) {
      c.env.eval(a.nu, z, e);
      if (e[0] == 0.0 && e[1] == 0.0 && e[2] == 0.0) continue;
    }

    if (c.f_kind == 1) {
      const double A = f1(static_cast<double>(c.wall));
      for (int j = 0; j <= order; ++j) out.d[0][j] += c.coeff * A * e[j];
      continue;
    }
    if (c.f_kind == 2) {
      const double zw = static_cast<double>(c.wall);
      const double A[3] = {f2(a.nu, x, zw), dx_f2(a.nu, x, zw),
                           dxx_f2(a.nu, x, zw)};
      for (int i = 0; i <= order; ++i) {
        for (int j = 0; i + j <= order; ++j) {
          out.d[i][j] += c.coeff * A[i] * e[j];
        }
      }
      continue;
    }

    const ShallowNet* net = detail::net_for_slot(a, c.net_slot);
    if (net == nullptr) {
      throw std::invalid_argument("predict: structure is missing a net");
    }
    const bool net2d = net->n_in == 2;
    if (c.wall >= 0) {
      const double zw = static_cast<double>(c.wall);
      const int x_order = net2d ? order : 0;
      const Jet nj = net2d ? eval_jet(*net, x, zw, x_order + c.base_dz)
                           : eval_jet(*net, zw, c.base_dz);
      for (int i = 0; i <= x_order; ++i) {
        const double ni = nj.d[net2d ? i : 0][c.base_dz];
        for (int j = 0; i + j <= order; ++j) {
          out.d[i][j] += c.coeff * e[j] * ni;
        }
      }
    } else {
      const Jet nj = net2d ? eval_jet(*net, x, z, order)
                           : eval_jet(*net, z, order);
      const int x_order = net2d ? order : 0;
      if (!c.enveloped) {
        for (int i = 0; i <= x_order; ++i) {
          for (int j = 0; i + j <= order; ++j) {
            out.d[i][j] += c.coeff * nj.d[net2d ? i : 0][j];
          }
        }
      } else {
        for (int i = 0; i <= x_order; ++i) {
          for (int j = 0; i + j <= order; ++j) {
            double term = 0.0;
            for (int k = 0; k <= j; ++k) {
              term += kBinom[j][k] * e[k] * nj.d[net2d ? i : 0][j - k];
            }
            out.d[i][j] += c.coeff * term;
          }
        }
      }
    }
  }
  return out;
}

double predict_value(const Ansatz& a, double x, double z) {
  return predict(a, x, z, 0).value();
}

double predict_value(const Ansatz& a, double z) {
  return predict(a, 0.0, z, 0).value();
}

double interior_residual(Target target, const Viscosity& nu, const Jet& p,
                         double u1_value, double w2_value, double w3_value,
                         double x, double z) {
  const double eps = nu.eps;
  switch (target) {
    case Target::u1:
      return p.d[0][0] - eps * p.d[0][2] - f1(z);
    case Target::w2:
      return p.d[0][0] - eps * p.d[0][2] - dz_f1(z);
    case Target::u2:
      return p.d[0][0] - eps * (p.d[2][0] + p.d[0][2]) +
             u1_value * p.d[1][0] - f2(nu, x, z);
    case Target::w3:
      return p.d[0][0] - eps * (p.d[2][0] + p.d[0][2]) +
             u1_value * p.d[1][0] - dx_f2(nu, x, z);
    case Target::w1:
      return p.d[0][0] - eps * (p.d[2][0] + p.d[0][2]) - w2_value * w3_value +
             u1_value * p.d[1][0] + dz_f2(nu, x, z);
  }
  throw std::logic_error("interior_residual: bad target");
}

double residual(const Ansatz& a, double x, double z) {
  check_upstream(a);
  const Jet p = predict(a, x, z, 2);
  double u1v = 0.0, w2v = 0.0, w3v = 0.0;
  if (a.up_u1) u1v = predict_value(*a.up_u1, z);
  if (a.target == Target::w1) {
    w2v = predict_value(*a.up_w2, z);
    w3v = predict_value(*a.up_w3, x, z);
  }
  return interior_residual(a.target, a.nu, p, u1v, w2v, w3v, x, z);
}

double residual(const Ansatz& a, double z) { return residual(a, 0.0, z); }

namespace detail {

void functional_pullback(const Ansatz& a, double x, double z,
                         const PointFunctional& lam, double scale,
                         Vector& grad) {
  Contribution cs[8];
  const int n = build_contributions(a, cs);
  const int dim = target_dim(a.target);
  const int order = lam.order;

  for (int ci = 0; ci < n; ++ci) {
    const Contribution& c = cs[ci];
    if (c.net_slot < 0) continue;  // analytic anchors carry no parameters

    double e[3] = {1.0, 0.0, 0.0};
    if (c.enveloped) {
      c.env.eval(a.nu, z, e);
      if (e[0] == 0.0 && e[1] == 0.0 && e[2] == 0.0) continue;
    }

    const ShallowNet* net = net_for_slot(a, c.net_slot);
    if (net == nullptr) {
      throw std::invalid_argument("pullback: structure is missing a net");
    }
    const bool net2d = net->n_in == 2;
    JetWeights w;
    double point[2];
    int point_len;

    if (c.wall >= 0) {
      const double zw = static_cast<double>(c.wall);
      const int x_order = net2d ? order : 0;
      w.max_order = x_order + c.base_dz;
      for (int i = 0; i <= x_order; ++i) {
        double acc = 0.0;
        for (int j = 0; i + j <= order; ++j) acc += lam.lam[i][j] * e[j];
        w.c[net2d ? i : 0][c.base_dz] += c.coeff * acc;
      }
      if (net2d) {
        point[0] = x;
        point[1] = zw;
        point_len = 2;
      } else {
        point[0] = zw;
        point_len = 1;
      }
    } else {
      w.max_order = order;
      const int x_order = (net2d && dim == 2) ? order : 0;
      for (int i = 0; i <= x_order; ++i) {
        for (int j = 0; i + j <= order; ++j) {
          const double lij = lam.lam[i][j];
          if (lij == 0.0) continue;
          if (!c.enveloped) {
            w.c[i][j] += c.coeff * lij;
          } else {
            for (int k = 0; k <= j; ++k) {
              w.c[i][j - k] += c.coeff * lij * kBinom[j][k] * e[k];
            }
          }
        }
      }
      if (net2d) {
        point[0] = x;
        point[1] = z;
        point_len = 2;
      } else {
        point[0] = z;
        point_len = 1;
      }
    }

    const int offset = slot_param_offset(a, c.net_slot);
    accumulate_pullback(*net, std::span<const double>(point, point_len), w,
                        scale, grad.data() + offset);
  }
}

}  // namespace detail

void save_model(const Ansatz& a, const std::string& path) {
  nlohmann::json j;
  j["format"] = "slpinn-model";
  j["version"] = 1;
  j["target"] = to_string(a.target);
  j["method"] = to_string(a.method);
  j["eps"] = a.nu.eps;
  auto net_shape = [](const ShallowNet& n) {
    return nlohmann::json{{"n_in", n.n_in}, {"n_hidden", n.n_hidden}};
  };
  j["nets"] = nlohmann::json::array({net_shape(a.main)});
  if (a.cor_left) j["nets"].push_back(net_shape(*a.cor_left));
  if (a.cor_right) j["nets"].push_back(net_shape(*a.cor_right));
  const Vector p = get_parameters(a);
  j["params"] = std::vector<double>(p.data(), p.data() + p.size());

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

Ansatz load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "slpinn-model") {
    throw std::runtime_error(path + ": not a model file");
  }

  Ansatz a;
  a.target = target_from_string(j.at("target").get<std::string>());
  a.method = method_from_string(j.at("method").get<std::string>());
  a.nu = Viscosity(j.at("eps").get<double>());

  auto shape_net = [](const nlohmann::json& s) {
    ShallowNet n;
    n.n_in = s.at("n_in").get<int>();
    n.n_hidden = s.at("n_hidden").get<int>();
    n.w1.resize(n.n_hidden, n.n_in);
    n.b1.resize(n.n_hidden);
    n.w2.resize(n.n_hidden);
    return n;
  };
  const auto& nets = j.at("nets");
  a.main = shape_net(nets.at(0));
  if (nets.size() >= 3) {
    a.cor_left = shape_net(nets.at(1));
    a.cor_right = shape_net(nets.at(2));
  }
  const auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(params.size()) != trainable_parameter_count(a)) {
    throw std::runtime_error(path + ": parameter count mismatch");
  }
  set_parameters(a, Eigen::Map<const Vector>(params.data(), params.size()));
  return a;
}

}  // namespace slpinn
