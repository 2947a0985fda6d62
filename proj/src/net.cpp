#include "slpinn/net.hpp"

#include <cmath>
#include <stdexcept>

namespace slpinn {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

ShallowNet init_net(int n_in, int n_hidden, std::uint64_t seed) {
  if (n_in != 1 && n_in != 2) {
    throw std::invalid_argument("init_net: n_in must be 1 or 2");
  }
  if (n_hidden < 1) {
    throw std::invalid_argument("init_net: n_hidden must be >= 1");
  }
  ShallowNet net;
  net.n_in = n_in;
  net.n_hidden = n_hidden;
  net.w1.resize(n_hidden, n_in);
  net.b1 = Vector::Zero(n_hidden);
  net.w2.resize(n_hidden);
  net.b2 = 0.0;

  SplitMix64 rng(seed);
  const double bound1 = std::sqrt(6.0 / (n_in + n_hidden));
  for (int j = 0; j < n_hidden; ++j) {
    for (int i = 0; i < n_in; ++i) {
      net.w1(j, i) = rng.uniform(-bound1, bound1);
    }
  }
  const double bound2 = std::sqrt(6.0 / (n_hidden + 1));
  for (int j = 0; j < n_hidden; ++j) {
    net.w2(j) = rng.uniform(-bound2, bound2);
  }
  return net;
}

double Jet::partial(int ix, int iz) const {
  if (!has(ix, iz)) {
    throw std::out_of_range("Jet::partial: multi-index beyond stored order");
  }
  return d[ix][iz];
}

namespace {

// T[k] = k-th derivative of tanh at a, k = 0..upto (upto <= 4).
inline void tanh_derivs(double a, int upto, double T[5]) {
  const double t = std::tanh(a);
  const double u = 1.0 - t * t;
  T[0] = t;
  if (upto >= 1) T[1] = u;
  if (upto >= 2) T[2] = -2.0 * t * u;
  if (upto >= 3) T[3] = u * (6.0 * t * t - 2.0);
  if (upto >= 4) T[4] = t * u * (16.0 - 24.0 * t * t);
}

inline void check_point(const ShallowNet& net, std::span<const double> point) {
  if (static_cast<int>(point.size()) != net.n_in) {
    throw std::invalid_argument("eval_jet: point size does not match n_in");
  }
}

}  // namespace

void ActivationTable::compute(const ShallowNet& net,
                              std::span<const double> point, int order) {
  if (order < 0 || order > 4) {
    throw std::invalid_argument("ActivationTable: t_order must be in 0..4");
  }
  check_point(net, point);
  t_order = order;
  n_hidden = net.n_hidden;
  tab.resize(static_cast<std::size_t>(order + 1) * n_hidden);

  const bool two_d = net.n_in == 2;
  const double px0 = two_d ? point[0] : 0.0;
  const double pz0 = two_d ? point[1] : point[0];
  double T[5];
  for (int j = 0; j < n_hidden; ++j) {
    const double a = (two_d ? net.w1(j, 0) * px0 : 0.0) +
                     net.w1(j, two_d ? 1 : 0) * pz0 + net.b1(j);
    tanh_derivs(a, order, T);
    for (int k = 0; k <= order; ++k) tab[k * n_hidden + j] = T[k];
  }
}

Jet jet_from_table(const ShallowNet& net, const ActivationTable& table,
                   int order) {
  if (order < 0 || order > 3 || order > table.t_order) {
    throw std::invalid_argument("jet_from_table: bad order");
  }
  Jet jet;
  jet.n_in = net.n_in;
  jet.order = order;
  jet.d[0][0] = net.b2;

  const bool two_d = net.n_in == 2;
  for (int j = 0; j < net.n_hidden; ++j) {
    const double wx = two_d ? net.w1(j, 0) : 0.0;
    const double wz = two_d ? net.w1(j, 1) : net.w1(j, 0);
    const double out = net.w2(j);

    // Monomials w1x^i, w1z^k multiplying the chain rule.
    double powx[4] = {1.0, wx, wx * wx, wx * wx * wx};
    double powz[4] = {1.0, wz, wz * wz, wz * wz * wz};
    for (int ix = 0; ix <= order; ++ix) {
      if (!two_d && ix > 0) break;
      for (int iz = 0; ix + iz <= order; ++iz) {
        jet.d[ix][iz] += out * table.T(ix + iz, j) * powx[ix] * powz[iz];
      }
    }
  }
  return jet;
}

namespace {

ActivationTable& scratch_table() {
  thread_local ActivationTable table;
  return table;
}

}  // namespace

Jet eval_jet(const ShallowNet& net, std::span<const double> point, int order) {
  if (order < 0 || order > 3) {
    throw std::invalid_argument("eval_jet: order must be in 0..3");
  }
  ActivationTable& table = scratch_table();
  table.compute(net, point, order);
  return jet_from_table(net, table, order);
}

Jet eval_jet(const ShallowNet& net, double z, int order) {
  const double pt[1] = {z};
  return eval_jet(net, std::span<const double>(pt, 1), order);
}

Jet eval_jet(const ShallowNet& net, double x, double z, int order) {
  const double pt[2] = {x, z};
  return eval_jet(net, std::span<const double>(pt, 2), order);
}

void pullback_from_table(const ShallowNet& net, const ActivationTable& table,
                         std::span<const double> point,
                         const JetWeights& weights, double scale,
                         double* grad) {
  check_point(net, point);
  const int order = weights.max_order;
  if (order < 0 || order > 3 || order + 1 > table.t_order) {
    throw std::invalid_argument("pullback_from_table: bad order");
  }

  const bool two_d = net.n_in == 2;
  const double px0 = two_d ? point[0] : 0.0;
  const double pz0 = two_d ? point[1] : point[0];
  const int h = net.n_hidden;

  double* gw1 = grad;                     // h * n_in
  double* gb1 = grad + h * net.n_in;      // h
  double* gw2 = gb1 + h;                  // h
  double* gb2 = gw2 + h;                  // 1

  for (int j = 0; j < h; ++j) {
    const double wx = two_d ? net.w1(j, 0) : 0.0;
    const double wz = two_d ? net.w1(j, 1) : net.w1(j, 0);

    double powx[4] = {1.0, wx, wx * wx, wx * wx * wx};
    double powz[4] = {1.0, wz, wz * wz, wz * wz * wz};

    // S[m]: total weight on tanh^(m); SX/SZ collect d/dw1 of the monomials.
    double S[4] = {0, 0, 0, 0};
    double SX[4] = {0, 0, 0, 0};
    double SZ[4] = {0, 0, 0, 0};
    for (int ix = 0; ix <= order; ++ix) {
      if (!two_d && ix > 0) break;
      for (int iz = 0; ix + iz <= order; ++iz) {
        const double c = weights.c[ix][iz];
        if (c == 0.0) continue;
        const int m = ix + iz;
        S[m] += c * powx[ix] * powz[iz];
        if (ix > 0) SX[m] += c * ix * powx[ix - 1] * powz[iz];
        if (iz > 0) SZ[m] += c * powx[ix] * iz * powz[iz - 1];
      }
    }

    double A = 0.0;   // dF/dw2_j
    double B = 0.0;   // dF/da_j / w2_j  (tanh order bumped by one)
    double CX = 0.0;  // monomial part of dF/dw1x_j
    double CZ = 0.0;  // monomial part of dF/dw1z_j
    for (int m = 0; m <= order; ++m) {
      A += table.T(m, j) * S[m];
      B += table.T(m + 1, j) * S[m];
      CX += table.T(m, j) * SX[m];
      CZ += table.T(m, j) * SZ[m];
    }

    const double out = net.w2(j);
    gw2[j] += scale * A;
    gb1[j] += scale * out * B;
    if (two_d) {
      gw1[j * 2 + 0] += scale * out * (px0 * B + CX);
      gw1[j * 2 + 1] += scale * out * (pz0 * B + CZ);
    } else {
      gw1[j] += scale * out * (pz0 * B + CZ);
    }
  }
  gb2[0] += scale * weights.c[0][0];
}

void accumulate_pullback(const ShallowNet& net, std::span<const double> point,
                         const JetWeights& weights, double scale,
                         double* grad) {
  if (weights.max_order < 0 || weights.max_order > 3) {
    throw std::invalid_argument("accumulate_pullback: order must be in 0..3");
  }
  ActivationTable& table = scratch_table();
  table.compute(net, point, weights.max_order + 1);
  pullback_from_table(net, table, point, weights, scale, grad);
}

void flatten(const ShallowNet& net, double* out) {
  int k = 0;
  for (int j = 0; j < net.n_hidden; ++j) {
    for (int i = 0; i < net.n_in; ++i) out[k++] = net.w1(j, i);
  }
  for (int j = 0; j < net.n_hidden; ++j) out[k++] = net.b1(j);
  for (int j = 0; j < net.n_hidden; ++j) out[k++] = net.w2(j);
  out[k] = net.b2;
}

void unflatten(ShallowNet& net, const double* in) {
  int k = 0;
  for (int j = 0; j < net.n_hidden; ++j) {
    for (int i = 0; i < net.n_in; ++i) net.w1(j, i) = in[k++];
  }
  for (int j = 0; j < net.n_hidden; ++j) net.b1(j) = in[k++];
  for (int j = 0; j < net.n_hidden; ++j) net.w2(j) = in[k++];
  net.b2 = in[k];
}

Vector flatten_all(std::span<const ShallowNet* const> nets) {
  int total = 0;
  for (const ShallowNet* net : nets) total += net->parameter_count();
  Vector packed(total);
  int offset = 0;
  for (const ShallowNet* net : nets) {
    flatten(*net, packed.data() + offset);
    offset += net->parameter_count();
  }
  return packed;
}

void unflatten_all(std::span<ShallowNet* const> nets, const Vector& packed) {
  int total = 0;
  for (ShallowNet* net : nets) total += net->parameter_count();
  if (packed.size() != total) {
    throw std::invalid_argument("unflatten_all: size mismatch");
  }
  int offset = 0;
  for (ShallowNet* net : nets) {
    unflatten(*net, packed.data() + offset);
    offset += net->parameter_count();
  }
}

Vector fd_gradient(const std::function<double(const Vector&)>& objective,
                   const Vector& params, double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("fd_gradient: step must be positive");
  }
  Vector grad(params.size());
  Vector probe = params;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    probe(k) = params(k) + step;
    const double fp = objective(probe);
    probe(k) = params(k) - step;
    const double fm = objective(probe);
    probe(k) = params(k);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("fd_gradient: objective returned a non-finite value");
    }
    grad(k) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace slpinn
