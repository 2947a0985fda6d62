#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace slpinn {

using Vector = Eigen::VectorXd;

/// splitmix64 stream. State update: s += 0x9E3779B97F4A7C15. Output mix:
/// z ^= z>>30, z *= 0xBF58476D1CE4E5B9, z ^= z>>27, z *= 0x94D049BB133111EB,
/// z ^= z>>31. Doubles take the top 53 bits, so runs are reproducible on any
/// platform with IEEE-754 doubles.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

 private:
  std::uint64_t state_;
};

/// One-hidden-layer scalar network with tanh activation:
///   y(p) = sum_j w2[j] * tanh(w1.row(j) . p + b1[j]) + b2.
/// Inputs are (x, z) for n_in = 2 and (z) for n_in = 1. Nets are plain values;
/// evaluation never mutates them.
struct ShallowNet {
  int n_in = 1;
  int n_hidden = 20;
  Eigen::MatrixXd w1;  // n_hidden x n_in
  Vector b1;           // n_hidden
  Vector w2;           // n_hidden
  double b2 = 0.0;

  int parameter_count() const { return n_hidden * (n_in + 2) + 1; }
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out)) per layer), zero
/// biases. Draw order: w1 row-major, then w2. Deterministic given the seed.
/// Throws std::invalid_argument unless n_in is 1 or 2 and n_hidden >= 1.
ShallowNet init_net(int n_in, int n_hidden, std::uint64_t seed);

/// Network value plus input partials up to total order <= 3.
/// d[i][j] holds d^{i+j} y / dx^i dz^j; nets with n_in == 1 populate d[0][j]
/// only (their single input sits in the z slot). Mixed partials are symmetric
/// by construction, so exactly one entry per multi-index is stored.
struct Jet {
  int n_in = 1;
  int order = 0;
  double d[4][4] = {};

  double value() const { return d[0][0]; }

  bool has(int ix, int iz) const {
    return ix >= 0 && iz >= 0 && (n_in == 2 || ix == 0) && ix + iz <= order;
  }

  /// Throws std::out_of_range for multi-indices beyond the requested order.
  double partial(int ix, int iz) const;
};

/// Closed-form jet of the network at a point. `point` carries n_in
/// coordinates, (x, z) or (z). Throws std::invalid_argument for order
/// outside 0..3.
Jet eval_jet(const ShallowNet& net, std::span<const double> point, int order);

Jet eval_jet(const ShallowNet& net, double z, int order);
Jet eval_jet(const ShallowNet& net, double x, double z, int order);

/// Per-unit tanh derivative tables of one net at one point. Jet evaluation
/// and gradient pullback both read from the same table, so the tanh work is
/// paid once per (net, point) in the training loop.
struct ActivationTable {
  int t_order = 0;
  int n_hidden = 0;
  std::vector<double> tab;  // (t_order + 1) rows of n_hidden entries

  /// Fills tanh^(k)(a_j) for k = 0..t_order (t_order <= 4).
  void compute(const ShallowNet& net, std::span<const double> point,
               int t_order);

  double T(int k, int j) const { return tab[k * n_hidden + j]; }
};

/// Jet assembled from a precomputed table (needs t_order >= order).
Jet jet_from_table(const ShallowNet& net, const ActivationTable& table,
                   int order);

/// Coefficients of a linear functional over jet entries of one net at one
/// point: F = sum_{ix,iz} c[ix][iz] * d^{(ix,iz)} y. Entries with
/// ix + iz > max_order are ignored.
struct JetWeights {
  int max_order = 0;
  double c[4][4] = {};
};

/// Table-based variant of accumulate_pullback (needs t_order >= max_order+1).
void pullback_from_table(const ShallowNet& net, const ActivationTable& table,
                         std::span<const double> point,
                         const JetWeights& weights, double scale,
                         double* grad);

/// Adds scale * dF/dparams to grad (length parameter_count(), flattening
/// order). This is the reverse-mode step behind every loss gradient; it costs
/// the same as one extra jet evaluation.
void accumulate_pullback(const ShallowNet& net, std::span<const double> point,
                         const JetWeights& weights, double scale,
                         double* grad);

/// Flattening order: w1 row-major, then b1, then w2, then b2. Multi-net
/// vectors concatenate nets in declaration order.
void flatten(const ShallowNet& net, double* out);
void unflatten(ShallowNet& net, const double* in);
Vector flatten_all(std::span<const ShallowNet* const> nets);
void unflatten_all(std::span<ShallowNet* const> nets, const Vector& packed);

/// Central-difference gradient (f(p+h e_k) - f(p-h e_k)) / 2h. The oracle all
/// analytic gradients are checked against. Throws std::invalid_argument for
/// step <= 0 and std::runtime_error when the objective goes non-finite.
Vector fd_gradient(const std::function<double(const Vector&)>& objective,
                   const Vector& params, double step);

}  // namespace slpinn
