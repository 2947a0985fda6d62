#pragma once

#include "slpinn/net.hpp"
#include "slpinn/problem.hpp"

#include <memory>
#include <optional>
#include <string>

namespace slpinn {

/// Solution components. u1 and w2 are one-dimensional (functions of z), the
/// rest live on the periodic strip (x, z) in [0,1]^2.
enum class Target { u1, u2, w2, w3, w1 };

enum class Method { plain, singular_layer };

const char* to_string(Target t);
const char* to_string(Method m);
Target target_from_string(const std::string& s);
Method method_from_string(const std::string& s);  // accepts "plain", "sl"
int target_dim(Target t);

/// Analytic boundary-layer factor s * pow^p * exp(-pow / sqrt(eps)) with
/// pow = z (left) or 1-z (right) and s in {1, eps^{-1/2}}. Decays to zero
/// away from its wall together with all z-derivatives.
struct Envelope {
  enum class Side { left, right };
  Side side = Side::left;
  int power = 0;              // 0, 1 or 2
  bool inv_sqrt_scale = false;

  /// out[k] = k-th z-derivative at z, k = 0..2. The power-0 second
  /// derivative is value/eps exactly, which keeps these factors in the
  /// kernel of (1 - eps d2z) to rounding accuracy.
  void eval(const Viscosity& nu, double z, double out[3]) const;
};

/// A predicted-solution structure: either a bare network (plain) or a
/// network enriched with boundary anchors and decaying envelopes
/// (singular_layer). 2-D singular structures for u2/w3/w1 carry one trained
/// corrector net per wall; u1/w2 need only the anchors. Targets u2/w3/w1
/// also reference frozen upstream predictions of the same method for the
/// advection and stretching terms of their residuals.
struct Ansatz {
  Target target = Target::u1;
  Method method = Method::plain;
  Viscosity nu{1.0};
  ShallowNet main;
  std::optional<ShallowNet> cor_left;
  std::optional<ShallowNet> cor_right;
  std::shared_ptr<const Ansatz> up_u1;
  std::shared_ptr<const Ansatz> up_w2;
  std::shared_ptr<const Ansatz> up_w3;
};

/// Builds the structure for a target/method with freshly initialized nets.
/// Seed offsets: main uses `seed`, the left corrector seed+1000, the right
/// corrector seed+2000. Throws std::invalid_argument when a required
/// upstream model is missing or trained with a different method.
Ansatz make_ansatz(Target target, Method method, const Viscosity& nu,
                   std::uint64_t seed,
                   std::shared_ptr<const Ansatz> up_u1 = nullptr,
                   std::shared_ptr<const Ansatz> up_w2 = nullptr,
                   std::shared_ptr<const Ansatz> up_w3 = nullptr,
                   int n_hidden = 20);

int trainable_parameter_count(const Ansatz& a);
Vector get_parameters(const Ansatz& a);
void set_parameters(Ansatz& a, const Vector& params);

/// Jet of the full prediction (nets, anchors and envelope factors combined
/// by the product rule). order <= 2; 1-D targets ignore x.
Jet predict(const Ansatz& a, double x, double z, int order);
double predict_value(const Ansatz& a, double x, double z);
double predict_value(const Ansatz& a, double z);  // 1-D targets

/// PDE residual of a prediction jet at (x, z):
///   u1: P - eps P_zz - f1
///   u2: P - eps (P_xx + P_zz) + U1 P_x - f2
///   w2: P - eps P_zz - dz_f1
///   w3: P - eps (P_xx + P_zz) + U1 P_x - dx_f2
///   w1: P - eps (P_xx + P_zz) - W2 W3 + U1 P_x + dz_f2
/// where U1, W2, W3 are the frozen upstream prediction values. Shared by the
/// trained structures and the exact-field substitution checks.
double interior_residual(Target target, const Viscosity& nu, const Jet& p,
                         double u1_value, double w2_value, double w3_value,
                         double x, double z);

/// Residual of the ansatz prediction at a point; evaluates the frozen
/// upstream models as needed.
double residual(const Ansatz& a, double x, double z);
double residual(const Ansatz& a, double z);  // 1-D targets

/// Model files: JSON with target, method, eps, net shapes and the parameter
/// vector in flattening order. Upstream references are not stored; loaded
/// models support predict but need upstreams reattached for residuals.
void save_model(const Ansatz& a, const std::string& path);
Ansatz load_model(const std::string& path);

}  // namespace slpinn
