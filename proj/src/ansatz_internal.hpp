#pragma once

#include "slpinn/ansatz.hpp"

namespace slpinn::detail {

/// One additive term of a prediction structure:
///   coeff * env(z) * (d_z^base_dz net)(eval point)        net_slot >= 0
///   coeff * env(z) * f_anchor(x at the wall)              net_slot == -1
/// The eval point is the running point (wall == -1) or (x, wall).
struct Contribution {
  int net_slot = 0;    // 0 main, 1 cor_left, 2 cor_right, -1 analytic anchor
  int wall = -1;       // -1 running point, else anchor wall z = 0 or 1
  int base_dz = 0;     // z-derivative order applied at the anchor
  double coeff = 1.0;
  bool enveloped = false;
  Envelope env;
  int f_kind = 0;      // 0 none, 1 f1(wall), 2 f2(x, wall)
};

/// Fills `out` (capacity >= 8), returns the term count.
int build_contributions(const Ansatz& a, Contribution* out);

const ShallowNet* net_for_slot(const Ansatz& a, int slot);
int slot_param_offset(const Ansatz& a, int slot);

/// Weights of a linear functional sum_{i,j} lam[i][j] P_(i,j) over the
/// prediction jet; the residual operators and penalty terms are all of this
/// shape, so one pullback routine serves every loss.
struct PointFunctional {
  int order = 0;  // max i+j with nonzero weight (<= 2)
  double lam[3][3] = {};
};

/// Adds scale * d(functional)/d(trainable params) to grad.
void functional_pullback(const Ansatz& a, double x, double z,
                         const PointFunctional& lam, double scale,
                         Vector& grad);

}  // namespace slpinn::detail
