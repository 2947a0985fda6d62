#pragma once

#include "slpinn/ansatz.hpp"
#include "slpinn/optim.hpp"

#include <array>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace slpinn {

/// Collocation data for one target/method. Interior points are (x, z) pairs
/// (z only in slot [1] for 1-D targets). gamma_x holds the wall-penalty
/// stations of the plain 2-D losses; periodic_z the stations pairing x = 0
/// with x = 1. Both stay empty for structures that do not use them; the
/// two-point boundary penalties of the plain 1-D losses are hard-coded.
struct TrainingSets {
  std::vector<std::array<double, 2>> interior;
  std::vector<double> gamma_x;
  std::vector<double> periodic_z;
};

class NonFiniteResidual : public std::runtime_error {
 public:
  NonFiniteResidual(double x_value, double z_value);
  double x;
  double z;
};

/// Evaluates one loss and its exact parameter gradient. Everything frozen
/// (upstream predictions, forcing data, envelope factors, penalty weights)
/// is precomputed at construction; per call only the trainable nets are
/// touched. Not safe for concurrent calls on one instance.
class LossEvaluator {
 public:
  LossEvaluator(const Ansatz& a, TrainingSets sets);

  double value(const Ansatz& a);
  double value_and_gradient(const Ansatz& a, Vector& grad);

  const TrainingSets& sets() const { return sets_; }

 private:
  struct EvalPoint {
    int slot;           // 0 main, 1 cor_left, 2 cor_right
    double pt[2];
    int pt_len;
    int jet_order;      // max jet order requested
  };
  struct UnitTerm {
    int eval_idx;
    JetWeights w;
  };
  struct Unit {
    double x, z;        // diagnostics
    double const_term;
    double sq_weight;   // multiplier of res^2 in the loss
    int term_begin, term_end;
  };

  int add_eval_point(int slot, const double* pt, int pt_len, int jet_order);

  std::map<std::tuple<int, double, double>, int> dedup_;  // construction only
  void add_functional(const Ansatz& a, double x, double z,
                      const double lam[3][3], int lam_order, double sign,
                      double& const_accum, std::vector<UnitTerm>& terms);

  double run(const Ansatz& a, Vector* grad);

  TrainingSets sets_;
  std::vector<EvalPoint> eval_points_;
  std::vector<UnitTerm> terms_;
  std::vector<Unit> units_;
  // scratch reused across calls
  std::vector<ActivationTable> tables_;
  std::vector<Jet> jets_;
  std::vector<double> residuals_;
};

double loss_value(const Ansatz& a, const TrainingSets& sets);
Vector loss_gradient(const Ansatz& a, const TrainingSets& sets);

/// Adapter for minimize(): writes the parameter vector into the ansatz and
/// returns loss and gradient. Non-finite residuals surface as +inf so the
/// line search backs off instead of aborting.
Objective make_objective(Ansatz& a, const TrainingSets& sets);

}  // namespace slpinn
