#pragma once

#include "slpinn/net.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace slpinn {

/// L-BFGS settings. init_step is the trial length of the very first line
/// search (the "learning rate" of batch L-BFGS drivers); later line searches
/// start from a unit trial step.
struct LbfgsConfig {
  int history = 10;
  int max_iter = 50000;
  double tol = 1e-8;
  double init_step = 0.1;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_ls = 25;   // objective evaluations per line search

  void validate() const;  // throws std::invalid_argument
};

enum class StopReason { tolerance, max_iter, line_search_failure };
const char* to_string(StopReason reason);

struct TraceRecord {
  int iter = 0;
  double loss = 0.0;
  double grad_inf_norm = 0.0;
  double step = 0.0;
};

/// Convergence history. Loss values are non-increasing across accepted
/// iterations; wolfe_violations counts accepted steps that failed a
/// post-acceptance recheck of the strong Wolfe conditions (always 0 unless
/// the objective is noisy), skipped_pairs counts curvature pairs dropped for
/// s.y <= 0.
struct LossTrace {
  std::vector<TraceRecord> records;
  StopReason reason = StopReason::max_iter;
  int wolfe_violations = 0;
  int skipped_pairs = 0;

  int iterations() const {
    return records.empty() ? 0 : records.back().iter;
  }
  double final_loss() const {
    return records.empty() ? 0.0 : records.back().loss;
  }

  /// Columns: iter, loss, grad_inf_norm, step.
  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
};

/// Objective contract: fill grad (same size as x) and return the loss. Must
/// not throw; signal trouble with non-finite values, which the line search
/// treats as "step too far".
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct MinimizeResult {
  Vector x;          // best-seen parameters
  double loss = 0.0; // loss at x
  LossTrace trace;
};

/// Two-loop-recursion L-BFGS with a strong Wolfe line search. Terminates when
/// both the loss decrease and the gradient infinity norm fall below tol, at
/// max_iter, or when the line search cannot make progress.
MinimizeResult minimize(const Objective& objective, const Vector& x0,
                        const LbfgsConfig& config = {});

}  // namespace slpinn
