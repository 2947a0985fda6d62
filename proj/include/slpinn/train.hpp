#pragma once

#include "slpinn/loss.hpp"
#include "slpinn/metrics.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace slpinn {

/// Sweep configuration. Training grids are deterministic uniform layouts
/// including endpoints; seeds index independent runs whose best (smallest
/// relative L2 error) is selected per (eps, target, method).
struct ExperimentConfig {
  enum class Targets { velocity, vorticity, both };

  std::vector<double> eps_list{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  std::vector<Method> methods{Method::plain, Method::singular_layer};
  Targets targets = Targets::both;
  int n_interior_1d = 25;
  int n_axis_2d = 50;
  int n_gamma = 50;
  int n_periodic = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  LbfgsConfig lbfgs;
  std::string out_dir;  // empty: keep results in memory only
  int jobs = 1;

  void validate() const;
  std::vector<Target> target_chain() const;  // dependency order
};

/// Collocation layout per target: 1-D targets get n_interior_1d uniform
/// z-points (endpoints included), 2-D targets the n_axis_2d^2 tensor grid;
/// plain 2-D losses add n_gamma wall stations, all 2-D losses n_periodic
/// pairing stations. Grids do not depend on eps.
TrainingSets build_training_sets(Target target, Method method,
                                 const ExperimentConfig& config);

/// Initializes the structure (seed offsets: main seed, left corrector
/// seed+1000, right corrector seed+2000), minimizes its loss and leaves the
/// best-seen parameters in the returned ansatz.
std::pair<Ansatz, LossTrace> train_target(
    Target target, Method method, const Viscosity& nu, std::uint64_t seed,
    const ExperimentConfig& config,
    std::shared_ptr<const Ansatz> up_u1 = nullptr,
    std::shared_ptr<const Ansatz> up_w2 = nullptr,
    std::shared_ptr<const Ansatz> up_w3 = nullptr);

struct CellResult {
  double eps = 0.0;
  Target target = Target::u1;
  Method method = Method::plain;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  int iterations = 0;
  StopReason reason = StopReason::max_iter;
  double wall_seconds = 0.0;
  ErrorRow errors;
  bool failed = false;
  std::string message;
  std::string model_path;
  std::string trace_path;
};

struct Selection {
  double eps = 0.0;
  Target target = Target::u1;
  Method method = Method::plain;
  std::uint64_t best_seed = 0;
  ErrorRow errors;
  bool failed = false;  // no seed produced a result
};

struct TrainReport {
  std::vector<CellResult> cells;
  std::vector<Selection> selected;
  bool any_failed = false;
};

/// Full sweep: for each method, viscosity and seed, trains the dependency
/// chain (u1 -> u2 for velocity; u1 -> w2 -> w3 -> w1 for vorticity),
/// evaluates error rows and selects the best seed per cell. Independent
/// (method, eps, seed) chains fan out over `jobs` workers; all files are
/// written by the calling thread.
TrainReport run_experiment(const ExperimentConfig& config);

/// Artifact writers (also used by the CLI). Long-format rows use the exact
/// header eps,target,method,rel_l2,rel_linf.
void write_error_rows_csv(const std::string& path,
                          const std::vector<Selection>& selected);
void write_error_table_csv(const std::string& path, Target target,
                           const ExperimentConfig& config,
                           const std::vector<Selection>& selected);
void write_cells_csv(const std::string& path,
                     const std::vector<CellResult>& cells);
void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const TrainReport& report);

const char* to_string(ExperimentConfig::Targets targets);
ExperimentConfig::Targets targets_from_string(const std::string& s);

/// Library version string recorded in manifests.
const char* version_string();

}  // namespace slpinn
