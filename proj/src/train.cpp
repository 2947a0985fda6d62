#include "slpinn/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace slpinn {

namespace fs = std::filesystem;

const char* version_string() { return "0.1.0"; }

const char* to_string(ExperimentConfig::Targets targets) {
  switch (targets) {
    case ExperimentConfig::Targets::velocity: return "velocity";
    case ExperimentConfig::Targets::vorticity: return "vorticity";
    case ExperimentConfig::Targets::both: return "both";
  }
  return "?";
}

ExperimentConfig::Targets targets_from_string(const std::string& s) {
  if (s == "velocity") return ExperimentConfig::Targets::velocity;
  if (s == "vorticity") return ExperimentConfig::Targets::vorticity;
  if (s == "both") return ExperimentConfig::Targets::both;
  throw std::invalid_argument("unknown targets selection: " + s);
}

void ExperimentConfig::validate() const {
  if (eps_list.empty() || methods.empty() || seeds.empty()) {
    throw std::invalid_argument("ExperimentConfig: empty sweep axis");
  }
  for (double eps : eps_list) {
    if (!(eps > 0.0) || eps > 1.0) {
      throw std::invalid_argument("ExperimentConfig: eps out of (0, 1]");
    }
  }
  if (n_interior_1d < 2 || n_axis_2d < 2 || n_gamma < 2 || n_periodic < 2) {
    throw std::invalid_argument("ExperimentConfig: point counts must be >= 2");
  }
  if (jobs < 1) throw std::invalid_argument("ExperimentConfig: jobs must be >= 1");
  lbfgs.validate();
}

std::vector<Target> ExperimentConfig::target_chain() const {
  // u1 always trains first: it is the upstream model of every 2-D target.
  switch (targets) {
    case Targets::velocity:
      return {Target::u1, Target::u2};
    case Targets::vorticity:
      return {Target::u1, Target::w2, Target::w3, Target::w1};
    case Targets::both:
      return {Target::u1, Target::u2, Target::w2, Target::w3, Target::w1};
  }
  return {};
}

TrainingSets build_training_sets(Target target, Method method,
                                 const ExperimentConfig& config) {
  TrainingSets sets;
  if (target_dim(target) == 1) {
    const int n = config.n_interior_1d;
    sets.interior.reserve(n);
    for (int j = 0; j < n; ++j) {
      sets.interior.push_back({0.0, j / static_cast<double>(n - 1)});
    }
    return sets;
  }
  const int n = config.n_axis_2d;
  sets.interior.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double x = i / static_cast<double>(n - 1);
    for (int j = 0; j < n; ++j) {
      sets.interior.push_back({x, j / static_cast<double>(n - 1)});
    }
  }
  if (method == Method::plain) {
    sets.gamma_x.reserve(config.n_gamma);
    for (int i = 0; i < config.n_gamma; ++i) {
      sets.gamma_x.push_back(i / static_cast<double>(config.n_gamma - 1));
    }
  }
  sets.periodic_z.reserve(config.n_periodic);
  for (int j = 0; j < config.n_periodic; ++j) {
    sets.periodic_z.push_back(j / static_cast<double>(config.n_periodic - 1));
  }
  return sets;
}

std::pair<Ansatz, LossTrace> train_target(
    Target target, Method method, const Viscosity& nu, std::uint64_t seed,
    const ExperimentConfig& config, std::shared_ptr<const Ansatz> up_u1,
    std::shared_ptr<const Ansatz> up_w2, std::shared_ptr<const Ansatz> up_w3) {
  Ansatz ansatz = make_ansatz(target, method, nu, seed, std::move(up_u1),
                              std::move(up_w2), std::move(up_w3));
  const TrainingSets sets = build_training_sets(target, method, config);
  Objective objective = make_objective(ansatz, sets);
  MinimizeResult result =
      minimize(objective, get_parameters(ansatz), config.lbfgs);
  set_parameters(ansatz, result.x);
  return {std::move(ansatz), std::move(result.trace)};
}

namespace {

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", eps);
  return buf;
}

std::string cell_stem(Method m, Target t, double eps, std::uint64_t seed) {
  return std::string(to_string(m)) + "_" + to_string(t) + "_eps" +
         eps_tag(eps) + "_seed" + std::to_string(seed);
}

struct ChainOutput {
  std::vector<CellResult> cells;
  std::vector<std::pair<std::string, Ansatz>> models;      // stem -> model
  std::vector<std::pair<std::string, LossTrace>> traces;   // stem -> trace
};

ChainOutput run_chain(const ExperimentConfig& config, Method method,
                      double eps, std::uint64_t seed) {
  ChainOutput out;
  const Viscosity nu(eps);
  const ExactFields fields(nu);

  std::shared_ptr<const Ansatz> u1_model, w2_model, w3_model;
  bool upstream_broken = false;
  std::string upstream_message;

  for (Target target : config.target_chain()) {
    CellResult cell;
    cell.eps = eps;
    cell.target = target;
    cell.method = method;
    cell.seed = seed;
    const std::string stem = cell_stem(method, target, eps, seed);

    if (upstream_broken) {
      cell.failed = true;
      cell.message = "upstream unavailable: " + upstream_message;
      out.cells.push_back(cell);
      continue;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto [ansatz, trace] =
          train_target(target, method, nu, seed, config, u1_model, w2_model,
                       w3_model);
      cell.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      cell.final_loss = trace.final_loss();
      cell.iterations = trace.iterations();
      cell.reason = trace.reason;
      cell.errors = error_row(ansatz, fields);

      auto frozen = std::make_shared<const Ansatz>(std::move(ansatz));
      if (target == Target::u1) u1_model = frozen;
      if (target == Target::w2) w2_model = frozen;
      if (target == Target::w3) w3_model = frozen;

      out.models.emplace_back(stem, *frozen);
      out.traces.emplace_back(stem, std::move(trace));
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.message = e.what();
      upstream_broken = (target == Target::u1 || target == Target::w2 ||
                         target == Target::w3);
      upstream_message = e.what();
    }
    out.cells.push_back(cell);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  struct ChainSpec {
    Method method;
    double eps;
    std::uint64_t seed;
  };
  std::vector<ChainSpec> specs;
  for (Method method : config.methods) {
    for (double eps : config.eps_list) {
      for (std::uint64_t seed : config.seeds) {
        specs.push_back({method, eps, seed});
      }
    }
  }

  std::vector<ChainOutput> outputs(specs.size());
  const int workers =
      std::min<int>(config.jobs, static_cast<int>(specs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      outputs[i] =
          run_chain(config, specs[i].method, specs[i].eps, specs[i].seed);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= specs.size()) return;
        outputs[i] =
            run_chain(config, specs[i].method, specs[i].eps, specs[i].seed);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  TrainReport report;
  const bool persist = !config.out_dir.empty();
  fs::path base(config.out_dir);
  if (persist) {
    fs::create_directories(base / "models");
    fs::create_directories(base / "traces");
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    ChainOutput& chain = outputs[i];
    if (persist) {
      for (auto& [stem, model] : chain.models) {
        save_model(model, (base / "models" / (stem + ".json")).string());
      }
      for (auto& [stem, trace] : chain.traces) {
        trace.write_csv_file((base / "traces" / (stem + ".csv")).string());
      }
    }
    for (CellResult& cell : chain.cells) {
      const std::string stem =
          cell_stem(cell.method, cell.target, cell.eps, cell.seed);
      if (persist && !cell.failed) {
        cell.model_path = (base / "models" / (stem + ".json")).string();
        cell.trace_path = (base / "traces" / (stem + ".csv")).string();
      }
      report.any_failed |= cell.failed;
      report.cells.push_back(std::move(cell));
    }
  }

  // Best seed per (method, eps, target) by relative L2 error.
  for (Method method : config.methods) {
    for (double eps : config.eps_list) {
      for (Target target : config.target_chain()) {
        Selection sel;
        sel.eps = eps;
        sel.target = target;
        sel.method = method;
        sel.failed = true;
        for (const CellResult& cell : report.cells) {
          if (cell.failed || cell.method != method || cell.eps != eps ||
              cell.target != target) {
            continue;
          }
          if (sel.failed || cell.errors.rel_l2 < sel.errors.rel_l2) {
            sel.failed = false;
            sel.best_seed = cell.seed;
            sel.errors = cell.errors;
          }
        }
        report.selected.push_back(sel);
      }
    }
  }

  if (persist) {
    write_error_rows_csv((base / "errors.csv").string(), report.selected);
    for (Target target : config.target_chain()) {
      write_error_table_csv(
          (base / ("table_" + std::string(to_string(target)) + ".csv"))
              .string(),
          target, config, report.selected);
    }
    write_cells_csv((base / "cells.csv").string(), report.cells);
    write_manifest((base / "manifest.json").string(), config, report);
  }
  return report;
}

void write_error_rows_csv(const std::string& path,
                          const std::vector<Selection>& selected) {
  std::string csv = "eps,target,method,rel_l2,rel_linf\n";
  for (const Selection& sel : selected) {
    if (sel.failed) continue;
    csv += format_double(sel.eps);
    csv += ",";
    csv += to_string(sel.target);
    csv += ",";
    csv += to_string(sel.method);
    csv += ",";
    csv += format_double(sel.errors.rel_l2);
    csv += ",";
    csv += format_double(sel.errors.rel_linf);
    csv += "\n";
  }
  write_text_file(path, csv);
}

void write_error_table_csv(const std::string& path, Target target,
                           const ExperimentConfig& config,
                           const std::vector<Selection>& selected) {
  std::string csv = "eps";
  for (Method m : config.methods) {
    csv += std::string(",") + to_string(m) + "_rel_l2," + to_string(m) +
           "_rel_linf";
  }
  csv += "\n";
  for (double eps : config.eps_list) {
    csv += format_double(eps);
    for (Method m : config.methods) {
      const Selection* found = nullptr;
      for (const Selection& sel : selected) {
        if (sel.target == target && sel.method == m && sel.eps == eps &&
            !sel.failed) {
          found = &sel;
          break;
        }
      }
      if (found) {
        csv += "," + format_double(found->errors.rel_l2) + "," +
               format_double(found->errors.rel_linf);
      } else {
        csv += ",,";
      }
    }
    csv += "\n";
  }
  write_text_file(path, csv);
}

void write_cells_csv(const std::string& path,
                     const std::vector<CellResult>& cells) {
  std::string csv =
      "eps,target,method,seed,final_loss,iterations,reason,rel_l2,rel_linf,"
      "wall_seconds,failed\n";
  for (const CellResult& c : cells) {
    csv += format_double(c.eps);
    csv += std::string(",") + to_string(c.target) + "," + to_string(c.method) +
           "," + std::to_string(c.seed) + ",";
    if (c.failed) {
      csv += ",,,,,";
      csv += ",1\n";
      continue;
    }
    csv += format_double(c.final_loss) + "," + std::to_string(c.iterations) +
           "," + to_string(c.reason) + "," + format_double(c.errors.rel_l2) +
           "," + format_double(c.errors.rel_linf) + "," +
           format_double(c.wall_seconds) + ",0\n";
  }
  write_text_file(path, csv);
}

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const TrainReport& report) {
  nlohmann::json j;
  j["tool"] = "slpinn";
  j["version"] = version_string();
  j["generated_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  j["algorithms"] = {{"prng", "splitmix64"},
                     {"init", "glorot-uniform, zero biases"},
                     {"optimizer", "l-bfgs, strong Wolfe line search"},
                     {"seed_offsets", "main +0, left corrector +1000, right corrector +2000"}};

  nlohmann::json cfg;
  cfg["eps"] = config.eps_list;
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : config.methods) methods.push_back(to_string(m));
  cfg["methods"] = methods;
  cfg["targets"] = to_string(config.targets);
  cfg["n_interior_1d"] = config.n_interior_1d;
  cfg["n_axis_2d"] = config.n_axis_2d;
  cfg["n_gamma"] = config.n_gamma;
  cfg["n_periodic"] = config.n_periodic;
  cfg["seeds"] = config.seeds;
  cfg["jobs"] = config.jobs;
  cfg["lbfgs"] = {{"history", config.lbfgs.history},
                  {"max_iter", config.lbfgs.max_iter},
                  {"tol", config.lbfgs.tol},
                  {"init_step", config.lbfgs.init_step},
                  {"c1", config.lbfgs.c1},
                  {"c2", config.lbfgs.c2},
                  {"max_ls", config.lbfgs.max_ls}};
  j["config"] = cfg;

  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& c : report.cells) {
    nlohmann::json jc;
    jc["eps"] = c.eps;
    jc["target"] = to_string(c.target);
    jc["method"] = to_string(c.method);
    jc["seed"] = c.seed;
    jc["failed"] = c.failed;
    if (c.failed) {
      jc["message"] = c.message;
    } else {
      jc["final_loss"] = c.final_loss;
      jc["iterations"] = c.iterations;
      jc["reason"] = to_string(c.reason);
      jc["rel_l2"] = c.errors.rel_l2;
      jc["rel_linf"] = c.errors.rel_linf;
      jc["wall_seconds"] = c.wall_seconds;
      jc["model"] = c.model_path;
      jc["trace"] = c.trace_path;
    }
    cells.push_back(jc);
  }
  j["cells"] = cells;

  nlohmann::json selected = nlohmann::json::array();
  for (const Selection& s : report.selected) {
    nlohmann::json js;
    js["eps"] = s.eps;
    js["target"] = to_string(s.target);
    js["method"] = to_string(s.method);
    js["failed"] = s.failed;
    if (!s.failed) {
      js["best_seed"] = s.best_seed;
      js["rel_l2"] = s.errors.rel_l2;
      js["rel_linf"] = s.errors.rel_linf;
    }
    selected.push_back(js);
  }
  j["selected"] = selected;
  j["any_failed"] = report.any_failed;

  if (!config.out_dir.empty()) {
    const fs::path base(config.out_dir);
    nlohmann::json outputs;
    outputs["errors_csv"] = (base / "errors.csv").string();
    outputs["cells_csv"] = (base / "cells.csv").string();
    nlohmann::json tables;
    for (Target target : config.target_chain()) {
      tables[to_string(target)] =
          (base / ("table_" + std::string(to_string(target)) + ".csv"))
              .string();
    }
    outputs["tables"] = tables;
    outputs["models_dir"] = (base / "models").string();
    outputs["traces_dir"] = (base / "traces").string();
    j["outputs"] = outputs;
  }

  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace slpinn
