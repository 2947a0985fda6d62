// slpinn command line: train | verify | rates | dump-fields.

#include "slpinn/train.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

using namespace slpinn;

namespace {

namespace fs = std::filesystem;

// Exit codes, also documented in the README.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kVerificationFailure = 3;
constexpr int kTrainingFailure = 4;
constexpr int kIoError = 5;

const std::vector<double> kSweep{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void randomize(Ansatz& a, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector p(trainable_parameter_count(a));
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = rng.uniform(-0.5, 0.5);
  set_parameters(a, p);
}

int cmd_train(const ExperimentConfig& config, const std::string& method_flag,
              const std::string& targets_flag) {
  ExperimentConfig cfg = config;
  try {
    cfg.targets = targets_from_string(targets_flag);
    cfg.methods.clear();
    if (method_flag == "both") {
      cfg.methods = {Method::plain, Method::singular_layer};
    } else {
      cfg.methods = {method_from_string(method_flag)};
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }

  std::printf("training: %zu viscosities x %zu seeds x %zu methods, "
              "targets=%s, out=%s, jobs=%d\n",
              cfg.eps_list.size(), cfg.seeds.size(), cfg.methods.size(),
              to_string(cfg.targets), cfg.out_dir.c_str(), cfg.jobs);
  const TrainReport report = run_experiment(cfg);

  for (const Selection& sel : report.selected) {
    if (sel.failed) {
      std::printf("  %-5s %-5s eps=%-8s FAILED (all seeds)\n",
                  to_string(sel.target), to_string(sel.method),
                  fmt(sel.eps).c_str());
    } else {
      std::printf("  %-5s %-5s eps=%-8s rel_l2=%-12s rel_linf=%-12s seed=%llu\n",
                  to_string(sel.target), to_string(sel.method),
                  fmt(sel.eps).c_str(), fmt(sel.errors.rel_l2).c_str(),
                  fmt(sel.errors.rel_linf).c_str(),
                  static_cast<unsigned long long>(sel.best_seed));
    }
  }
  if (report.any_failed) {
    std::fprintf(stderr, "some training cells failed; see manifest.json\n");
    return kTrainingFailure;
  }
  return kOk;
}

int cmd_verify(const std::vector<double>& eps_list) {
  bool all_ok = true;
  auto check = [&](bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
    all_ok &= ok;
  };

  for (double eps : eps_list) {
    const ResidualReport report =
        verify_manufactured(ExactFields(Viscosity(eps)));
    for (const ResidualCheck& c : report.checks) {
      check(c.pass, "manufactured " + c.name + " at eps=" + fmt(eps) +
                        " (max rel residual " + fmt(c.max_rel_residual) + ")");
    }
  }

  {
    const ResidualReport canary = verify_manufactured(
        ExactFields::without_interior_poly(Viscosity(1e-3)));
    const ResidualCheck* mom = canary.find("u1-momentum");
    check(!canary.pass && mom != nullptr && !mom->pass,
          "canary without the interior polynomial is rejected");
    const ResidualReport flipped =
        verify_manufactured(ExactFields::with_flipped_f2(Viscosity(1e-3)));
    const ResidualCheck* mom2 = flipped.find("u2-momentum");
    check(!flipped.pass && mom2 != nullptr && !mom2->pass,
          "canary with flipped f2 is rejected");
  }

  {
    // Gradient spot checks: every loss, two random draws.
    const Viscosity nu(1e-4);
    ExperimentConfig cfg;
    cfg.n_interior_1d = 9;
    cfg.n_axis_2d = 6;
    cfg.n_gamma = 5;
    cfg.n_periodic = 5;
    int id = 0;
    for (Method m : {Method::plain, Method::singular_layer}) {
      for (Target t :
           {Target::u1, Target::u2, Target::w2, Target::w3, Target::w1}) {
        double worst = 0.0;
        for (int draw = 0; draw < 2; ++draw) {
          auto u1 = std::make_shared<Ansatz>(
              make_ansatz(Target::u1, m, nu, 10 + id));
          randomize(*u1, 3 * id + 1);
          auto w2 = std::make_shared<Ansatz>(
              make_ansatz(Target::w2, m, nu, 20 + id));
          randomize(*w2, 3 * id + 2);
          auto w3 = std::make_shared<Ansatz>(
              make_ansatz(Target::w3, m, nu, 30 + id, u1));
          randomize(*w3, 3 * id + 3);
          Ansatz a = (t == Target::u1 || t == Target::w2)
                         ? make_ansatz(t, m, nu, 40 + id)
                     : t == Target::w1
                         ? make_ansatz(t, m, nu, 40 + id, u1, w2, w3)
                         : make_ansatz(t, m, nu, 40 + id, u1);
          randomize(a, 3 * id + 4);
          ++id;
          const TrainingSets sets = build_training_sets(t, m, cfg);
          const Vector g = loss_gradient(a, sets);
          Ansatz probe = a;
          const Vector fd = fd_gradient(
              [&](const Vector& p) {
                set_parameters(probe, p);
                return loss_value(probe, sets);
              },
              get_parameters(a), 1e-5);
          worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() /
                                      std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
        }
        check(worst <= 1e-6, std::string("gradient of the ") + to_string(t) +
                                 "/" + to_string(m) + " loss (rel err " +
                                 fmt(worst) + ")");
      }
    }
  }

  for (double eps : eps_list) {
    // Corrector cancellation in the u1 residual.
    const Viscosity nu(eps);
    ExperimentConfig cfg;
    const TrainingSets sets =
        build_training_sets(Target::u1, Method::singular_layer, cfg);
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 10; ++draw) {
      Ansatz sl = make_ansatz(Target::u1, Method::singular_layer, nu, draw);
      randomize(sl, draw + 100);
      const double sl_loss = loss_value(sl, sets);
      double bare = 0.0;
      for (const auto& p : sets.interior) {
        const Jet j = eval_jet(sl.main, p[1], 2);
        const double r = j.d[0][0] - nu.eps * j.d[0][2] - f1(p[1]);
        bare += r * r;
      }
      bare /= static_cast<double>(sets.interior.size());
      worst = std::max(worst, std::abs(sl_loss - bare) / std::max(1.0, bare));
    }
    check(worst <= 1e-12,
          "corrector cancellation at eps=" + fmt(eps) + " (rel gap " +
              fmt(worst) + ")");
  }

  return all_ok ? kOk : kVerificationFailure;
}

int cmd_rates(const std::vector<double>& eps_list, const std::string& out_dir) {
  bool all_ok = true;
  std::string csv = "check,detail,slope,expected,lower,upper,pass\n";
  auto record = [&](const std::string& name, const std::string& detail,
                    double slope, double expected, double lo, double hi) {
    const bool ok = slope >= lo && slope <= hi;
    all_ok &= ok;
    std::printf("[%s] %s %s: slope %s (window [%s, %s])\n",
                ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
                fmt(slope).c_str(), fmt(lo).c_str(), fmt(hi).c_str());
    csv += name + "," + detail + "," + fmt(slope) + "," + fmt(expected) + "," +
           fmt(lo) + "," + fmt(hi) + "," + (ok ? "1" : "0") + "\n";
  };

  const SlopeFit rate = inviscid_rate_check(eps_list);
  record("inviscid-rate", "u1", rate.slope, 0.25, 0.2, 0.3);

  const double inf = std::numeric_limits<double>::infinity();
  for (int m : {0, 1, 2}) {
    for (double p : {1.0, 2.0, inf}) {
      const SlopeFit fit = corrector_norm_check(m, p, eps_list);
      const double expected =
          (std::isinf(p) ? 0.0 : 1.0 / (2.0 * p)) - m / 2.0;
      record("layer-profile-norm",
             "m=" + std::to_string(m) + ";p=" + (std::isinf(p) ? "inf" : fmt(p)),
             fit.slope, expected, expected - 0.02, expected + 0.02);
    }
  }

  std::string weak_csv = "psi,eps,delta\n";
  const std::vector<std::pair<std::string, std::function<double(double)>>>
      psis{{"1", [](double) { return 1.0; }},
           {"z", [](double z) { return z; }},
           {"z^2", [](double z) { return z * z; }}};
  for (const auto& [name, psi] : psis) {
    const WeakLimitRecord rec = weak_vorticity_limit_check(psi, eps_list);
    for (std::size_t i = 0; i < rec.eps.size(); ++i) {
      weak_csv += name + "," + fmt(rec.eps[i]) + "," + fmt(rec.deltas[i]) + "\n";
    }
    if (name == "1") {
      // Pure mass defect: the gap is zero up to quadrature rounding, so no
      // slope window applies; report the largest gap instead.
      double worst = 0.0;
      for (double d : rec.deltas) worst = std::max(worst, d);
      std::printf("[info] weak-limit psi=1: max gap %s (no slope window)\n",
                  fmt(worst).c_str());
      continue;
    }
    record("weak-limit", "psi=" + name, rec.slope, 0.5, 0.4, 0.6);
    for (std::size_t i = 1; i < rec.deltas.size(); ++i) {
      if (!(rec.deltas[i] < rec.deltas[i - 1])) {
        std::printf("[FAIL] weak-limit psi=%s: gap not decreasing at eps=%s\n",
                    name.c_str(), fmt(rec.eps[i]).c_str());
        all_ok = false;
      }
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream out(fs::path(out_dir) / "rates.csv");
  std::ofstream weak_out(fs::path(out_dir) / "weak_limit.csv");
  if (!out || !weak_out) {
    std::fprintf(stderr, "cannot write CSVs under %s\n", out_dir.c_str());
    return kIoError;
  }
  out << csv;
  weak_out << weak_csv;
  return all_ok ? kOk : kVerificationFailure;
}

int cmd_dump_fields(const std::string& model_arg, double eps_flag,
                    int resolution, const std::string& out_path) {
  Ansatz model;
  try {
    if (model_arg.rfind("exact:", 0) == 0) {
      // Pseudo-model: the closed-form field itself, for baseline exports.
      if (!(eps_flag > 0.0)) {
        std::fprintf(stderr, "exact:* pseudo-models need --eps\n");
        return kConfigError;
      }
      const Target t = target_from_string(model_arg.substr(6));
      model.target = t;
      model.method = Method::plain;
      model.nu = Viscosity(eps_flag);
      model.main = init_net(target_dim(t), 1, 0);
    } else {
      model = load_model(model_arg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load model %s: %s\n", model_arg.c_str(),
                 e.what());
    return kIoError;
  }

  const bool pseudo = model_arg.rfind("exact:", 0) == 0;
  const ExactFields fields(model.nu);
  auto exact = [&](double x, double z) {
    switch (model.target) {
      case Target::u1: return fields.u1(z);
      case Target::u2: return fields.u2(x, z);
      case Target::w1: return fields.w1(x, z);
      case Target::w2: return fields.w2(z);
      case Target::w3: return fields.w3(x, z);
    }
    return 0.0;
  };
  auto pred = [&](double x, double z) {
    return pseudo ? exact(x, z) : predict_value(model, x, z);
  };

  const bool two_d = target_dim(model.target) == 2;
  const LayeredGrid grid = make_layered_grid(
      model.nu, resolution, two_d ? std::max(2, resolution * 5 / 6) : 2);

  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
    return kIoError;
  }
  out << "x,z,prediction,exact,error\n";
  char buf[256];
  auto write_row = [&](double x, double z) {
    const double p = pred(x, z);
    const double e = exact(x, z);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x, z, p,
                  e, p - e);
    out << buf;
  };
  if (two_d) {
    for (double x : grid.x) {
      for (double z : grid.z) write_row(x, z);
    }
  } else {
    for (double z : grid.z) write_row(0.0, z);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-layer PINN benchmark for plane-parallel channel flow"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file ([train] section); flags override");

  ExperimentConfig cfg;
  std::string method_flag = "both";
  std::string targets_flag = "both";
  cfg.out_dir = "runs";

  CLI::App* train = app.add_subcommand("train", "Run the training sweep");
  train->fallthrough();
  train->add_option("--targets", targets_flag, "velocity|vorticity|both")
      ->check(CLI::IsMember({"velocity", "vorticity", "both"}));
  train->add_option("--method", method_flag, "plain|sl|both")
      ->check(CLI::IsMember({"plain", "sl", "both"}));
  train->add_option("--eps", cfg.eps_list, "Viscosity list")->delimiter(',');
  train->add_option("--seeds", cfg.seeds, "Seed list")->delimiter(',');
  train->add_option("--out", cfg.out_dir, "Output directory")
      ->envname("SLPINN_OUT");
  train->add_option("--jobs", cfg.jobs, "Parallel training chains")
      ->envname("SLPINN_JOBS");
  train->add_option("--max-iter", cfg.lbfgs.max_iter, "L-BFGS iteration cap");
  train->add_option("--tol", cfg.lbfgs.tol, "L-BFGS termination tolerance");
  train->add_option("--history", cfg.lbfgs.history, "L-BFGS memory pairs");
  train->add_option("--init-step", cfg.lbfgs.init_step,
                    "First line-search trial step");
  train->add_option("--n-interior-1d", cfg.n_interior_1d,
                    "Collocation points for 1-D targets");
  train->add_option("--n-axis-2d", cfg.n_axis_2d,
                    "Collocation points per axis for 2-D targets");
  train->add_option("--n-gamma", cfg.n_gamma, "Wall penalty stations");
  train->add_option("--n-periodic", cfg.n_periodic, "Periodic stations");

  std::vector<double> verify_eps = kSweep;
  CLI::App* verify =
      app.add_subcommand("verify", "Closed-form and gradient self-checks");
  verify->fallthrough();
  verify->add_option("--eps", verify_eps, "Viscosity list")->delimiter(',');

  std::vector<double> rates_eps = kSweep;
  std::string rates_out = ".";
  CLI::App* rates =
      app.add_subcommand("rates", "Asymptotic-rate checks and slope CSV");
  rates->fallthrough();
  rates->add_option("--eps", rates_eps, "Viscosity list")->delimiter(',');
  rates->add_option("--out", rates_out, "Output directory")
      ->envname("SLPINN_OUT");

  std::string model_arg;
  std::string dump_out = "fields.csv";
  int resolution = 600;
  double eps_flag = 0.0;
  CLI::App* dump =
      app.add_subcommand("dump-fields", "Plot-ready prediction/exact export");
  dump->fallthrough();
  dump->add_option("--model", model_arg,
                   "Model file, or exact:<target> with --eps")
      ->required();
  dump->add_option("--resolution", resolution, "z points (layered layout)");
  dump->add_option("--eps", eps_flag, "Viscosity for exact:* pseudo-models");
  dump->add_option("--out", dump_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (train->parsed()) return cmd_train(cfg, method_flag, targets_flag);
    if (verify->parsed()) return cmd_verify(verify_eps);
    if (rates->parsed()) return cmd_rates(rates_eps, rates_out);
    if (dump->parsed()) {
      return cmd_dump_fields(model_arg, eps_flag, resolution, dump_out);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kVerificationFailure;
  }
  return kConfigError;
}
