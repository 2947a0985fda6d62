// Acceptance suite: one function per criterion, one PASS/FAIL line each.
// Run all criteria with no arguments or a single one with --criterion N.

#include "slpinn/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace slpinn;

namespace {

const std::vector<double> kSweep{1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

struct Outcome {
  bool pass = true;
  bool hard = true;  // soft criteria report but never fail the suite
  std::string detail;
};

void note(Outcome& out, bool ok, const std::string& what) {
  if (!ok) {
    out.pass = false;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += what;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void randomize(Ansatz& a, std::uint64_t seed, double scale = 0.5) {
  SplitMix64 rng(seed);
  Vector p(trainable_parameter_count(a));
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = rng.uniform(-scale, scale);
  set_parameters(a, p);
}

// ---------------------------------------------------------------------------
// 1. Manufactured-solution gate (and the canary that must fail it).
Outcome criterion_manufactured() {
  Outcome out;
  for (double eps : kSweep) {
    const ResidualReport report = verify_manufactured(ExactFields(Viscosity(eps)));
    note(out, report.pass, "clean fields fail at eps=" + fmt(eps));
    for (const ResidualCheck& c : report.checks) {
      note(out, c.max_rel_residual <= 1e-8,
           c.name + " residual " + fmt(c.max_rel_residual) + " at eps=" + fmt(eps));
    }
  }
  const ResidualReport canary =
      verify_manufactured(ExactFields::without_interior_poly(Viscosity(1e-3)));
  note(out, !canary.pass, "canary variant passed the gate");
  const ResidualCheck* mom = canary.find("u1-momentum");
  note(out, mom != nullptr && !mom->pass,
       "canary did not trip the u1 momentum check");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Gradient exactness for all ten losses at eps = 1e-4.
Outcome criterion_gradients() {
  Outcome out;
  const Viscosity nu(1e-4);
  ExperimentConfig cfg;
  cfg.n_interior_1d = 9;
  cfg.n_axis_2d = 6;
  cfg.n_gamma = 5;
  cfg.n_periodic = 5;

  int draw_id = 0;
  for (Method m : {Method::plain, Method::singular_layer}) {
    for (Target t :
         {Target::u1, Target::u2, Target::w2, Target::w3, Target::w1}) {
      double worst = 0.0;
      for (int draw = 0; draw < 10; ++draw) {
        auto u1 = std::make_shared<Ansatz>(
            make_ansatz(Target::u1, m, nu, 100 + draw_id));
        randomize(*u1, 11 * draw_id + 1);
        auto w2 = std::make_shared<Ansatz>(
            make_ansatz(Target::w2, m, nu, 200 + draw_id));
        randomize(*w2, 11 * draw_id + 2);
        auto w3 = std::make_shared<Ansatz>(
            make_ansatz(Target::w3, m, nu, 300 + draw_id, u1));
        randomize(*w3, 11 * draw_id + 3);

        Ansatz a = [&] {
          switch (t) {
            case Target::u1:
            case Target::w2:
              return make_ansatz(t, m, nu, 400 + draw_id);
            case Target::u2:
            case Target::w3:
              return make_ansatz(t, m, nu, 400 + draw_id, u1);
            default:
              return make_ansatz(t, m, nu, 400 + draw_id, u1, w2, w3);
          }
        }();
        randomize(a, 11 * draw_id + 4);
        ++draw_id;

        const TrainingSets sets = build_training_sets(t, m, cfg);
        const Vector analytic = loss_gradient(a, sets);
        Ansatz probe = a;
        const Vector fd = fd_gradient(
            [&](const Vector& p) {
              set_parameters(probe, p);
              return loss_value(probe, sets);
            },
            get_parameters(a), 1e-5);
        const double rel = (analytic - fd).lpNorm<Eigen::Infinity>() /
                           std::max(1.0, fd.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, rel);
      }
      note(out, worst <= 1e-6,
           std::string(to_string(t)) + "/" + to_string(m) +
               " gradient mismatch " + fmt(worst));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. Corrector terms lie in the kernel of (1 - eps d2z): the singular u1
// loss equals the bare-network interior loss.
Outcome criterion_cancellation() {
  Outcome out;
  const Viscosity nu(1e-4);
  ExperimentConfig cfg;
  const TrainingSets sets =
      build_training_sets(Target::u1, Method::singular_layer, cfg);
  double worst = 0.0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    Ansatz sl = make_ansatz(Target::u1, Method::singular_layer, nu, draw);
    randomize(sl, draw * 3 + 1, 0.8);
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
  note(out, worst <= 1e-12, "relative loss gap " + fmt(worst));
  out.detail = "max relative gap " + fmt(worst);
  return out;
}

// ---------------------------------------------------------------------------
// 4. Loss-scaling dichotomy: plain w2/w1 losses blow up ~1/eps^2 while the
// singular structures stay bounded.
Outcome criterion_scaling() {
  Outcome out;
  ExperimentConfig cfg;
  cfg.n_interior_1d = 9;
  cfg.n_axis_2d = 6;
  cfg.n_gamma = 5;
  cfg.n_periodic = 5;

  auto initial_loss = [&](Target t, Method m, double eps) {
    const Viscosity nu(eps);
    auto u1 = std::make_shared<Ansatz>(make_ansatz(Target::u1, m, nu, 1));
    auto w2 = std::make_shared<Ansatz>(make_ansatz(Target::w2, m, nu, 2));
    auto w3 = std::make_shared<Ansatz>(make_ansatz(Target::w3, m, nu, 3, u1));
    Ansatz a = t == Target::w2 ? make_ansatz(t, m, nu, 4)
                               : make_ansatz(t, m, nu, 4, u1, w2, w3);
    return loss_value(a, build_training_sets(t, m, cfg));
  };

  for (Target t : {Target::w2, Target::w1}) {
    const double plain_ratio = initial_loss(t, Method::plain, 1e-6) /
                               initial_loss(t, Method::plain, 1e-4);
    note(out, plain_ratio >= 1e3,
         std::string("plain ") + to_string(t) + " grew only " +
             fmt(plain_ratio) + "x");
    const double hi = initial_loss(t, Method::singular_layer, 1e-4);
    const double lo = initial_loss(t, Method::singular_layer, 1e-6);
    const double sl_ratio = std::max(hi / lo, lo / hi);
    note(out, sl_ratio <= 10.0,
         std::string("sl ") + to_string(t) + " moved " + fmt(sl_ratio) + "x");
    if (out.detail.empty()) {
      out.detail = std::string(to_string(t)) + ": plain x" + fmt(plain_ratio) +
                   ", sl x" + fmt(sl_ratio);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. Table-scale accuracy of the singular-layer method, best of 5 seeds.
// Thresholds leave one order of magnitude of slack over the reference
// tables: u1 <= 1e-3, u2 <= 1e-2, w2 <= 1e-3, w1 <= 1e-2.
struct AccuracyThresholds {
  double u1 = 1e-3;
  double u2 = 1e-2;
  double w2 = 1e-3;
  double w1 = 1e-2;
};

Outcome criterion_accuracy() {
  Outcome out;
  const AccuracyThresholds thr;
  ExperimentConfig cfg;  // protocol layout: 25 / 50^2 collocation points
  // Acceptance budget: the thresholds must be reached within 3000 L-BFGS
  // iterations per cell (the production default keeps the 50000 ceiling).
  // A tighter budget only makes this criterion harder to pass; it keeps the
  // full sweep within minutes instead of hours on a small CI box.
  cfg.lbfgs.max_iter = 3000;

  std::mutex log_mutex;
  std::vector<std::string> failures;

  auto run_eps = [&](double eps) {
    const Viscosity nu(eps);
    const ExactFields fields(nu);
    std::map<Target, double> best{{Target::u1, 1e300},
                                  {Target::u2, 1e300},
                                  {Target::w2, 1e300},
                                  {Target::w1, 1e300}};
    auto met = [&] {
      return best[Target::u1] <= thr.u1 && best[Target::u2] <= thr.u2 &&
             best[Target::w2] <= thr.w2 && best[Target::w1] <= thr.w1;
    };
    for (std::uint64_t seed : cfg.seeds) {
      auto train1 = [&](Target t, std::shared_ptr<const Ansatz> up_u1 = nullptr,
                        std::shared_ptr<const Ansatz> up_w2 = nullptr,
                        std::shared_ptr<const Ansatz> up_w3 = nullptr) {
        auto [ansatz, trace] =
            train_target(t, Method::singular_layer, nu, seed, cfg,
                         std::move(up_u1), std::move(up_w2), std::move(up_w3));
        const ErrorRow row = error_row(ansatz, fields);
        auto it = best.find(t);
        if (it != best.end()) it->second = std::min(it->second, row.rel_l2);
        return std::make_shared<const Ansatz>(std::move(ansatz));
      };
      auto u1 = train1(Target::u1);
      auto u2 = train1(Target::u2, u1);
      auto w2 = train1(Target::w2);
      auto w3 = train1(Target::w3, u1);
      train1(Target::w1, u1, w2, w3);
      if (met()) break;  // best-of-5 already satisfied
    }
    std::lock_guard<std::mutex> lock(log_mutex);
    auto record = [&](Target t, double threshold) {
      std::printf("  [criterion 5] eps=%s sl %s best rel_l2 = %s (<= %s: %s)\n",
                  fmt(eps).c_str(), to_string(t), fmt(best[t]).c_str(),
                  fmt(threshold).c_str(), best[t] <= threshold ? "ok" : "MISS");
      std::fflush(stdout);
      if (best[t] > threshold) {
        failures.push_back(std::string(to_string(t)) + "@eps=" + fmt(eps) +
                           " best " + fmt(best[t]));
      }
    };
    record(Target::u1, thr.u1);
    record(Target::u2, thr.u2);
    record(Target::w2, thr.w2);
    record(Target::w1, thr.w1);
  };

  const unsigned workers =
      std::min<unsigned>(2, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  auto pool_body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= kSweep.size()) return;
      run_eps(kSweep[i]);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(pool_body);
  for (std::thread& t : pool) t.join();

  for (const std::string& f : failures) note(out, false, f);
  return out;
}

// ---------------------------------------------------------------------------
// 6. Baseline degradation of the plain method (reported, soft).
Outcome criterion_baseline() {
  Outcome out;
  out.hard = false;
  ExperimentConfig cfg;
  for (double eps : {1e-5, 1e-8}) {
    const Viscosity nu(eps);
    const ExactFields fields(nu);
    for (Target t : {Target::u1, Target::w2}) {
      double best = 1e300;
      for (std::uint64_t seed : cfg.seeds) {
        auto [ansatz, trace] =
            train_target(t, Method::plain, nu, seed, cfg);
        best = std::min(best, error_row(ansatz, fields).rel_l2);
      }
      const double floor = t == Target::u1 ? 1e-2 : 1e-1;
      std::printf("  [criterion 6] eps=%s plain %s best rel_l2 = %s "
                  "(reported floor %s: %s)\n",
                  fmt(eps).c_str(), to_string(t), fmt(best).c_str(),
                  fmt(floor).c_str(), best >= floor ? "degraded as expected"
                                                    : "better than expected");
      std::fflush(stdout);
      if (!(best >= floor)) {
        out.detail += std::string(out.detail.empty() ? "" : "; ") + "plain " +
                      to_string(t) + "@eps=" + fmt(eps) +
                      " unexpectedly accurate: " + fmt(best);
      }
    }
  }
  if (out.detail.empty()) out.detail = "plain baselines degraded as reported";
  return out;
}

// ---------------------------------------------------------------------------
// 7. Asymptotic rates: inviscid L2 rate, layer-profile norm scaling, weak
// vorticity limit.
Outcome criterion_rates() {
  Outcome out;
  const SlopeFit rate = inviscid_rate_check(kSweep);
  note(out, rate.slope >= 0.2 && rate.slope <= 0.3,
       "inviscid slope " + fmt(rate.slope));

  const double inf = std::numeric_limits<double>::infinity();
  for (int m : {0, 1, 2}) {
    for (double p : {1.0, 2.0, inf}) {
      const SlopeFit fit = corrector_norm_check(m, p, kSweep);
      const double expected =
          (std::isinf(p) ? 0.0 : 1.0 / (2.0 * p)) - m / 2.0;
      note(out, std::abs(fit.slope - expected) <= 0.02,
           "profile norm m=" + std::to_string(m) + " p=" + fmt(p) + " slope " +
               fmt(fit.slope) + " vs " + fmt(expected));
    }
  }

  for (auto [name, psi] : std::vector<
           std::pair<const char*, std::function<double(double)>>>{
           {"z", [](double z) { return z; }},
           {"z^2", [](double z) { return z * z; }}}) {
    const WeakLimitRecord rec = weak_vorticity_limit_check(psi, kSweep);
    note(out, rec.slope >= 0.4 && rec.slope <= 0.6,
         std::string("weak limit psi=") + name + " slope " + fmt(rec.slope));
    for (std::size_t i = 1; i < rec.deltas.size(); ++i) {
      note(out, rec.deltas[i] < rec.deltas[i - 1],
           std::string("weak limit psi=") + name + " gap not decreasing");
    }
  }
  out.detail = "inviscid slope " + fmt(rate.slope);
  return out;
}

// ---------------------------------------------------------------------------
// 8. Optimizer sanity.
Outcome criterion_optimizer() {
  Outcome out;
  Objective rosen = [](const Vector& p, Vector& g) {
    const double x = p(0), y = p(1);
    g.resize(2);
    g(0) = -400.0 * x * (y - x * x) - 2.0 * (1.0 - x);
    g(1) = 200.0 * (y - x * x);
    return 100.0 * (y - x * x) * (y - x * x) + (1.0 - x) * (1.0 - x);
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const MinimizeResult res = minimize(rosen, x0);
  note(out, res.trace.iterations() <= 200,
       "rosenbrock took " + std::to_string(res.trace.iterations()));
  note(out,
       std::abs(res.x(0) - 1.0) <= 1e-8 && std::abs(res.x(1) - 1.0) <= 1e-8,
       "rosenbrock finished at distance " +
           fmt(std::max(std::abs(res.x(0) - 1.0), std::abs(res.x(1) - 1.0))));

  LbfgsConfig cfg;
  cfg.history = 1000;
  cfg.c1 = 1e-12;
  cfg.c2 = 1e-10;
  SplitMix64 rng(12);
  for (int d = 2; d <= 8; ++d) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    const Eigen::MatrixXd A =
        m.transpose() * m + Eigen::MatrixXd::Identity(d, d);
    Vector b(d);
    for (int i = 0; i < d; ++i) b(i) = rng.uniform(-2.0, 2.0);
    Objective quad = [&](const Vector& p, Vector& g) {
      g = A * p - b;
      return 0.5 * p.dot(A * p) - b.dot(p);
    };
    const MinimizeResult qres = minimize(quad, Vector::Ones(d), cfg);
    note(out, qres.trace.iterations() <= d + 1,
         "d=" + std::to_string(d) + " quadratic took " +
             std::to_string(qres.trace.iterations()));
  }
  out.detail =
      "rosenbrock iterations " + std::to_string(res.trace.iterations());
  return out;
}

// ---------------------------------------------------------------------------
// 9. Structural boundary conditions over random parameter draws.
Outcome criterion_structure() {
  Outcome out;
  for (double eps : {1e-2, 1e-6}) {
    const Viscosity nu(eps);
    const double est = std::exp(-1.0 / nu.sqrt_eps);
    for (std::uint64_t draw = 0; draw < 100; ++draw) {
      auto u1 = std::make_shared<Ansatz>(
          make_ansatz(Target::u1, Method::singular_layer, nu, draw));
      randomize(*u1, draw + 1);
      const double a0 = eval_jet(u1->main, 0.0, 0).value();
      const double a1 = eval_jet(u1->main, 1.0, 0).value();
      const double dir_bound =
          est * std::max({1.0, std::abs(a0), std::abs(a1)});
      note(out, std::abs(predict_value(*u1, 0.0)) <= dir_bound &&
                    std::abs(predict_value(*u1, 1.0)) <= dir_bound,
           "u1 wall value escaped at eps=" + fmt(eps));

      Ansatz u2 = make_ansatz(Target::u2, Method::singular_layer, nu,
                              draw + 300, u1);
      randomize(u2, draw + 2);
      auto w2 = std::make_shared<Ansatz>(
          make_ansatz(Target::w2, Method::singular_layer, nu, draw + 400));
      randomize(*w2, draw + 3);
      auto w3 = std::make_shared<Ansatz>(make_ansatz(
          Target::w3, Method::singular_layer, nu, draw + 500, u1));
      randomize(*w3, draw + 4);
      Ansatz w1 = make_ansatz(Target::w1, Method::singular_layer, nu,
                              draw + 600, u1, w2, w3);
      randomize(w1, draw + 5);

      for (double x : {0.21, 0.84}) {
        // Far-wall tails carry the opposite anchor and the opposite
        // corrector term, so the amplitude scale includes the corrector nets.
        auto wall_scale = [&](const Ansatz& a) {
          return std::max(
              {1.0, std::abs(eval_jet(a.main, x, 0.0, 0).value()),
               std::abs(eval_jet(a.main, x, 1.0, 0).value()),
               std::abs(eval_jet(*a.cor_left, x, 0.0, 0).value()),
               std::abs(eval_jet(*a.cor_left, x, 1.0, 0).value()),
               std::abs(eval_jet(*a.cor_right, x, 0.0, 0).value()),
               std::abs(eval_jet(*a.cor_right, x, 1.0, 0).value())});
        };
        note(out,
             std::abs(predict_value(u2, x, 0.0)) <= 3.0 * est * wall_scale(u2),
             "u2 wall value escaped at eps=" + fmt(eps));
        note(out,
             std::abs(predict_value(*w3, x, 0.0)) <=
                 3.0 * est * wall_scale(*w3),
             "w3 wall value escaped at eps=" + fmt(eps));

        const Jet w1jet = predict(w1, x, 0.0, 1);
        const double target1 = f2(nu, x, 0.0) / nu.eps;
        note(out,
             std::abs(w1jet.d[0][1] - target1) <=
                 1e-2 * (std::abs(target1) + 1.0),
             "w1 wall slope off at eps=" + fmt(eps));
      }
      const Jet w2jet = predict(*w2, 0.0, 0.0, 1);
      note(out,
           std::abs(w2jet.d[0][1] + f1(0.0) / nu.eps) <= 1e-2 / nu.eps,
           "w2 wall slope off at eps=" + fmt(eps));
    }
  }
  return out;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "manufactured-solution gate", criterion_manufactured},
      {2, "gradient exactness (10 losses x 10 draws)", criterion_gradients},
      {3, "singular-term cancellation in the u1 loss", criterion_cancellation},
      {4, "loss-scaling dichotomy", criterion_scaling},
      {5, "table-scale accuracy (best of 5 seeds)", criterion_accuracy},
      {6, "plain-method baseline degradation (reported)", criterion_baseline},
      {7, "asymptotic rates", criterion_rates},
      {8, "optimizer sanity", criterion_optimizer},
      {9, "structural boundary conditions", criterion_structure},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    }
  }

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const Outcome outcome = c.run();
    const char* verdict =
        outcome.pass ? "PASS" : (outcome.hard ? "FAIL" : "REPORT");
    std::printf("[%s] criterion %d: %s%s%s\n", verdict, c.id, c.title,
                outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass && outcome.hard) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
