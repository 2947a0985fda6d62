#include "slpinn/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace slpinn;

namespace {

LbfgsConfig make_lbfgs(int max_iter, double tol, int history,
                       double init_step) {
  LbfgsConfig cfg;
  cfg.max_iter = max_iter;
  cfg.tol = tol;
  cfg.history = history;
  cfg.init_step = init_step;
  return cfg;
}

py::dict trace_info(const LossTrace& trace) {
  py::dict info;
  info["iterations"] = trace.iterations();
  info["loss"] = trace.final_loss();
  info["reason"] = to_string(trace.reason);
  return info;
}

py::dict row_dict(const ErrorRow& row) {
  py::dict d;
  d["eps"] = row.eps;
  d["target"] = to_string(row.target);
  d["method"] = to_string(row.method);
  d["rel_l2"] = row.rel_l2;
  d["rel_linf"] = row.rel_linf;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary-layer PINN solvers for plane-parallel channel flow";

  // Closed-form problem data, vectorized over the float arguments.
  m.def("f1", py::vectorize([](double z) { return f1(z); }), py::arg("z"));
  m.def("dz_f1", py::vectorize([](double z) { return dz_f1(z); }),
        py::arg("z"));
  m.def("u1_inviscid", py::vectorize([](double z) { return u1_inviscid(z); }),
        py::arg("z"));
  m.def("u1_exact", py::vectorize([](double eps, double z) {
          return u1_exact(Viscosity(eps), z);
        }),
        py::arg("eps"), py::arg("z"));
  m.def("u2_exact", py::vectorize([](double eps, double x, double z) {
          return u2_exact(Viscosity(eps), x, z);
        }),
        py::arg("eps"), py::arg("x"), py::arg("z"));
  m.def("omega_exact", py::vectorize([](double eps, int component, double x,
                                        double z) {
          return omega_exact(Viscosity(eps), component, x, z);
        }),
        py::arg("eps"), py::arg("component"), py::arg("x"), py::arg("z"));
  m.def("f2", py::vectorize([](double eps, double x, double z) {
          return f2(Viscosity(eps), x, z);
        }),
        py::arg("eps"), py::arg("x"), py::arg("z"));

  m.def(
      "verify_manufactured",
      [](double eps) {
        const ResidualReport report =
            verify_manufactured(ExactFields(Viscosity(eps)));
        py::dict out;
        out["pass"] = report.pass;
        py::dict checks;
        for (const ResidualCheck& c : report.checks) {
          checks[c.name.c_str()] = c.max_rel_residual;
        }
        out["max_rel_residuals"] = checks;
        return out;
      },
      py::arg("eps"),
      "Residual gate of the closed-form fields; returns pass flag and the "
      "worst relative residual per check.");

  py::class_<Jet>(m, "Jet")
      .def_property_readonly("order", [](const Jet& j) { return j.order; })
      .def_property_readonly("value", [](const Jet& j) { return j.value(); })
      .def("partial", &Jet::partial, py::arg("ix"), py::arg("iz"));

  py::class_<ShallowNet>(m, "ShallowNet")
      .def_property_readonly("n_in",
                             [](const ShallowNet& n) { return n.n_in; })
      .def_property_readonly("n_hidden",
                             [](const ShallowNet& n) { return n.n_hidden; })
      .def_property_readonly("parameter_count", &ShallowNet::parameter_count)
      .def_property(
          "params",
          [](const ShallowNet& n) {
            Vector p(n.parameter_count());
            flatten(n, p.data());
            return p;
          },
          [](ShallowNet& n, const Vector& p) {
            if (p.size() != n.parameter_count()) {
              throw std::invalid_argument("parameter size mismatch");
            }
            unflatten(n, p.data());
          });

  m.def("init_net", &init_net, py::arg("n_in"), py::arg("n_hidden") = 20,
        py::arg("seed") = 0);
  m.def(
      "eval_jet",
      [](const ShallowNet& net, const std::vector<double>& point, int order) {
        return eval_jet(net, std::span<const double>(point), order);
      },
      py::arg("net"), py::arg("point"), py::arg("order"));

  py::class_<Ansatz, std::shared_ptr<Ansatz>>(m, "Ansatz")
      .def_property_readonly(
          "target", [](const Ansatz& a) { return to_string(a.target); })
      .def_property_readonly(
          "method", [](const Ansatz& a) { return to_string(a.method); })
      .def_property_readonly("eps", [](const Ansatz& a) { return a.nu.eps; })
      .def_property_readonly("parameters",
                             [](const Ansatz& a) { return get_parameters(a); })
      .def("predict",
           [](const Ansatz& a, double x, double z) {
             return predict_value(a, x, z);
           },
           py::arg("x"), py::arg("z"))
      .def(
          "predict_grid",
          [](const Ansatz& a, const std::vector<double>& xs,
             const std::vector<double>& zs) {
            py::array_t<double> out({xs.size(), zs.size()});
            auto view = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < xs.size(); ++i) {
              for (std::size_t j = 0; j < zs.size(); ++j) {
                view(i, j) = predict_value(a, xs[i], zs[j]);
              }
            }
            return out;
          },
          py::arg("xs"), py::arg("zs"))
      .def("save", &save_model, py::arg("path"));

  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "minimize",
      [](const std::function<std::pair<double, Vector>(const Vector&)>& f,
         const Vector& x0, int max_iter, double tol, int history,
         double init_step) {
        Objective objective = [&f](const Vector& x, Vector& grad) {
          auto [loss, g] = f(x);
          grad = g;
          return loss;
        };
        const MinimizeResult res =
            minimize(objective, x0, make_lbfgs(max_iter, tol, history, init_step));
        return py::make_tuple(res.x, trace_info(res.trace));
      },
      py::arg("f"), py::arg("x0"), py::arg("max_iter") = 50000,
      py::arg("tol") = 1e-8, py::arg("history") = 10,
      py::arg("init_step") = 0.1,
      "L-BFGS on a callable returning (loss, gradient). Returns the best "
      "parameters and a convergence summary.");

  m.def(
      "train_chain",
      [](const std::string& targets, const std::string& method, double eps,
         std::uint64_t seed, int max_iter, double tol) {
        ExperimentConfig cfg;
        cfg.targets = targets_from_string(targets);
        cfg.lbfgs.max_iter = max_iter;
        cfg.lbfgs.tol = tol;
        const Method m = method_from_string(method);
        const Viscosity nu(eps);
        const ExactFields fields(nu);

        py::dict out;
        std::shared_ptr<const Ansatz> u1, w2, w3;
        for (Target t : cfg.target_chain()) {
          std::shared_ptr<const Ansatz> up1, up2, up3;
          if (t != Target::u1 && t != Target::w2) up1 = u1;
          if (t == Target::w1) {
            up2 = w2;
            up3 = w3;
          }
          auto [ansatz, trace] =
              train_target(t, m, nu, seed, cfg, up1, up2, up3);
          auto frozen = std::make_shared<const Ansatz>(std::move(ansatz));
          if (t == Target::u1) u1 = frozen;
          if (t == Target::w2) w2 = frozen;
          if (t == Target::w3) w3 = frozen;

          py::dict cell = trace_info(trace);
          cell["errors"] = row_dict(error_row(*frozen, fields));
          cell["model"] = std::make_shared<Ansatz>(*frozen);
          out[to_string(t)] = cell;
        }
        return out;
      },
      py::arg("targets"), py::arg("method"), py::arg("eps"),
      py::arg("seed") = 0, py::arg("max_iter") = 50000,
      py::arg("tol") = 1e-8,
      "Trains the dependency chain for one viscosity and seed; returns a "
      "dict of per-target results.");

  m.def(
      "layered_quadrature",
      [](const std::function<double(double)>& f, double eps) {
        return layered_quadrature(f, Viscosity(eps));
      },
      py::arg("f"), py::arg("eps"));

  m.def(
      "inviscid_rate_slope",
      [](const std::vector<double>& eps_list) {
        return inviscid_rate_check(eps_list).slope;
      },
      py::arg("eps_list"));
  m.def(
      "corrector_norm_slope",
      [](int mder, double p, const std::vector<double>& eps_list) {
        return corrector_norm_check(mder, p, eps_list).slope;
      },
      py::arg("m"), py::arg("p"), py::arg("eps_list"));
  m.def(
      "weak_limit_deltas",
      [](const std::function<double(double)>& psi,
         const std::vector<double>& eps_list) {
        const WeakLimitRecord rec = weak_vorticity_limit_check(psi, eps_list);
        py::dict out;
        out["eps"] = rec.eps;
        out["deltas"] = rec.deltas;
        out["target"] = rec.target;
        out["slope"] = rec.slope;
        return out;
      },
      py::arg("psi"), py::arg("eps_list"));

  m.attr("__version__") = version_string();
}
