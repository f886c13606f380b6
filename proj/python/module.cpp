// Python bindings for the wassbound core: distributions, chain models,
// certificates, bound formulas, and the Monte Carlo estimators.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wassbound/bounds.hpp"
#include "wassbound/certify.hpp"
#include "wassbound/distributions.hpp"
#include "wassbound/metrics.hpp"
#include "wassbound/models.hpp"
#include "wassbound/scenario.hpp"

namespace py = pybind11;
using namespace wassbound;

namespace {

nlohmann::json json_from_str(const std::string& s) { return nlohmann::json::parse(s); }

py::dict curve_to_dict(const Curve& c) {
  py::list ns, vals, ses;
  for (const auto& p : c.points) {
    ns.append(p.n);
    vals.append(p.value);
    ses.append(p.se);
  }
  py::dict d;
  d["n"] = ns;
  d["value"] = vals;
  d["stderr"] = ses;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wasserstein convergence bounds for Markov chains from contractive-drift "
            "certificates";

  py::class_<DistributionSpec>(m, "DistributionSpec")
      .def_static("pareto", &DistributionSpec::pareto, py::arg("shape"), py::arg("scale"))
      .def_static("normal", &DistributionSpec::normal, py::arg("mean"), py::arg("stdev"))
      .def_static("exponential", &DistributionSpec::exponential, py::arg("rate"))
      .def_static("two_point", &DistributionSpec::two_point, py::arg("a"), py::arg("b"),
                  py::arg("p"))
      .def_static("laplace", &DistributionSpec::laplace, py::arg("scale"))
      .def_static("deterministic", &DistributionSpec::deterministic, py::arg("value"))
      .def_static("shifted", &DistributionSpec::shifted, py::arg("base"), py::arg("offset"))
      .def("mean", &DistributionSpec::mean)
      .def("variance", &DistributionSpec::variance)
      .def("cdf", &DistributionSpec::cdf, py::arg("z"))
      .def("mgf", &DistributionSpec::mgf, py::arg("a"))
      .def("mgf_strip_upper", &DistributionSpec::mgf_strip_upper)
      .def("support_lower", &DistributionSpec::support_lower)
      .def("support_upper", &DistributionSpec::support_upper)
      .def("sample",
           [](const DistributionSpec& spec, std::uint64_t seed, std::size_t count) {
             Rng rng(seed);
             std::vector<double> out(count);
             for (auto& v : out) v = spec.sample(rng);
             return out;
           },
           py::arg("seed"), py::arg("count") = 1)
      .def("to_json", [](const DistributionSpec& s) { return s.to_json().dump(); })
      .def_static("from_json",
                  [](const std::string& s) { return DistributionSpec::from_json(json_from_str(s)); })
      .def("__repr__", &DistributionSpec::describe);

  py::enum_<MomentFlavor>(m, "MomentFlavor")
      .value("raw", MomentFlavor::raw)
      .value("absolute", MomentFlavor::absolute)
      .value("positive_part", MomentFlavor::positive_part);

  m.def("moment", &moment, py::arg("spec"), py::arg("order"), py::arg("flavor"));
  m.def("residual_lower_bound",
        [](const DistributionSpec& spec) {
          const auto rb = residual_lower_bound(spec);
          py::dict d;
          d["b"] = rb.b;
          d["minimizer"] = rb.minimizer;
          d["tail_note"] = rb.tail_note;
          return d;
        },
        py::arg("spec"));

  py::class_<LyapunovSpec>(m, "LyapunovSpec")
      .def_static("poly_shift", &LyapunovSpec::poly_shift, py::arg("m"), py::arg("M"),
                  py::arg("offset"), py::arg("c"))
      .def_static("wedge", &LyapunovSpec::wedge, py::arg("delta"))
      .def_static("exp_sum", &LyapunovSpec::exp_sum, py::arg("a"))
      .def_static("constant", &LyapunovSpec::constant, py::arg("value"))
      .def("__call__", [](const LyapunovSpec& v, double x) { return v(x); })
      .def("antiderivative", &LyapunovSpec::antiderivative)
      .def("__repr__", &LyapunovSpec::describe);

  py::class_<ChainModel>(m, "ChainModel")
      .def_static("gg1", &ChainModel::gg1, py::arg("Z"))
      .def_static("gg1_ht", &ChainModel::gg1_ht, py::arg("Y"), py::arg("delta"))
      .def_static("rbm_skeleton", &ChainModel::rbm_skeleton, py::arg("r"), py::arg("sigma"),
                  py::arg("s"), py::arg("substeps") = 1024)
      .def_static("tandem", &ChainModel::tandem, py::arg("rates"), py::arg("T"), py::arg("Z"))
      .def_static("priority", &ChainModel::priority, py::arg("r"), py::arg("T"), py::arg("Z"))
      .def_static("sgd_nsc", &ChainModel::sgd_nsc, py::arg("m"), py::arg("alpha"), py::arg("Z"))
      .def_static("sgd_ht", &ChainModel::sgd_ht, py::arg("beta"), py::arg("alpha"), py::arg("Z"))
      .def_static("ar1", &ChainModel::ar1, py::arg("alpha"), py::arg("Y"))
      .def_static("sgd_momentum", &ChainModel::sgd_momentum, py::arg("alpha"), py::arg("beta"),
                  py::arg("Y"))
      .def("dim", &ChainModel::dim)
      .def("kind", &ChainModel::kind_name)
      .def("step",
           [](const ChainModel& model, std::vector<double> x, std::uint64_t seed) {
             Rng rng(seed);
             const double lip = model.step(x, rng);
             return py::make_tuple(x, lip);
           },
           py::arg("x"), py::arg("seed"))
      .def("to_json", [](const ChainModel& mdl) { return mdl.to_json().dump(); })
      .def_static("from_json",
                  [](const std::string& s) { return ChainModel::from_json(json_from_str(s)); });

  m.def("tandem_drain",
        [](const std::vector<double>& rates, const std::vector<double>& x, double t) {
          return tandem_drain(rates, x, t);
        },
        py::arg("rates"), py::arg("x"), py::arg("t"));
  m.def("simulate_marginal1", &simulate_marginal1, py::arg("model"), py::arg("x0"), py::arg("n"),
        py::arg("reps"), py::arg("seed"));

  m.def("dv_interval", &dv_interval, py::arg("V"), py::arg("x"), py::arg("y"));
  m.def("w1_empirical",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return w1_empirical(a, b);
        },
        py::arg("a"), py::arg("b"));
  m.def("w1_discrete_exact",
        [](const std::vector<double>& xs_p, const std::vector<double>& ps_p,
           const std::vector<double>& xs_q, const std::vector<double>& ps_q) {
          return w1_discrete_exact({xs_p, ps_p}, {xs_q, ps_q});
        },
        py::arg("xs_p"), py::arg("ps_p"), py::arg("xs_q"), py::arg("ps_q"));
  m.def("e_dv_one_step",
        [](const ChainModel& model, double x0, const LyapunovSpec& V, std::size_t reps,
           std::uint64_t seed) {
          const auto e = e_dv_one_step(model, x0, V, reps, seed);
          return py::make_tuple(e.value, e.se, e.exact);
        },
        py::arg("model"), py::arg("x0"), py::arg("V"), py::arg("reps"), py::arg("seed"));
  m.def("backward_distance_curve",
        [](const ChainModel& model, const std::vector<double>& x0, int horizon, std::size_t reps,
           std::uint64_t seed, const std::vector<int>& n_grid) {
          return curve_to_dict(backward_distance_curve(model, x0, horizon, reps, seed, n_grid));
        },
        py::arg("model"), py::arg("x0"), py::arg("horizon"), py::arg("reps"), py::arg("seed"),
        py::arg("n_grid") = std::vector<int>{});
  m.def("gg1_monotone_w1",
        [](const ChainModel& model, int n, int horizon, std::size_t reps, std::uint64_t seed) {
          const auto e = gg1_monotone_w1(model, n, horizon, reps, seed);
          return py::make_tuple(e.value, e.se, e.plateau_warning);
        },
        py::arg("model"), py::arg("n"), py::arg("horizon"), py::arg("reps"), py::arg("seed"));
  m.def("spitzer_w1",
        [](const ChainModel& model, int n, int k_max, std::size_t reps, std::uint64_t seed) {
          const auto e = spitzer_w1(model, n, k_max, reps, seed);
          return py::make_tuple(e.value, e.se, e.truncated);
        },
        py::arg("model"), py::arg("n"), py::arg("k_max"), py::arg("reps"), py::arg("seed"));

  py::class_<Certificate>(m, "Certificate")
      .def_property_readonly("kind", &Certificate::kind_name)
      .def_readonly("r", &Certificate::r)
      .def_readonly("b", &Certificate::b)
      .def_readonly("delta", &Certificate::delta)
      .def_readonly("u_const", &Certificate::u_const)
      .def_readonly("cd_inequality", &Certificate::cd_inequality)
      .def_readonly("provenance", &Certificate::provenance)
      .def_property_readonly("params", [](const Certificate& c) {
        py::dict d;
        for (const auto& [k, v] : c.params) d[py::str(k)] = v;
        return d;
      })
      .def("to_json", [](const Certificate& c) { return c.to_json().dump(); });

  m.def("gg1_drift_value", &gg1_drift_value, py::arg("Z"), py::arg("m"), py::arg("M"),
        py::arg("x"));
  m.def("gg1_large_m_search",
        [](const DistributionSpec& Z, int mm, double M_lo, double M_hi, std::size_t points,
           double x_max, double x_step) {
          GridSearchRange r{M_lo, M_hi, points};
          return gg1_large_m_search(Z, mm, r, x_max, x_step);
        },
        py::arg("Z"), py::arg("m"), py::arg("M_lo") = 0.1, py::arg("M_hi") = 20.0,
        py::arg("points") = 64, py::arg("x_max") = 100.0, py::arg("x_step") = 0.01);
  m.def("ht_certificate",
        [](const DistributionSpec& Y, int mm, double delta) {
          const auto h = ht_certificate(Y, mm, delta);
          py::dict d;
          d["M"] = h.M;
          d["c"] = h.c;
          d["drift_const"] = h.drift_const;
          d["b_resid"] = h.b_resid;
          d["certificate"] = h.cert;
          return d;
        },
        py::arg("Y"), py::arg("m"), py::arg("delta"));
  m.def("tandem_rate",
        [](const DistributionSpec& Z, const DistributionSpec& T, double r_star, double zeta,
           double input_scale) {
          const auto r = tandem_rate(Z, T, r_star, zeta, input_scale);
          return py::make_tuple(r.a_star, r.lambda_star);
        },
        py::arg("Z"), py::arg("T"), py::arg("r_star"), py::arg("zeta"),
        py::arg("input_scale") = 1.0);
  m.def("sgd_nsc_certificate", &sgd_nsc_certificate, py::arg("alpha"), py::arg("m"), py::arg("Z"));
  m.def("sgd_ht_certificate", &sgd_ht_certificate, py::arg("alpha"), py::arg("beta"),
        py::arg("gamma"), py::arg("Z"));
  m.def("kv_estimate",
        [](const ChainModel& model, const LyapunovSpec& V, const std::vector<double>& x,
           std::size_t reps, std::uint64_t seed) {
          const auto e = kv_estimate(model, V, x, reps, seed);
          return py::make_tuple(e.value, e.se);
        },
        py::arg("model"), py::arg("V"), py::arg("x"), py::arg("reps"), py::arg("seed"));

  m.def("polynomial_bound", &polynomial_bound, py::arg("n"), py::arg("b"), py::arg("e_dv"));
  m.def("polynomial_bound_scaled", &polynomial_bound_scaled, py::arg("n"), py::arg("m"),
        py::arg("delta"), py::arg("e_dv"));
  m.def("geometric_bound", &geometric_bound, py::arg("n"), py::arg("r"), py::arg("e_dv"));
  m.def("semi_exponential_bound", &semi_exponential_bound, py::arg("n"), py::arg("delta"),
        py::arg("lambda_"), py::arg("e_dv"));
  m.def("rbm_bound", &rbm_bound, py::arg("t"), py::arg("s"), py::arg("r"), py::arg("sigma"),
        py::arg("e_exp_xs"));
  m.def("ht_uniform_bound", &ht_uniform_bound, py::arg("n"), py::arg("m"), py::arg("b_resid"),
        py::arg("Y"));
  m.def("tandem_bound", &tandem_bound, py::arg("n"), py::arg("a_star"), py::arg("lambda_star"),
        py::arg("Z"));
  m.def("clt_sigma2_bound",
        [](const std::string& kind, double r, double L, double e_term) {
          return clt_sigma2_bound(
              kind == "geometric" ? CltBoundKind::geometric : CltBoundKind::polynomial_b3, r, L,
              e_term);
        },
        py::arg("kind"), py::arg("r"), py::arg("L"), py::arg("e_term"));

  m.def("run_scenario",
        [](const std::string& verb, const std::string& scenario_json, const std::string& out_dir) {
          const Scenario s = Scenario::from_json(json_from_str(scenario_json));
          RunResult r;
          if (verb == "verify")
            r = run_verify(s, out_dir);
          else if (verb == "bound")
            r = run_bound(s, out_dir);
          else if (verb == "simulate")
            r = run_simulate(s, out_dir);
          else if (verb == "compare")
            r = run_compare(s, out_dir);
          else if (verb == "clt")
            r = run_clt(s, out_dir);
          else
            throw std::invalid_argument("unknown verb: " + verb);
          return py::make_tuple(r.exit_code, r.summary.dump());
        },
        py::arg("verb"), py::arg("scenario_json"), py::arg("out_dir"));
}
