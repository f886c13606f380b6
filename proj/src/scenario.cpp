#include "wassbound/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wassbound/svg.hpp"

namespace wassbound {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void usage_check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << content;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

std::vector<double> parse_n_grid(const json& j) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& v : j) grid.push_back(v.get<double>());
  } else if (j.is_object()) {
    const double lo = j.at("lo"), hi = j.at("hi");
    if (j.contains("step")) {
      const double step = j.at("step");
      usage_check(step > 0, "n_grid: step must be positive");
      for (double n = lo; n <= hi + 1e-9; n += step) grid.push_back(n);
    } else {
      const int count = j.at("count");
      usage_check(count >= 2, "n_grid: count must be >= 2");
      const bool log_spaced = j.value("spacing", "linear") == std::string("log");
      for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        grid.push_back(log_spaced ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
      }
    }
  } else {
    usage_check(false, "n_grid: expected array or {lo,hi,count|step}");
  }
  usage_check(!grid.empty(), "n_grid: empty");
  return grid;
}

std::vector<int> to_int_grid(const std::vector<double>& grid) {
  std::vector<int> g;
  g.reserve(grid.size());
  for (double v : grid) g.push_back(static_cast<int>(std::llround(v)));
  return g;
}

DriftForm parse_drift_form(const json& j) {
  const std::string form = j.at("form").get<std::string>();
  if (form == "zero") return DriftForm::zero();
  if (form == "constant") return DriftForm::constant(j.at("value"));
  if (form == "multiple_of_v") return DriftForm::multiple_of_v(j.at("r"));
  if (form == "scaled_power_of_v")
    return DriftForm::scaled_power_of_v(j.at("delta"), j.at("exponent"));
  if (form == "spec") return DriftForm::of_spec(LyapunovSpec::from_json(j.at("spec")));
  throw std::invalid_argument("unknown drift form: " + form);
}

struct CertOutcome {
  bool accepted = false;
  Certificate cert;
  std::string reject_reason;
  json extras = json::object();
};

double tandem_premultiplier_closed(const std::function<double(double)>& mgf, double a_star,
                                   double fallback_mean) {
  if (a_star < 1e-12) return fallback_mean;
  return (mgf(a_star) - 1.0) / a_star;
}

// Builds the certificate requested by the scenario. Domain rejections are
// reported, not thrown; malformed requests throw std::invalid_argument.
CertOutcome build_certificate(const Scenario& s) {
  CertOutcome out;
  usage_check(s.raw.contains("certificate"), "scenario: missing certificate request");
  const json& req = s.raw.at("certificate");
  const std::string method = req.at("method").get<std::string>();

  try {
    if (method == "gg1_fixed") {
      const int m = req.at("m");
      const double M = req.at("M"), delta = req.at("delta");
      const double x_max = req.value("x_max", 100.0), x_step = req.value("x_step", 0.01);
      const DistributionSpec Z = s.model.increment_law();
      double inf = gg1_drift_limit(Z, m);
      double worst = kInf;
      for (double x = 0.0; x <= x_max; x += x_step) {
        const double v = gg1_drift_value(Z, m, M, x);
        if (v < inf) {
          inf = v;
          worst = x;
        }
      }
      Certificate cert;
      cert.kind = Certificate::Kind::polynomial;
      cert.b = m;
      cert.delta = delta;
      cert.u_const = std::pow(delta, m);
      cert.V = LyapunovSpec::poly_shift(m, M, 0.0, 0.0);
      cert.params["M"] = M;
      cert.params["drift_infimum"] = inf;
      cert.cd_inequality =
          "KV <= V - " + std::to_string(delta) + "*V^(1-1/" + std::to_string(m) + ")";
      cert.provenance = "analytic";
      cert.report.accepted = inf >= delta;
      cert.report.min_slack = inf - delta;
      cert.report.worst_x = std::isfinite(worst) ? worst : x_max;
      cert.report.grid_points = static_cast<std::size_t>(x_max / x_step) + 1;
      cert.report.detail = "analytic drift infimum " + fmt17(inf) + " vs required " + fmt17(delta);
      out.cert = cert;
      out.accepted = cert.report.accepted;
      if (!out.accepted) out.reject_reason = cert.report.detail;
      return out;
    }

    if (method == "gg1_large_m") {
      const int m = req.at("m");
      GridSearchRange range;
      range.lo = req.value("M_lo", 0.1);
      range.hi = req.value("M_hi", 20.0);
      range.points = req.value("M_points", 64);
      const double x_max = req.value("x_max", 100.0), x_step = req.value("x_step", 0.01);
      out.cert = gg1_large_m_search(s.model.increment_law(), m, range, x_max, x_step);
      out.accepted = true;
      return out;
    }

    if (method == "ht") {
      const int m = req.at("m");
      const double delta = req.at("delta");
      usage_check(s.model.kind_name() == "gg1_ht", "ht certificate requires a gg1_ht model");
      const auto& p = std::get<ChainModel::Gg1Ht>(s.model.params());
      HtCertificate h = ht_certificate(p.Y, m, delta);
      out.cert = h.cert;
      out.extras["M"] = h.M;
      out.extras["c"] = h.c;
      out.extras["drift_const"] = h.drift_const;
      out.extras["b_resid"] = h.b_resid;
      out.accepted = true;
      return out;
    }

    if (method == "tandem_rate") {
      TandemRate rate;
      double premul = 0;
      if (s.model.kind_name() == "tandem") {
        const auto& p = std::get<ChainModel::Tandem>(s.model.params());
        const double r_star = *std::min_element(p.rates.begin(), p.rates.end());
        double zeta = req.value("zeta", 0.0);
        if (zeta <= 0) {
          const double strip = p.Z.mgf_strip_upper();
          usage_check(std::isfinite(strip) && strip > 0,
                      "tandem_rate: zeta required when the mgf strip is unbounded");
          zeta = 0.99 * strip;
        }
        rate = tandem_rate(p.Z, p.T, r_star, zeta);
        premul = tandem_premultiplier_closed([&](double a) { return p.Z.mgf(a); }, rate.a_star,
                                             p.Z.mean());
      } else if (s.model.kind_name() == "priority") {
        const auto& p = std::get<ChainModel::Priority>(s.model.params());
        double zeta = req.value("zeta", 0.0);
        if (zeta <= 0) {
          double strip = kInf;
          for (const auto& z : p.Z) strip = std::min(strip, z.mgf_strip_upper());
          usage_check(std::isfinite(strip) && strip > 0,
                      "tandem_rate: zeta required when the mgf strip is unbounded");
          zeta = 0.99 * strip;
        }
        rate = tandem_rate_multi(p.Z, p.T, p.r, zeta);
        premul = tandem_premultiplier_closed(
            [&](double a) {
              double m = 1;
              for (const auto& z : p.Z) m *= z.mgf(a);
              return m;
            },
            rate.a_star, [&] {
              double m = 0;
              for (const auto& z : p.Z) m += z.mean();
              return m;
            }());
      } else {
        usage_check(false, "tandem_rate certificate requires a tandem or priority model");
      }
      Certificate cert;
      cert.kind = Certificate::Kind::geometric;
      cert.r = 1.0 - rate.lambda_star;
      cert.V = LyapunovSpec::exp_sum(rate.a_star);
      cert.params["a_star"] = rate.a_star;
      cert.params["lambda_star"] = rate.lambda_star;
      cert.params["premul_empty"] = premul;
      cert.params["stationarity_residual"] = rate.stationarity_residual;
      cert.cd_inequality = "KV <= " + fmt17(rate.lambda_star) + "*V  with V(x)=exp(" +
                           fmt17(rate.a_star) + "*sum(x))";
      cert.provenance = "analytic";
      cert.report.accepted = true;
      out.cert = cert;
      out.accepted = true;
      return out;
    }

    if (method == "sgd_nsc") {
      usage_check(s.model.kind_name() == "sgd_nsc", "sgd_nsc certificate requires a sgd_nsc model");
      const auto& p = std::get<ChainModel::SgdNsc>(s.model.params());
      out.cert = sgd_nsc_certificate(p.alpha, p.m, p.Z);
      out.accepted = true;
      return out;
    }

    if (method == "sgd_ht") {
      usage_check(s.model.kind_name() == "sgd_ht", "sgd_ht certificate requires a sgd_ht model");
      const auto& p = std::get<ChainModel::SgdHt>(s.model.params());
      const double gamma = req.at("gamma");
      out.cert = sgd_ht_certificate(p.alpha, p.beta, gamma, p.Z);
      out.accepted = true;
      return out;
    }

    if (method == "rbm_exp") {
      usage_check(s.model.kind_name() == "rbm_skeleton", "rbm_exp requires a rbm_skeleton model");
      const auto& p = std::get<ChainModel::RbmSkeleton>(s.model.params());
      // boundary removal: K^s V <= lambda^s V for V(x) = e^{bx} with
      // b = r/sigma^2, lambda = exp(-r^2/(2 sigma^2))
      const double bexp = p.r / (p.sigma * p.sigma);
      const double lambda = std::exp(-p.r * p.r / (2.0 * p.sigma * p.sigma));
      const double lambda_s = std::pow(lambda, p.s);
      Certificate cert;
      cert.kind = Certificate::Kind::geometric;
      cert.r = 1.0 - lambda_s;
      cert.V = LyapunovSpec::exp_sum(bexp);
      cert.params["b"] = bexp;
      cert.params["lambda"] = lambda;
      cert.cd_inequality = "K^s V <= lambda^s V  with V(x)=exp(" + fmt17(bexp) +
                           "*x), lambda=" + fmt17(lambda);
      cert.provenance = "analytic";
      cert.report.accepted = true;
      out.cert = cert;
      out.accepted = true;
      return out;
    }

    if (method == "ar1_contraction") {
      usage_check(s.model.kind_name() == "ar1", "ar1_contraction requires an ar1 model");
      const auto& p = std::get<ChainModel::Ar1>(s.model.params());
      Certificate cert;
      cert.kind = Certificate::Kind::geometric;
      cert.r = p.alpha;
      cert.V = LyapunovSpec::constant(1.0);
      cert.cd_inequality = "K1 <= (1-" + fmt17(p.alpha) + ")*1  (constant contraction factor)";
      cert.provenance = "analytic";
      cert.report.accepted = true;
      out.cert = cert;
      out.accepted = true;
      return out;
    }

    if (method == "cd_grid") {
      const LyapunovSpec V = LyapunovSpec::from_json(req.at("V"));
      const DriftForm U = parse_drift_form(req.at("U"));
      const json& g = req.at("grid");
      const double lo = g.at("lo"), hi = g.at("hi"), step = g.at("step");
      std::vector<std::vector<double>> grid;
      for (double x = lo; x <= hi + 1e-12; x += step) grid.push_back({x});
      const std::size_t reps = req.value("reps", 20000);
      const double confidence = req.value("confidence", 0.99);
      const auto rep = check_cd_grid(s.model, V, U, grid, reps, confidence, s.seed);

      Certificate cert;
      const std::string kind = req.value("kind", "polynomial");
      if (kind == "geometric") {
        cert.kind = Certificate::Kind::geometric;
        cert.r = U.coefficient;
      } else if (kind == "semi_exponential") {
        cert.kind = Certificate::Kind::semi_exponential;
        cert.se_delta = U.coefficient;
        cert.se_lambda = req.at("lambda");
      } else {
        cert.kind = Certificate::Kind::polynomial;
        usage_check(U.kind == DriftForm::Kind::scaled_power_of_v ||
                        U.kind == DriftForm::Kind::constant,
                    "cd_grid polynomial certificate needs U = delta*V^(1-1/b) or constant");
        if (U.kind == DriftForm::Kind::scaled_power_of_v) {
          cert.b = 1.0 / (1.0 - U.exponent);
          cert.delta = U.coefficient;
          cert.u_const = std::pow(cert.delta, cert.b);
        } else {
          cert.b = req.at("b");
          cert.u_const = U.coefficient;
          cert.delta = std::pow(cert.u_const, 1.0 / cert.b);
        }
      }
      cert.V = V;
      cert.cd_inequality = "KV <= V - " + U.describe();
      cert.provenance = "grid_numeric";
      cert.report.accepted = rep.accepted;
      cert.report.min_slack = rep.min_slack;
      cert.report.min_lower_bound = rep.min_lower_bound;
      cert.report.worst_x = rep.worst_x;
      cert.report.grid_points = grid.size();
      cert.report.reps = reps;
      cert.report.confidence = confidence;
      cert.report.seed = s.seed;
      cert.report.detail = rep.accepted
                               ? "all one-sided lower confidence bounds nonnegative"
                               : "violated at x = " + fmt17(rep.worst_x);
      out.cert = cert;
      out.accepted = rep.accepted;
      if (!rep.accepted) out.reject_reason = cert.report.detail;
      return out;
    }

    if (method == "tree") {
      TreeSpec tree;
      const json& tj = req.at("tree");
      tree.K = tj.at("K");
      tree.L = tj.at("L");
      tree.rates = tj.at("rates").get<std::vector<double>>();
      tree.routing = tj.at("routing").get<std::vector<std::vector<double>>>();
      const DistributionSpec Z = DistributionSpec::from_json(req.at("Z"));
      const DistributionSpec T = DistributionSpec::from_json(req.at("T"));
      double zeta = req.value("zeta", 0.0);
      if (zeta <= 0) {
        const double strip = Z.mgf_strip_upper();
        usage_check(std::isfinite(strip) && strip > 0,
                    "tree: zeta required when the mgf strip is unbounded");
        zeta = 0.99 * strip;
      }
      const auto specs = tree_decompose(tree, Z, T);
      const TreeBound tb = tree_bound(0.0, specs, Z, T, zeta);
      Certificate cert;
      cert.kind = Certificate::Kind::geometric;
      cert.r = 1.0 - tb.lambda_bar;
      cert.V = LyapunovSpec::exp_sum(tb.a_bar);
      cert.params["a_bar"] = tb.a_bar;
      cert.params["lambda_bar"] = tb.lambda_bar;
      cert.params["premul_empty"] =
          tandem_premultiplier_closed([&](double a) { return Z.mgf(a); }, tb.a_bar, Z.mean());
      cert.params["paths"] = static_cast<double>(specs.size());
      cert.cd_inequality = "per-path KV <= lambda_*(b) V; lambda_bar = max_b lambda_*(b)";
      cert.provenance = "analytic";
      cert.report.accepted = true;
      out.cert = cert;
      out.accepted = true;
      json paths = json::array();
      for (std::size_t i = 0; i < specs.size(); ++i) {
        json pj{{"path", specs[i].path},
                {"rates", specs[i].rates},
                {"input_scale", specs[i].input_scale},
                {"a_star", tb.per_path[i].a_star},
                {"lambda_star", tb.per_path[i].lambda_star}};
        paths.push_back(pj);
      }
      out.extras["paths"] = paths;
      return out;
    }

    usage_check(false, "unknown certificate method: " + method);
  } catch (const std::domain_error& e) {
    out.accepted = false;
    out.reject_reason = e.what();
    return out;
  }
  return out;
}

// The prefactor (E d_V(X0, X1) or the tandem pre-multiplier) for the bound
// curve of an accepted certificate.
Estimate resolve_e_dv(const Scenario& s, const Certificate& cert) {
  const json cfg = s.raw.contains("bound") ? s.raw.at("bound").value("e_dv", json::object())
                                           : json::object();
  const std::string mode = cfg.value("mode", "auto");
  if (mode == "value") return {cfg.at("value").get<double>(), 0.0, true};
  if (auto it = cert.params.find("premul_empty"); it != cert.params.end())
    return {it->second, 0.0, true};

  double x0 = 0.0;
  if (s.raw.contains("simulation") && s.raw.at("simulation").contains("x0"))
    x0 = s.raw.at("simulation").at("x0").at(0).get<double>();
  const std::size_t reps = cfg.value("reps", 200000);
  const Estimate e = e_dv_one_step(s.model, x0, cert.V, reps, mix_seed(s.seed, 0xedf));
  if (mode == "exact") usage_check(e.exact, "e_dv: no closed form available for this scenario");
  return e;
}

Curve compute_bound_curve(const Scenario& s, const Certificate& cert,
                          const std::vector<double>& n_grid, json& summary) {
  const json cfg = s.raw.value("bound", json::object());
  const std::string formula = cfg.value("formula", "from_certificate");
  if (formula == "from_certificate") {
    const Estimate e_dv = resolve_e_dv(s, cert);
    summary["e_dv"] = e_dv.value;
    summary["e_dv_exact"] = e_dv.exact;
    return bound_curve(cert, e_dv.value, n_grid);
  }
  if (formula == "ht_uniform") {
    usage_check(s.model.kind_name() == "gg1_ht", "ht_uniform bound requires a gg1_ht model");
    const auto& p = std::get<ChainModel::Gg1Ht>(s.model.params());
    const int m = cfg.at("m");
    const double b = residual_lower_bound(p.Y).b;
    summary["b_resid"] = b;
    Curve c;
    for (double n : n_grid) c.points.push_back({n, ht_uniform_bound(n, m, b, p.Y), 0.0});
    return c;
  }
  if (formula == "rbm") {
    usage_check(s.model.kind_name() == "rbm_skeleton", "rbm bound requires a rbm_skeleton model");
    const auto& p = std::get<ChainModel::RbmSkeleton>(s.model.params());
    const double s_time = cfg.value("s", p.s);
    const int s_steps = static_cast<int>(std::llround(s_time / p.s));
    usage_check(s_steps >= 1, "rbm bound: s must be at least one skeleton step");
    const std::size_t reps = cfg.value("e_exp_reps", 100000);
    const double inflate = cfg.value("inflate_sigmas", 3.0);
    const double bexp = p.r / (p.sigma * p.sigma);
    const auto samples = marginal_samples(s.model, 0.0, {s_steps}, reps, mix_seed(s.seed, 0xbb));
    double sum = 0, sumsq = 0;
    for (double x : samples[0]) {
      const double v = std::exp(bexp * x);
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(reps);
    const double var = std::max(0.0, (sumsq - sum * mean) / static_cast<double>(reps - 1));
    const double e_exp = mean + inflate * std::sqrt(var / static_cast<double>(reps));
    summary["e_exp_xs"] = mean;
    summary["e_exp_xs_inflated"] = e_exp;
    Curve c;
    for (double t : n_grid) c.points.push_back({t, rbm_bound(t, s_time, p.r, p.sigma, e_exp), 0.0});
    return c;
  }
  usage_check(false, "unknown bound formula: " + formula);
  return {};
}

Curve compute_empirical_curve(const Scenario& s, const std::vector<double>& n_grid,
                              json& summary) {
  usage_check(s.raw.contains("simulation"), "scenario: missing simulation budget");
  const json& cfg = s.raw.at("simulation");
  const std::string estimator = cfg.value("estimator", "monotone_gap");
  const std::size_t reps = cfg.at("reps");
  usage_check(reps > 0, "simulation: reps must be positive");
  const std::uint64_t seed = mix_seed(s.seed, 0x51e);

  std::vector<int> grid_steps = to_int_grid(n_grid);
  const double time_scale = cfg.value("time_scale", 1.0);
  const double state_scale = cfg.value("state_scale", 1.0);
  if (time_scale != 1.0)
    for (std::size_t i = 0; i < n_grid.size(); ++i)
      grid_steps[i] = static_cast<int>(std::floor(n_grid[i] * time_scale));

  if (estimator == "monotone_gap") {
    const int horizon = cfg.at("horizon");
    bool warn = false;
    Curve c = gg1_monotone_w1_curve(s.model, grid_steps, horizon, reps, seed, &warn);
    summary["plateau_warning"] = warn;
    for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i].n = n_grid[i];
    return c;
  }
  if (estimator == "spitzer") {
    const int k_max = cfg.value("k_max", 200);
    std::vector<bool> flags;
    Curve c = spitzer_w1_curve(s.model, grid_steps, k_max, reps, seed, &flags);
    summary["truncation_flag"] = std::any_of(flags.begin(), flags.end(), [](bool f) { return f; });
    for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i].n = n_grid[i];
    return c;
  }
  if (estimator == "backward") {
    const int horizon = cfg.at("horizon");
    std::vector<double> x0(static_cast<std::size_t>(s.model.dim()), 0.0);
    if (cfg.contains("x0")) x0 = cfg.at("x0").get<std::vector<double>>();
    Curve c = backward_distance_curve(s.model, x0, horizon, reps, seed, grid_steps);
    for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i].n = n_grid[i];
    return c;
  }
  if (estimator == "quantile") {
    const int horizon = cfg.at("horizon");
    double x0 = 0.0;
    if (cfg.contains("x0")) x0 = cfg.at("x0").at(0).get<double>();
    const int batches = cfg.value("batches", 10);
    std::vector<int> steps = grid_steps;
    steps.push_back(horizon);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    const auto samples = marginal_samples(s.model, x0, steps, reps, seed);
    auto col_of = [&](int step) {
      const auto it = std::lower_bound(steps.begin(), steps.end(), step);
      return static_cast<std::size_t>(it - steps.begin());
    };
    const auto& ref = samples[col_of(horizon)];
    Curve c;
    for (std::size_t i = 0; i < grid_steps.size(); ++i) {
      const auto& col = samples[col_of(grid_steps[i])];
      const double w = state_scale * w1_empirical(col, ref);
      // dispersion from batch splits (conservative for the full-sample value)
      double se = 0.0;
      if (batches >= 2 && reps >= static_cast<std::size_t>(2 * batches)) {
        const std::size_t bs = reps / static_cast<std::size_t>(batches);
        double bsum = 0, bsumsq = 0;
        for (int b = 0; b < batches; ++b) {
          std::span<const double> ca(col.data() + b * bs, bs);
          std::span<const double> cb(ref.data() + b * bs, bs);
          const double wb = state_scale * w1_empirical(ca, cb);
          bsum += wb;
          bsumsq += wb * wb;
        }
        const double bm = bsum / batches;
        const double bvar = std::max(0.0, (bsumsq - bsum * bm) / (batches - 1));
        se = std::sqrt(bvar / batches);
      }
      c.points.push_back({n_grid[i], w, se});
    }
    return c;
  }
  usage_check(false, "unknown estimator: " + estimator);
  return {};
}

}  // namespace

Scenario Scenario::load(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw std::invalid_argument("cannot open scenario file " + file.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed scenario JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  try {
    usage_check(j.contains("seed"), "scenario: seed is mandatory");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.name = j.value("name", "scenario");
    s.raw = j;
    if (j.contains("model")) s.model = ChainModel::from_json(j.at("model"));
    if (j.contains("simulation")) {
      const json& sim = j.at("simulation");
      if (sim.contains("reps")) usage_check(sim.at("reps").get<long long>() > 0, "reps must be positive");
      if (sim.contains("horizon"))
        usage_check(sim.at("horizon").get<long long>() > 0, "horizon must be positive");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed scenario: " + std::string(e.what()));
  }
  return s;
}

RunResult run_verify(const Scenario& s, const fs::path& out_dir) {
  const CertOutcome out = build_certificate(s);
  json cert_json;
  if (out.accepted || !out.cert.cd_inequality.empty()) {
    cert_json = out.cert.to_json();
  } else {
    cert_json = {{"accepted", false}};
  }
  cert_json["accepted"] = out.accepted;
  cert_json["scenario"] = s.name;
  cert_json["seed"] = s.seed;
  if (!out.accepted) cert_json["reject_reason"] = out.reject_reason;
  for (auto& [k, v] : out.extras.items()) cert_json[k] = v;
  write_json(out_dir / "certificate.json", cert_json);
  RunResult r;
  r.exit_code = out.accepted ? kExitOk : kExitCertificateRejected;
  r.summary = cert_json;
  return r;
}

RunResult run_bound(const Scenario& s, const fs::path& out_dir) {
  const CertOutcome out = build_certificate(s);
  if (!out.accepted) {
    write_json(out_dir / "certificate.json",
               {{"accepted", false}, {"reject_reason", out.reject_reason}});
    return {kExitCertificateRejected, {{"reject_reason", out.reject_reason}}};
  }
  usage_check(s.raw.contains("bound") && s.raw.at("bound").contains("n_grid"),
              "scenario: bound.n_grid required");
  const auto n_grid = parse_n_grid(s.raw.at("bound").at("n_grid"));
  json summary{{"name", s.name}, {"seed", s.seed}};
  const Curve c = compute_bound_curve(s, out.cert, n_grid, summary);
  std::ostringstream csv;
  c.write_csv(csv);
  write_file(out_dir / "bound.csv", csv.str());
  write_json(out_dir / "certificate.json", out.cert.to_json());
  return {kExitOk, summary};
}

RunResult run_simulate(const Scenario& s, const fs::path& out_dir) {
  usage_check(s.raw.contains("simulation"), "scenario: missing simulation budget");
  const json& sim = s.raw.at("simulation");
  usage_check(sim.contains("n_grid") ||
                  (s.raw.contains("bound") && s.raw.at("bound").contains("n_grid")),
              "scenario: n_grid required (simulation.n_grid or bound.n_grid)");
  const auto n_grid = parse_n_grid(sim.contains("n_grid") ? sim.at("n_grid")
                                                          : s.raw.at("bound").at("n_grid"));
  json summary{{"name", s.name}, {"seed", s.seed}};
  const Curve c = compute_empirical_curve(s, n_grid, summary);
  std::ostringstream csv;
  c.write_csv(csv);
  write_file(out_dir / "empirical.csv", csv.str());
  return {kExitOk, summary};
}

RunResult run_compare(const Scenario& s, const fs::path& out_dir) {
  const CertOutcome out = build_certificate(s);
  json summary{{"schema_version", 1}, {"name", s.name}, {"seed", s.seed}};
  if (!out.accepted) {
    summary["certificate_accepted"] = false;
    summary["reject_reason"] = out.reject_reason;
    write_json(out_dir / "summary.json", summary);
    return {kExitCertificateRejected, summary};
  }
  usage_check(s.raw.contains("bound") && s.raw.at("bound").contains("n_grid"),
              "scenario: bound.n_grid required");
  const auto n_grid = parse_n_grid(s.raw.at("bound").at("n_grid"));
  usage_check(!n_grid.empty(), "scenario: empty n_grid");

  const Curve bound = compute_bound_curve(s, out.cert, n_grid, summary);
  const Curve empirical = compute_empirical_curve(s, n_grid, summary);

  std::ostringstream csv;
  csv << "n,bound,empirical,stderr\n";
  double max_excess_sigma = -kInf;
  bool falsified = false;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    csv << fmt17(n_grid[i]) << ',' << fmt17(bound.points[i].value) << ','
        << fmt17(empirical.points[i].value) << ',' << fmt17(empirical.points[i].se) << '\n';
    const double excess = empirical.points[i].value - bound.points[i].value;
    const double sigma = empirical.points[i].se;
    const double excess_sigma = excess <= 0 ? excess / std::max(sigma, 1e-300)
                                            : (sigma > 0 ? excess / sigma : kInf);
    max_excess_sigma = std::max(max_excess_sigma, excess_sigma);
    if (excess > 3.0 * sigma) falsified = true;
  }
  write_file(out_dir / "compare.csv", csv.str());

  SvgSeries bs{"bound", "#c0392b", {}};
  SvgSeries es{"empirical", "#2980b9", {}};
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    bs.points.emplace_back(n_grid[i], bound.points[i].value);
    es.points.emplace_back(n_grid[i], empirical.points[i].value);
  }
  write_file(out_dir / "compare.svg",
             render_svg_chart(s.name + ": bound vs empirical", "n", "W1", {bs, es}, true));

  summary["certificate_accepted"] = true;
  summary["max_excess_sigma"] = std::isfinite(max_excess_sigma) ? max_excess_sigma : 1e308;
  summary["falsified"] = falsified;
  write_json(out_dir / "summary.json", summary);
  return {falsified ? kExitBoundFalsified : kExitOk, summary};
}

RunResult run_clt(const Scenario& s, const fs::path& out_dir) {
  usage_check(s.raw.contains("clt"), "scenario: missing clt configuration");
  const json& cfg = s.raw.at("clt");
  const long long warmup = cfg.value("warmup", 100000);
  const long long batches = cfg.value("batches", 100);
  const long long batch_size = cfg.value("batch_size", 10000);
  usage_check(batches >= 2 && batch_size >= 1 && warmup >= 0, "clt: invalid batch configuration");
  const std::string g_name = cfg.value("g", "identity");
  const double L = cfg.value("L", 1.0);

  const CertOutcome out = build_certificate(s);
  if (!out.accepted) {
    write_json(out_dir / "clt_summary.json",
               {{"certificate_accepted", false}, {"reject_reason", out.reject_reason}});
    return {kExitCertificateRejected, {}};
  }
  const Certificate& cert = out.cert;

  auto g = [&](double x) -> double { return g_name == "constant" ? 1.0 : x; };

  usage_check(s.model.dim() == 1, "clt: scalar models only");
  Rng rng(mix_seed(s.seed, 0xc17));
  double x = 0.0;
  if (s.raw.contains("simulation") && s.raw.at("simulation").contains("x0"))
    x = s.raw.at("simulation").at("x0").at(0).get<double>();
  for (long long t = 0; t < warmup; ++t) {
    double st[1] = {x};
    s.model.step(st, rng);
    x = st[0];
  }
  const long long n_steps = batches * batch_size;
  std::vector<double> gs(static_cast<std::size_t>(n_steps));
  std::vector<double> dvs(static_cast<std::size_t>(n_steps));
  const bool dv_ok = cert.V.scalar();
  for (long long t = 0; t < n_steps; ++t) {
    double st[1] = {x};
    s.model.step(st, rng);
    gs[static_cast<std::size_t>(t)] = g(x);
    dvs[static_cast<std::size_t>(t)] = dv_ok ? dv_interval(cert.V, x, st[0]) : 0.0;
    x = st[0];
  }
  const double gbar = std::accumulate(gs.begin(), gs.end(), 0.0) / static_cast<double>(n_steps);

  // batch means of g -> sigma^2; batch means of |gbar-centered g| * d_V -> e_term
  double sm = 0, sm2 = 0, em = 0, em2 = 0;
  for (long long b = 0; b < batches; ++b) {
    double bsum = 0, esum = 0;
    for (long long t = b * batch_size; t < (b + 1) * batch_size; ++t) {
      bsum += gs[static_cast<std::size_t>(t)];
      esum += std::fabs(gs[static_cast<std::size_t>(t)] - gbar) * dvs[static_cast<std::size_t>(t)];
    }
    const double bmean = bsum / static_cast<double>(batch_size);
    const double emean = esum / static_cast<double>(batch_size);
    sm += bmean;
    sm2 += bmean * bmean;
    em += emean;
    em2 += emean * emean;
  }
  const double bmean_avg = sm / static_cast<double>(batches);
  const double bvar = std::max(0.0, (sm2 - sm * bmean_avg) / static_cast<double>(batches - 1));
  const double sigma2_hat = static_cast<double>(batch_size) * bvar;
  const double e_term = em / static_cast<double>(batches);
  const double evar = std::max(0.0, (em2 - em * e_term) / static_cast<double>(batches - 1));
  const double e_term_se = std::sqrt(evar / static_cast<double>(batches));

  double bound = 0;
  std::string bound_kind;
  if (cert.kind == Certificate::Kind::geometric) {
    bound = clt_sigma2_bound(CltBoundKind::geometric, cert.r, L, e_term);
    bound_kind = "geometric";
  } else {
    bound = clt_sigma2_bound(CltBoundKind::polynomial_b3, 0.0, L, e_term);
    bound_kind = "polynomial_b3";
  }
  const bool pass = sigma2_hat <= bound + 3.0 * e_term_se;

  json summary{{"schema_version", 1},
               {"name", s.name},
               {"seed", s.seed},
               {"g", g_name},
               {"warmup", warmup},
               {"batches", batches},
               {"batch_size", batch_size},
               {"sigma2_hat", sigma2_hat},
               {"e_term", e_term},
               {"e_term_stderr", e_term_se},
               {"L", L},
               {"bound_kind", bound_kind},
               {"sigma2_bound", bound},
               {"pass", pass}};
  if (batches < 30) summary["warning"] = "fewer than 30 batches; variance estimate unreliable";
  write_json(out_dir / "clt_summary.json", summary);
  return {kExitOk, summary};
}

}  // namespace wassbound
