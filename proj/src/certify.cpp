#include "wassbound/certify.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wassbound/parallel.hpp"

namespace wassbound {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double normal_quantile(double p) {
  boost::math::normal_distribution<double> nd;
  return boost::math::quantile(nd, p);
}

void domain_check(bool ok, const std::string& msg) {
  if (!ok) throw std::domain_error(msg);
}

}  // namespace

DriftForm DriftForm::constant(double c) {
  DriftForm f;
  f.kind = Kind::constant;
  f.coefficient = c;
  return f;
}
DriftForm DriftForm::multiple_of_v(double r) {
  DriftForm f;
  f.kind = Kind::multiple_of_v;
  f.coefficient = r;
  return f;
}
DriftForm DriftForm::scaled_power_of_v(double delta, double exponent) {
  DriftForm f;
  f.kind = Kind::scaled_power_of_v;
  f.coefficient = delta;
  f.exponent = exponent;
  return f;
}
DriftForm DriftForm::of_spec(LyapunovSpec u) {
  DriftForm f;
  f.kind = Kind::spec;
  f.u_spec = std::move(u);
  return f;
}

double DriftForm::eval(const LyapunovSpec& V, std::span<const double> x) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return coefficient;
    case Kind::multiple_of_v:
      return coefficient * V.eval(x);
    case Kind::scaled_power_of_v:
      return coefficient * std::pow(V.eval(x), exponent);
    case Kind::spec:
      return u_spec->eval(x);
  }
  return 0.0;
}

std::string DriftForm::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::zero:
      os << "0";
      break;
    case Kind::constant:
      os << coefficient;
      break;
    case Kind::multiple_of_v:
      os << coefficient << "*V";
      break;
    case Kind::scaled_power_of_v:
      os << coefficient << "*V^" << exponent;
      break;
    case Kind::spec:
      os << u_spec->describe();
      break;
  }
  return os.str();
}

nlohmann::json VerificationReport::to_json() const {
  return {{"accepted", accepted},
          {"min_slack", min_slack},
          {"min_lower_bound", min_lower_bound},
          {"worst_x", worst_x},
          {"grid_points", grid_points},
          {"reps", reps},
          {"confidence", confidence},
          {"seed", seed},
          {"detail", detail}};
}

std::string Certificate::kind_name() const {
  switch (kind) {
    case Kind::geometric:
      return "geometric";
    case Kind::polynomial:
      return "polynomial";
    case Kind::semi_exponential:
      return "semi_exponential";
  }
  return {};
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json j{{"kind", kind_name()},
                   {"V", V.to_json()},
                   {"cd_inequality", cd_inequality},
                   {"provenance", provenance},
                   {"report", report.to_json()}};
  switch (kind) {
    case Kind::geometric:
      j["r"] = r;
      break;
    case Kind::polynomial:
      j["b"] = b;
      j["delta"] = delta;
      j["u_const"] = u_const;
      break;
    case Kind::semi_exponential:
      j["delta"] = se_delta;
      j["lambda"] = se_lambda;
      break;
  }
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : params) p[k] = v;
  j["params"] = p;
  return j;
}

Estimate kv_estimate(const ChainModel& model, const LyapunovSpec& V, std::span<const double> x,
                     std::size_t reps, std::uint64_t seed) {
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sumsqs(n_chunks, 0.0);
  const std::vector<double> x0(x.begin(), x.end());
  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> state(x0.size());
    double s = 0, s2 = 0;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      std::copy(x0.begin(), x0.end(), state.begin());
      const double lip = model.step(state, rng);
      const double v = lip * V.eval(state);
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sumsqs[c] = s2;
  });
  const double sum = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double sumsq = std::accumulate(sumsqs.begin(), sumsqs.end(), 0.0);
  Estimate e;
  e.value = sum / static_cast<double>(reps);
  if (reps > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * e.value) / static_cast<double>(reps - 1));
    e.se = std::sqrt(var / static_cast<double>(reps));
  }
  return e;
}

CdGridReport check_cd_grid(const ChainModel& model, const LyapunovSpec& V, const DriftForm& U,
                           const std::vector<std::vector<double>>& grid, std::size_t reps,
                           double confidence, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("check_cd_grid: empty grid");
  const double z = normal_quantile(confidence);
  CdGridReport report;
  report.points.resize(grid.size());
  for_each_chunk(grid.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& x = grid[i];
      const Estimate kv = kv_estimate(model, V, x, reps, mix_seed(seed, i));
      CdGridPoint pt;
      pt.x = x[0];
      pt.kv = kv.value;
      pt.kv_se = kv.se;
      pt.slack = V.eval(x) - U.eval(V, x) - kv.value;
      pt.lower_bound = pt.slack - z * kv.se;
      report.points[i] = pt;
    }
  });
  report.accepted = true;
  report.min_slack = report.points[0].slack;
  report.min_lower_bound = report.points[0].lower_bound;
  report.worst_x = report.points[0].x;
  for (const auto& pt : report.points) {
    if (pt.lower_bound < report.min_lower_bound) {
      report.min_lower_bound = pt.lower_bound;
      report.worst_x = pt.x;
    }
    report.min_slack = std::min(report.min_slack, pt.slack);
    if (pt.lower_bound < 0) report.accepted = false;
  }
  return report;
}

double gg1_drift_value(const DistributionSpec& Z, int m, double M, double x) {
  if (m < 1) throw std::invalid_argument("gg1_drift_value: m must be >= 1");
  if (!(M > 0) || x < 0) throw std::invalid_argument("gg1_drift_value: need M > 0 and x >= 0");
  const double p_reflect = Z.cdf(-x);  // P(x + Z < 0), strict
  double value = p_reflect * std::pow(M, m) / std::pow(x + M, m - 1);
  // E(x - (x+Z)^+) = x - E((Z+x)^+)
  const double e_pos = moment(DistributionSpec::shifted(Z, x), 1, MomentFlavor::positive_part);
  value += m * (x - e_pos);
  for (int k = 2; k <= m; ++k)
    value -= binom(m, k) * moment(Z, k, MomentFlavor::absolute) / std::pow(x + M, k - 1);
  return value;
}

double gg1_drift_limit(const DistributionSpec& Z, int m) { return -m * Z.mean(); }

Certificate gg1_large_m_search(const DistributionSpec& Z, int m, const GridSearchRange& M_range,
                               double x_max, double x_step) {
  domain_check(Z.mean() < 0, "gg1_large_m_search: increments must have negative mean (unstable queue)");
  domain_check(std::isfinite(moment(Z, m + 1, MomentFlavor::positive_part)),
               "gg1_large_m_search: E(Z^+)^{m+1} must be finite");

  auto delta_of = [&](double M) {
    double inf = gg1_drift_limit(Z, m);
    for (double x = 0.0; x <= x_max; x += x_step)
      inf = std::min(inf, gg1_drift_value(Z, m, M, x));
    return inf;
  };
  auto e_dv_of = [&](double M) {
    // E d_{V_M}(0, Z^+) with V_M(x) = (x+M)^m
    double v = 0.0;
    for (int k = 1; k <= m + 1; ++k)
      v += binom(m + 1, k) * std::pow(M, m + 1 - k) * moment(Z, k, MomentFlavor::positive_part);
    return v / (m + 1);
  };

  double best_M = 0, best_delta = 0, best_score = -kInf;
  const std::size_t n = std::max<std::size_t>(2, M_range.points);
  std::vector<double> deltas(n), Ms(n);
  const double log_lo = std::log(M_range.lo), log_hi = std::log(M_range.hi);
  for_each_chunk(n, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Ms[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                    static_cast<double>(n - 1));
      deltas[i] = delta_of(Ms[i]);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (deltas[i] <= 0) continue;
    const double score = std::pow(deltas[i], m) / e_dv_of(Ms[i]);
    if (score > best_score) {
      best_score = score;
      best_M = Ms[i];
      best_delta = deltas[i];
    }
  }
  domain_check(best_score > 0, "gg1_large_m_search: no M in range yields positive drift");

  Certificate cert;
  cert.kind = Certificate::Kind::polynomial;
  cert.b = m;
  cert.delta = best_delta;
  cert.u_const = std::pow(best_delta, m);
  cert.V = LyapunovSpec::poly_shift(m, best_M, 0.0, 0.0);
  cert.params["M"] = best_M;
  cert.params["e_dv"] = e_dv_of(best_M);
  std::ostringstream os;
  os << "KV <= V - " << best_delta << "*V^(1-1/" << m << ")";
  cert.cd_inequality = os.str();
  cert.provenance = "analytic";
  cert.report.accepted = true;
  cert.report.min_slack = best_delta;
  cert.report.grid_points = static_cast<std::size_t>(x_max / x_step) + 1;
  cert.report.detail = "grid infimum of the analytic drift expression, x in [0," +
                       std::to_string(x_max) + "] step " + std::to_string(x_step) +
                       "; x->inf limit checked";
  return cert;
}

HtCertificate ht_certificate(const DistributionSpec& Y, int m, double delta) {
  domain_check(m >= 1, "ht_certificate: m must be >= 1");
  domain_check(delta > 0 && delta < 1, "ht_certificate: delta must lie in (0,1)");
  domain_check(std::fabs(Y.mean()) <= 1e-9, "ht_certificate: E Y must be 0");
  domain_check(std::isfinite(moment(Y, m + 1, MomentFlavor::absolute)),
               "ht_certificate: E|Y|^{m+1} must be finite");
  const ResidualBound rb = residual_lower_bound(Y);  // throws when (minus_b) fails

  // E(2+|Y|)^m, binomial in absolute moments
  double e2m = 0.0;
  for (int k = 0; k <= m; ++k)
    e2m += binom(m, k) * std::pow(2.0, m - k) *
           (k == 0 ? 1.0 : moment(Y, k, MomentFlavor::absolute));
  const double M = 4.0 * e2m * std::pow(1.0 + rb.b, m) / delta;
  const double c = std::pow(M, m - 1) * std::pow(1.0 + rb.b, m);
  domain_check(c < std::pow(M, m) && c > 0, "ht_certificate: requires M^m > c > 0");

  HtCertificate h;
  h.M = M;
  h.c = c;
  h.drift_const = m * delta / 4.0;
  h.b_resid = rb.b;
  h.e_2_abs_m = e2m;
  double e1p = 0.0;
  for (int k = 0; k <= m + 1; ++k)
    e1p += binom(m + 1, k) * (k == 0 ? 1.0 : moment(Y, k, MomentFlavor::positive_part));
  h.e_1_yp_m1 = e1p;
  h.e_yp = moment(Y, 1, MomentFlavor::positive_part);

  Certificate& cert = h.cert;
  cert.kind = Certificate::Kind::polynomial;
  cert.b = m;
  cert.delta = h.drift_const;
  cert.u_const = std::pow(h.drift_const, m);
  cert.V = LyapunovSpec::poly_shift(m, M, std::pow(M, m), c);
  cert.params["M"] = M;
  cert.params["c"] = c;
  cert.params["b_resid"] = rb.b;
  cert.params["delta_drift"] = delta;
  std::ostringstream os;
  os << "KV_M <= V_M - " << h.drift_const << "*V_M^(1-1/" << m << ")  with V_M(x)=|x+M|^" << m
     << "-M^" << m << "+c";
  cert.cd_inequality = os.str();
  cert.provenance = "analytic";
  cert.report.accepted = true;
  cert.report.detail = "closed-form large-M construction; residual bound b=" +
                       std::to_string(rb.b) + " (" + rb.tail_note + ")";
  return h;
}

namespace {

TandemRate golden_min_rate(const std::function<double(double)>& phi, double zeta) {
  domain_check(std::isfinite(phi(zeta)) || std::isfinite(phi(zeta * 0.999999)),
               "tandem_rate: mgf not finite on [0, zeta]");
  // golden section on the convex mgf of the drained increment
  const double gr = 0.6180339887498949;
  double a = 0.0, b = zeta;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = phi(c1), f2 = phi(c2);
  while (b - a > 1e-9) {
    if (f1 <= f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = phi(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = phi(c2);
    }
  }
  TandemRate rate;
  rate.a_star = 0.5 * (a + b);
  rate.lambda_star = phi(rate.a_star);
  domain_check(rate.lambda_star < 1.0, "tandem_rate: phi(a) >= 1 on the whole bracket");
  const double h = 1e-6 * std::max(1.0, rate.a_star);
  if (rate.a_star - h > 0 && rate.a_star + h < zeta)
    rate.stationarity_residual =
        std::fabs((phi(rate.a_star + h) - phi(rate.a_star - h)) / (2 * h));
  return rate;
}

}  // namespace

TandemRate tandem_rate(const DistributionSpec& Z, const DistributionSpec& T, double r_star,
                       double zeta, double input_scale) {
  domain_check(r_star > 0, "tandem_rate: r_star must be positive");
  domain_check(zeta > 0, "tandem_rate: zeta must be positive");
  domain_check(input_scale > 0, "tandem_rate: input scale must be positive");
  const double flow = input_scale * Z.mean() / T.mean();
  domain_check(flow < r_star, "tandem_rate: stability E Z / E T < r_star violated");
  // phi(a) = E exp(a(scale Z - r_star T)) = mgf_Z(a scale) mgf_T(-a r_star)
  return golden_min_rate(
      [&](double a) { return Z.mgf(a * input_scale) * T.mgf(-a * r_star); }, zeta);
}

TandemRate tandem_rate_multi(const std::vector<DistributionSpec>& Z_components,
                             const DistributionSpec& T, double r_star, double zeta) {
  domain_check(!Z_components.empty(), "tandem_rate_multi: no input components");
  domain_check(r_star > 0 && zeta > 0, "tandem_rate_multi: r_star and zeta must be positive");
  double total_mean = 0;
  for (const auto& z : Z_components) total_mean += z.mean();
  domain_check(total_mean / T.mean() < r_star,
               "tandem_rate_multi: stability e^T E Z < r E T violated");
  return golden_min_rate(
      [&](double a) {
        double m = T.mgf(-a * r_star);
        for (const auto& z : Z_components) m *= z.mgf(a);
        return m;
      },
      zeta);
}

Certificate sgd_nsc_certificate(double alpha, double m, const DistributionSpec& Z) {
  domain_check(m >= 3, "sgd_nsc_certificate: m must be >= 3");
  domain_check(alpha > 0 && alpha < 1, "sgd_nsc_certificate: alpha must lie in (0,1)");
  domain_check(std::fabs(Z.mean()) <= 1e-9, "sgd_nsc_certificate: E Z must be 0");
  const double e1z = expect(Z, [](double z) { return 1.0 + std::fabs(z); }).value;
  domain_check(alpha <= 3.0 / (4.0 * e1z),
               "sgd_nsc_certificate: requires alpha <= 3/(4 E(1+|Z|))");

  const double alpha_tilde =
      1.0 - expect(Z, [&](double z) { return std::max(1.0 - alpha * std::fabs(z), 0.0); }).value;
  const double delta = (2.0 / 3.0) * alpha * std::pow(alpha_tilde / 6.0, m - 3.0);
  const double r = delta * alpha_tilde / (2.0 * (1.0 + delta));

  Certificate cert;
  cert.kind = Certificate::Kind::geometric;
  cert.r = r;
  cert.V = LyapunovSpec::wedge(delta);
  cert.params["alpha_tilde"] = alpha_tilde;
  cert.params["delta"] = delta;
  cert.params["alpha"] = alpha;
  cert.params["m"] = m;
  std::ostringstream os;
  os << "KV <= (1-" << r << ")*V  with V(x)=" << delta << "*(1-|x|)^+ + 1";
  cert.cd_inequality = os.str();
  cert.provenance = "analytic";
  cert.report.accepted = true;
  return cert;
}

Certificate sgd_ht_certificate(double alpha, double beta, double gamma,
                               const DistributionSpec& Z) {
  domain_check(alpha > 0 && alpha < 1, "sgd_ht_certificate: alpha must lie in (0,1)");
  domain_check(beta >= 1 && beta < 2, "sgd_ht_certificate: beta must lie in [1,2)");
  domain_check(gamma > 1 && gamma <= 2, "sgd_ht_certificate: gamma must lie in (1,2]");
  domain_check(beta + gamma > 3, "sgd_ht_certificate: requires beta + gamma > 3");
  domain_check(std::fabs(Z.mean()) <= 1e-9, "sgd_ht_certificate: E Z must be 0");
  const double ezg = moment(Z, gamma, MomentFlavor::absolute);
  domain_check(std::isfinite(ezg), "sgd_ht_certificate: E|Z|^gamma must be finite");

  domain_check(std::pow(alpha, gamma - 1) < (gamma - 1) / (8.0 * ezg),
               "sgd_ht_certificate: condition alpha^{gamma-1} < (gamma-1)/(8 E|Z|^gamma) fails");
  const double tail =
      expect(Z, [&](double z) {
        const double v = 1.0 + std::fabs(z);
        return v > 1.0 / alpha ? v : 0.0;
      }).value;
  domain_check(tail < 1.0 / 8.0,
               "sgd_ht_certificate: condition E(1+|Z|) I(1+|Z| > 1/alpha) < 1/8 fails");
  const double e1g =
      expect(Z, [&](double z) { return std::pow(1.0 + std::fabs(z), gamma - 1.0); }).value;
  domain_check(alpha < 2.0 * e1g / (gamma - 1),
               "sgd_ht_certificate: condition alpha < 2 E(1+|Z|)^{gamma-1}/(gamma-1) fails");

  const double b = (gamma - 1.0) / (2.0 - beta);
  const double M = 2.0 * e1g / alpha;
  const double delta =
      std::pow(2.0 / (1.0 + M), 1.0 - 1.0 / b) * alpha * (gamma - 1.0) / std::pow(2.0, 2.0 - 1.0 / b);

  Certificate cert;
  cert.kind = Certificate::Kind::polynomial;
  cert.b = b;
  cert.delta = delta;
  cert.u_const = std::pow(delta, b);
  cert.V = LyapunovSpec::poly_shift(gamma - 1.0, 0.0, 0.0, M);  // |x|^{gamma-1} + M
  cert.params["M"] = M;
  cert.params["alpha"] = alpha;
  cert.params["beta"] = beta;
  cert.params["gamma"] = gamma;
  std::ostringstream os;
  os << "KV <= V - " << delta << "*V^(1-1/" << b << ")  with V(x)=|x|^" << (gamma - 1.0) << "+"
     << M;
  cert.cd_inequality = os.str();
  cert.provenance = "analytic";
  cert.report.accepted = true;
  return cert;
}

}  // namespace wassbound
