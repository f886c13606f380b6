#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wassbound/lyapunov.hpp"
#include "wassbound/metrics.hpp"
#include "wassbound/models.hpp"

namespace wassbound {

/// The U side of a contractive-drift inequality KV <= V - U.
struct DriftForm {
  enum class Kind { zero, constant, multiple_of_v, scaled_power_of_v, spec };
  Kind kind = Kind::zero;
  double coefficient = 0.0;  // constant value, r, or delta
  double exponent = 1.0;     // for delta * V^exponent
  std::optional<LyapunovSpec> u_spec;

  static DriftForm zero() { return {}; }
  static DriftForm constant(double c);
  static DriftForm multiple_of_v(double r);
  static DriftForm scaled_power_of_v(double delta, double exponent);
  static DriftForm of_spec(LyapunovSpec u);

  double eval(const LyapunovSpec& V, std::span<const double> x) const;
  std::string describe() const;
};

struct VerificationReport {
  bool accepted = false;
  double min_slack = 0.0;        // min over the grid of V - U - KV (point estimate)
  double min_lower_bound = 0.0;  // min one-sided lower confidence bound
  double worst_x = 0.0;
  std::size_t grid_points = 0;
  std::size_t reps = 0;
  double confidence = 0.0;
  std::uint64_t seed = 0;
  std::string detail;
  nlohmann::json to_json() const;
};

/// A verified contractive-drift certificate.
struct Certificate {
  enum class Kind { geometric, polynomial, semi_exponential };
  Kind kind = Kind::geometric;

  double r = 0.0;                        // geometric: KV <= (1-r)V
  double b = 0.0, delta = 0.0;           // polynomial: KV <= V - delta V^{1-1/b}
  double u_const = 0.0;                  // polynomial: U = delta^b (constant)
  double se_delta = 0.0, se_lambda = 0;  // semi-exponential: KV <= V - delta V/(log V)^lambda

  LyapunovSpec V = LyapunovSpec::constant(1.0);
  std::map<std::string, double> params;  // M, c, a_star, lambda_star, alpha_tilde, ...
  std::string cd_inequality;             // the exact inequality asserted
  std::string provenance;                // "analytic" | "grid_numeric"
  VerificationReport report;

  std::string kind_name() const;
  nlohmann::json to_json() const;
};

/// KV(x) = E Df(x) V(f(x)) by Monte Carlo.
Estimate kv_estimate(const ChainModel& model, const LyapunovSpec& V, std::span<const double> x,
                     std::size_t reps, std::uint64_t seed);

struct CdGridPoint {
  double x;  // first coordinate for vector states
  double kv, kv_se;
  double slack;        // V - U - KV
  double lower_bound;  // slack - z * se
};

struct CdGridReport {
  bool accepted = false;
  double min_slack = 0.0;
  double min_lower_bound = 0.0;
  double worst_x = 0.0;
  std::vector<CdGridPoint> points;
};

/// Checks KV(x) <= V(x) - U(x) on a grid with one-sided normal confidence
/// bounds; accepts iff every lower confidence bound of the slack is >= 0.
CdGridReport check_cd_grid(const ChainModel& model, const LyapunovSpec& V, const DriftForm& U,
                           const std::vector<std::vector<double>>& grid, std::size_t reps,
                           double confidence, std::uint64_t seed);

/// The analytic normalized drift of the Lindley recursion with increment Z
/// and V_M(x) = (x+M)^m:
///   P(x+Z<0) M^m/(x+M)^{m-1} + m E(x - (x+Z)^+)
///     - sum_{k=2}^m C(m,k) E|Z|^k/(x+M)^{k-1}.
/// Lower-bounds the normalized CD slack (V - KV)/V^{1-1/m}.
double gg1_drift_value(const DistributionSpec& Z, int m, double M, double x);

/// The x -> infinity limit of gg1_drift_value: m * (-E Z).
double gg1_drift_limit(const DistributionSpec& Z, int m);

struct GridSearchRange {
  double lo = 0.1, hi = 20.0;
  std::size_t points = 64;  // log-spaced
};

/// Large-M search: picks M maximizing delta(M)^m / E d_{V_M}(X0, X1), i.e.
/// directly minimizing the n = 0 bound value, with delta(M) the grid infimum
/// of the analytic drift (also capped by the x -> infinity limit).
Certificate gg1_large_m_search(const DistributionSpec& Z, int m,
                               const GridSearchRange& M_range = {}, double x_max = 100.0,
                               double x_step = 0.01);

struct HtCertificate {
  Certificate cert;       // polynomial(b = m, delta = m*delta_drift/4)
  double M = 0, c = 0;    // V_M(x) = |x+M|^m - M^m + c
  double drift_const = 0; // m * delta / 4
  double b_resid = 0;     // from residual_lower_bound
  // moment pack for the uniform heavy-traffic bound
  double e_2_abs_m = 0;   // E(2+|Y|)^m
  double e_1_yp_m1 = 0;   // E(1+Y^+)^{m+1}
  double e_yp = 0;        // E Y^+
};

/// Heavy-traffic certificate of Prop 5.3 type:
///   M = 4 E(2+|Y|)^m (1+b)^m / delta, c = M^{m-1}(1+b)^m.
HtCertificate ht_certificate(const DistributionSpec& Y, int m, double delta);

struct TandemRate {
  double a_star = 0.0;
  double lambda_star = 0.0;
  double stationarity_residual = 0.0;  // |phi'(a_star)| by finite differences
};

/// Minimizes phi(a) = E exp(a (scale*Z - r_star*T)) over [0, zeta] by golden
/// section (tolerance 1e-9 in a); requires stability scale*E Z / E T < r_star
/// and lambda_star < 1.
TandemRate tandem_rate(const DistributionSpec& Z, const DistributionSpec& T, double r_star,
                       double zeta, double input_scale = 1.0);

/// Priority-queue variant: the scalar input is e^T Z with independent
/// components, so phi(a) = prod_i mgf_{Z_i}(a) * mgf_T(-a r_star).
TandemRate tandem_rate_multi(const std::vector<DistributionSpec>& Z_components,
                             const DistributionSpec& T, double r_star, double zeta);

/// Non-strongly-convex SGD certificate (wedge Lyapunov function):
///   alpha_tilde = 1 - E(1-alpha|Z|)^+, delta = (2/3) alpha (alpha_tilde/6)^{m-3},
///   r = delta alpha_tilde / (2 (1+delta)).
Certificate sgd_nsc_certificate(double alpha, double m, const DistributionSpec& Z);

/// Heavy-tailed-gradient SGD certificate:
///   b = (gamma-1)/(2-beta), M = 2 E(1+|Z|)^{gamma-1} / alpha,
///   delta = (2/(1+M))^{1-1/b} alpha (gamma-1) / 2^{2-1/b}.
Certificate sgd_ht_certificate(double alpha, double beta, double gamma,
                               const DistributionSpec& Z);

}  // namespace wassbound
