#pragma once

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "wassbound/rng.hpp"

namespace wassbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class MomentFlavor { raw, absolute, positive_part };

/// Parametric law of an increment / noise variable. A nonzero offset means
/// the variable is base + offset; shifting composes exactly one level deep,
/// so shifting an already shifted spec folds into a single offset.
class DistributionSpec {
 public:
  struct Pareto {
    double shape, scale;
  };
  struct Normal {
    double mean, stdev;
  };
  struct Exponential {
    double rate;
  };
  struct TwoPoint {
    double a, b, p;  // value a with probability p, b with probability 1-p
  };
  struct Laplace {
    double scale;
  };
  struct Deterministic {
    double value;
  };
  using Params = std::variant<Pareto, Normal, Exponential, TwoPoint, Laplace, Deterministic>;

  static DistributionSpec pareto(double shape, double scale);
  static DistributionSpec normal(double mean, double stdev);
  static DistributionSpec exponential(double rate);
  static DistributionSpec two_point(double a, double b, double p);
  static DistributionSpec laplace(double scale);
  static DistributionSpec deterministic(double value);
  static DistributionSpec shifted(const DistributionSpec& base, double offset);

  const Params& params() const { return params_; }
  double offset() const { return offset_; }
  bool is_atomic() const;  // finitely supported (two_point / deterministic)

  /// One variate; identical (seed, call-index) gives identical output.
  double sample(Rng& rng) const;

  double mean() const;
  double variance() const;

  /// Strict CDF P(Z < z); matches the paper's indicator I(x + Z < 0).
  double cdf(double z) const;

  /// E e^{aZ}; +inf outside the convergence strip.
  double mgf(double a) const;

  /// sup{a >= 0 : mgf(a) < inf}. 0 for Pareto, +inf for bounded/Gaussian.
  double mgf_strip_upper() const;

  double support_lower() const;  // -inf when unbounded below
  double support_upper() const;

  std::string describe() const;
  nlohmann::json to_json() const;
  static DistributionSpec from_json(const nlohmann::json& j);

 private:
  DistributionSpec(Params p, double off) : params_(std::move(p)), offset_(off) {}
  Params params_;
  double offset_ = 0.0;
};

/// E Z^k, E|Z|^k or E(Z^+)^k for order k > 0; returns +inf when the moment
/// diverges. Closed forms for Pareto, exponential, two-point and
/// deterministic laws (including shifts with integer order); adaptive
/// quadrature otherwise.
double moment(const DistributionSpec& spec, double order, MomentFlavor flavor);

struct ExpectationResult {
  double value = 0.0;
  bool monte_carlo_fallback = false;  // quadrature failed; flagged per contract
};

/// E g(Z). Exact for atomic laws; Gauss-Kronrod quadrature (abs tol 1e-10)
/// for continuous ones, with a flagged Monte Carlo fallback.
ExpectationResult expect(const DistributionSpec& spec, const std::function<double(double)>& g);

struct ResidualBound {
  double b = 0.0;        // conditional mean E[Y+y | Y+y <= 0] >= -b on the grid
  double minimizer = 0;  // grid argmin
  double grid_lo = 0, grid_hi = 0, grid_step = 0;
  std::string tail_note;  // analytic tail statement / documented cutoff
};

/// Verifies inf_{y in [-1, y_max]} E[Y+y | Y+y <= 0] > -inf on a grid and
/// returns b (>= 0). Requires E Y = 0 and support unbounded below; throws
/// std::domain_error otherwise or when the conditional mean is still
/// decreasing at the grid cutoff.
ResidualBound residual_lower_bound(const DistributionSpec& spec,
                                   const std::vector<double>& y_grid = {});

}  // namespace wassbound
