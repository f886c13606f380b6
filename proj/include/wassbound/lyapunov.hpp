#pragma once

#include <span>
#include <string>

#include "json.hpp"

namespace wassbound {

/// Lyapunov function family with a closed-form antiderivative for the scalar
/// members (needed for d_V on intervals of the line).
///
///   poly_shift: V(x) = |x+M|^m - offset + c,  exponent m > 0, M >= 0
///   wedge:      V(x) = delta*(1-|x|)^+ + 1
///   exp_sum:    V(x) = exp(a * sum_i x_i)     (vector states; no scalar d_V)
///   constant:   V(x) = v, v > 0
class LyapunovSpec {
 public:
  enum class Family { poly_shift, wedge, exp_sum, constant };

  static LyapunovSpec poly_shift(double m, double M, double offset, double c);
  static LyapunovSpec wedge(double delta);
  static LyapunovSpec exp_sum(double a);
  static LyapunovSpec constant(double value);

  Family family() const { return family_; }
  bool scalar() const { return family_ != Family::exp_sum; }

  double operator()(double x) const;
  double eval(std::span<const double> x) const;  // any family, any dimension

  /// Antiderivative A with A' = V; scalar families only.
  double antiderivative(double x) const;

  /// Minimum of V over an evaluation grid; certifies "bounded away from 0".
  double min_on_grid(double lo, double hi, double step) const;

  double param(const std::string& name) const;  // m, M, offset, c, delta, a, value
  std::string describe() const;
  nlohmann::json to_json() const;
  static LyapunovSpec from_json(const nlohmann::json& j);

 private:
  LyapunovSpec(Family f, double a, double b, double c, double d)
      : family_(f), p0_(a), p1_(b), p2_(c), p3_(d) {}
  Family family_;
  double p0_, p1_, p2_, p3_;
};

}  // namespace wassbound
