#pragma once

// Internal quadrature helpers; thin wrapper over boost.math Gauss-Kronrod.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>

namespace wassbound::detail {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b]; infinite endpoints allowed.
inline QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                            double abs_tol = 1e-10) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  QuadResult r;
  if (a >= b) {
    r.converged = true;
    return r;
  }
  double err = 0.0;
  r.value = GK::integrate(f, a, b, 15, 1e-12, &err);
  r.error = err;
  r.converged = std::isfinite(r.value) &&
                (err <= abs_tol || err <= 1e-10 * (1.0 + std::fabs(r.value)));
  return r;
}

}  // namespace wassbound::detail
