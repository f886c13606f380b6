#pragma once

#include <vector>

#include "wassbound/certify.hpp"
#include "wassbound/distributions.hpp"
#include "wassbound/metrics.hpp"
#include "wassbound/models.hpp"

namespace wassbound {

/// Polynomial-rate bound
///   [prod_{k=1}^{ceil(b)-1} (b/(n+k)) ((ceil(b)-k)/(b-k))]^{(b-1)/(ceil(b)-1)} * e_dv.
/// For integer b the correction factors are 1; for b = 1 the empty product
/// resolves to e_dv. Evaluated in log space (n up to 1e9).
double polynomial_bound(double n, double b, double e_dv);

/// (1/delta^m) * prod_{k=1}^{m-1} (m/(n+k)) * e_dv.
double polynomial_bound_scaled(double n, int m, double delta, double e_dv);

/// ((1-r)^n / r) * e_dv.
double geometric_bound(double n, double r, double e_dv);

/// e^{1+lambda} n exp(-c n^{1/(1+lambda)}) * e_dv with
/// c = (1+lambda)(delta/(e lambda^lambda))^{1/(1+lambda)}. Requires n >= 1.
double semi_exponential_bound(double n, double delta, double lambda, double e_dv);

/// (lambda^{t-s}/b) (e_exp_xs - 1)/(1 - lambda^s) with b = r/sigma^2 and
/// lambda = exp(-r^2/(2 sigma^2)).
double rbm_bound(double t, double s, double r, double sigma, double e_exp_xs);

/// Uniform-in-heavy-traffic bound
///   (4/m) [16 E(2+|Y|)^m (1+b)^m / n]^{m-1}
///     * E[(1+Y^+)^{m+1}/(m+1) + (1+b)^m Y^+].
double ht_uniform_bound(double n, int m, double b_resid, const DistributionSpec& Y);

/// (lambda_star^n/(1-lambda_star)) (E e^{a_star Z} - 1)/a_star (empty start).
double tandem_bound(double n, double a_star, double lambda_star, const DistributionSpec& Z);

/// General-start pre-multiplier
///   E[ ||X1-X0||_1 (e^{a e^T X1} - e^{a e^T X0})/(a e^T X1 - a e^T X0) ],
/// with the convention (e^u - e^v)/(u - v) = e^u when u = v.
Estimate tandem_premultiplier_mc(const ChainModel& model, std::span<const double> x0,
                                 double a_star, std::size_t reps, std::uint64_t seed);

struct TreeBound {
  double value = 0.0;
  double lambda_bar = 0.0;
  double a_bar = 0.0;
  std::vector<TandemRate> per_path;
};

/// Tree-network bound: per-path tandem rates from the decomposition,
/// lambda_bar = max lambda_star(b), a_bar = max a_star(b), formula applied
/// with the full input Z.
TreeBound tree_bound(double n, const std::vector<TandemFromTree>& specs,
                     const DistributionSpec& Z, const DistributionSpec& T, double zeta);

enum class CltBoundKind { polynomial_b3, geometric };

/// (27/2) L e_term for the b = 3 polynomial case;
/// ((2-r)/r^2) L e_term for the geometric case.
double clt_sigma2_bound(CltBoundKind kind, double r, double L, double e_term);

/// Bound curve from a certificate: geometric / polynomial / semi-exponential
/// formula per point. For polynomial kinds the W_I curve is
/// polynomial_bound(n, b, e_dv)/u_const (U = delta^b constant).
Curve bound_curve(const Certificate& cert, double e_dv, const std::vector<double>& n_grid);

}  // namespace wassbound
