#include "wassbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wassbound/parallel.hpp"

namespace wassbound {

double polynomial_bound(double n, double b, double e_dv) {
  if (n < 0) throw std::invalid_argument("polynomial_bound: n must be >= 0");
  if (b < 1) throw std::invalid_argument("polynomial_bound: b must be >= 1");
  const int m = static_cast<int>(std::ceil(b));
  if (m <= 1) return e_dv;  // b = 1: empty product, limiting exponent
  double log_prod = 0.0;
  for (int k = 1; k <= m - 1; ++k)
    log_prod += std::log(b / (n + k)) + std::log((m - k) / (b - k));
  const double expo = (b - 1.0) / (m - 1.0);
  return std::exp(expo * log_prod) * e_dv;
}

double polynomial_bound_scaled(double n, int m, double delta, double e_dv) {
  if (!(delta > 0)) throw std::invalid_argument("polynomial_bound_scaled: delta must be positive");
  return polynomial_bound(n, m, e_dv) / std::pow(delta, m);
}

double geometric_bound(double n, double r, double e_dv) {
  if (!(r > 0 && r < 1)) throw std::invalid_argument("geometric_bound: r must lie in (0,1)");
  return std::exp(n * std::log1p(-r)) / r * e_dv;
}

double semi_exponential_bound(double n, double delta, double lambda, double e_dv) {
  if (!(delta > 0 && lambda > 0))
    throw std::invalid_argument("semi_exponential_bound: delta and lambda must be positive");
  if (n < 1)
    throw std::invalid_argument(
        "semi_exponential_bound: n must be >= 1 (the right side degenerates at n = 0)");
  const double c =
      (1.0 + lambda) * std::pow(delta / (std::exp(1.0) * std::pow(lambda, lambda)),
                                1.0 / (1.0 + lambda));
  return std::exp(1.0 + lambda + std::log(n) - c * std::pow(n, 1.0 / (1.0 + lambda))) * e_dv;
}

double rbm_bound(double t, double s, double r, double sigma, double e_exp_xs) {
  if (!(t > s && s > 0)) throw std::invalid_argument("rbm_bound: need t > s > 0");
  if (e_exp_xs < 1.0) throw std::invalid_argument("rbm_bound: E e^{bX_s} must be >= 1");
  const double b = r / (sigma * sigma);
  const double lambda = std::exp(-r * r / (2.0 * sigma * sigma));
  return std::pow(lambda, t - s) / b * (e_exp_xs - 1.0) / (1.0 - std::pow(lambda, s));
}

double ht_uniform_bound(double n, int m, double b_resid, const DistributionSpec& Y) {
  if (n < 1) throw std::invalid_argument("ht_uniform_bound: n must be >= 1");
  if (m < 1) throw std::invalid_argument("ht_uniform_bound: m must be >= 1");
  auto binom = [](int nn, int kk) {
    double r = 1.0;
    for (int i = 1; i <= kk; ++i) r = r * (nn - kk + i) / i;
    return r;
  };
  double e2m = 0.0;
  for (int k = 0; k <= m; ++k)
    e2m += binom(m, k) * std::pow(2.0, m - k) *
           (k == 0 ? 1.0 : moment(Y, k, MomentFlavor::absolute));
  double e1p = 0.0;
  for (int k = 0; k <= m + 1; ++k)
    e1p += binom(m + 1, k) * (k == 0 ? 1.0 : moment(Y, k, MomentFlavor::positive_part));
  const double eyp = moment(Y, 1, MomentFlavor::positive_part);
  const double onep_b = std::pow(1.0 + b_resid, m);
  return 4.0 / m * std::pow(16.0 * e2m * onep_b / n, m - 1) *
         (e1p / (m + 1) + onep_b * eyp);
}

double tandem_bound(double n, double a_star, double lambda_star, const DistributionSpec& Z) {
  if (!(lambda_star > 0 && lambda_star < 1))
    throw std::invalid_argument("tandem_bound: lambda_star must lie in (0,1)");
  double premul;
  if (a_star < 1e-12) {
    premul = Z.mean();  // limit of (E e^{aZ}-1)/a as a -> 0
  } else {
    const double mz = Z.mgf(a_star);
    if (!std::isfinite(mz)) throw std::invalid_argument("tandem_bound: mgf infinite at a_star");
    premul = (mz - 1.0) / a_star;
  }
  return std::pow(lambda_star, n) / (1.0 - lambda_star) * premul;
}

Estimate tandem_premultiplier_mc(const ChainModel& model, std::span<const double> x0,
                                 double a_star, std::size_t reps, std::uint64_t seed) {
  const std::vector<double> start(x0.begin(), x0.end());
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sumsqs(n_chunks, 0.0);
  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> x(start.size());
    double s = 0, s2 = 0;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      std::copy(start.begin(), start.end(), x.begin());
      model.step(x, rng);
      double l1 = 0, u = 0;
      const double v = a_star * std::accumulate(start.begin(), start.end(), 0.0);
      for (std::size_t k = 0; k < x.size(); ++k) l1 += std::fabs(x[k] - start[k]);
      u = a_star * std::accumulate(x.begin(), x.end(), 0.0);
      const double ratio = u == v ? std::exp(u) : (std::exp(u) - std::exp(v)) / (u - v);
      const double val = l1 * ratio;
      s += val;
      s2 += val * val;
    }
    sums[c] = s;
    sumsqs[c] = s2;
  });
  const double sum = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double sumsq = std::accumulate(sumsqs.begin(), sumsqs.end(), 0.0);
  Estimate e;
  e.value = sum / static_cast<double>(reps);
  if (reps > 1) {
    const double var = std::max(0.0, (sumsq - sum * e.value) / static_cast<double>(reps - 1));
    e.se = std::sqrt(var / static_cast<double>(reps));
  }
  return e;
}

TreeBound tree_bound(double n, const std::vector<TandemFromTree>& specs,
                     const DistributionSpec& Z, const DistributionSpec& T, double zeta) {
  if (specs.empty()) throw std::invalid_argument("tree_bound: no tandem specs");
  TreeBound tb;
  tb.per_path.reserve(specs.size());
  for (const auto& spec : specs) {
    const double r_star = *std::min_element(spec.rates.begin(), spec.rates.end());
    TandemRate rate;
    try {
      rate = tandem_rate(Z, T, r_star, zeta, spec.input_scale);
    } catch (const std::domain_error& e) {
      std::string path = "path";
      for (int v : spec.path) path += " " + std::to_string(v);
      throw std::domain_error(std::string(e.what()) + " (" + path + ")");
    }
    tb.per_path.push_back(rate);
    tb.lambda_bar = std::max(tb.lambda_bar, rate.lambda_star);
    tb.a_bar = std::max(tb.a_bar, rate.a_star);
  }
  tb.value = tandem_bound(n, tb.a_bar, tb.lambda_bar, Z);  // full input Z
  return tb;
}

double clt_sigma2_bound(CltBoundKind kind, double r, double L, double e_term) {
  if (!(L > 0) || e_term < 0)
    throw std::invalid_argument("clt_sigma2_bound: need L > 0 and e_term >= 0");
  switch (kind) {
    case CltBoundKind::polynomial_b3:
      return 13.5 * L * e_term;
    case CltBoundKind::geometric:
      if (!(r > 0 && r < 1))
        throw std::invalid_argument("clt_sigma2_bound: r must lie in (0,1)");
      return (2.0 - r) / (r * r) * L * e_term;
  }
  return 0;
}

Curve bound_curve(const Certificate& cert, double e_dv, const std::vector<double>& n_grid) {
  Curve c;
  c.points.reserve(n_grid.size());
  for (double n : n_grid) {
    double v = 0;
    switch (cert.kind) {
      case Certificate::Kind::geometric:
        v = geometric_bound(n, cert.r, e_dv);
        break;
      case Certificate::Kind::polynomial:
        v = polynomial_bound(n, cert.b, e_dv) / cert.u_const;
        break;
      case Certificate::Kind::semi_exponential:
        v = semi_exponential_bound(n, cert.se_delta, cert.se_lambda, e_dv);
        break;
    }
    c.points.push_back({n, v, 0.0});
  }
  return c;
}

}  // namespace wassbound
