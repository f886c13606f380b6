#include <cmath>

#include "doctest.h"
#include "quad_oracle.hpp"
#include "wassbound/bounds.hpp"

using namespace wassbound;

TEST_CASE("polynomial bound: integer case, b = 1 limit, and non-integer b") {
  CHECK(polynomial_bound(0, 2, 91.0 / 216) == doctest::Approx(91.0 / 108).epsilon(1e-13));
  CHECK(polynomial_bound(1, 2, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(polynomial_bound(5, 1, 0.7) == 0.7);

  // b = 2.5, n = 3: direct long-double product as re-evaluation oracle
  long double prod = 1.0L;
  const long double b = 2.5L;
  for (int k = 1; k <= 2; ++k) prod *= (b / (3.0L + k)) * ((3.0L - k) / (b - k));
  const long double expected = powl(prod, (b - 1.0L) / 2.0L);
  CHECK(polynomial_bound(3, 2.5, 1.0) ==
        doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
}

TEST_CASE("polynomial bound: continuity at integer b from below") {
  for (int m : {2, 3, 5}) {
    for (double n : {0.0, 4.0, 1000.0}) {
      const double at_int = polynomial_bound(n, m, 1.0);
      const double below = polynomial_bound(n, m - 1e-12, 1.0);
      CHECK(below == doctest::Approx(at_int).epsilon(1e-8));
    }
  }
}

TEST_CASE("polynomial bound scaled: Prop 5.2 curve and monotonicity") {
  const double e_dv = 91.0 / 216;
  for (double n : {0.0, 1.0, 7.0, 100.0, 9999.0}) {
    CHECK(polynomial_bound_scaled(n, 2, 1.0, e_dv) ==
          doctest::Approx((91.0 / 108) / (n + 1)).epsilon(1e-12));
  }
  CHECK(polynomial_bound_scaled(3, 1, 2.0, 1.0) == doctest::Approx(0.5));
  double prev = kInf;
  for (int n = 0; n <= 10000; n += 7) {
    const double v = polynomial_bound_scaled(n, 2, 1.0, e_dv);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("polynomial bound tail: n^{b-1} * bound stays bounded up to n = 1e6") {
  double max_scaled = 0;
  for (double n = 1; n <= 1e6; n *= 3.7) {
    const double v = polynomial_bound(n, 2.5, 1.0) * std::pow(n, 1.5);
    max_scaled = std::max(max_scaled, v);
  }
  CHECK(max_scaled < 50.0);
  // and no overflow in log-space evaluation at huge n
  CHECK(std::isfinite(polynomial_bound(1e9, 4, 1.0)));
  CHECK(polynomial_bound(1e9, 4, 1.0) > 0.0);
}

TEST_CASE("geometric bound values and exact ratio") {
  CHECK(geometric_bound(0, 0.5, 1.0) == doctest::Approx(2.0));
  CHECK(geometric_bound(10, 0.5, 1.0) == doctest::Approx(std::pow(2.0, -9)).epsilon(1e-12));
  const double ratio = geometric_bound(8, 0.3, 2.5) / geometric_bound(7, 0.3, 2.5);
  CHECK(ratio == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("semi-exponential bound: c formula, hand value, and eventual domination") {
  const double e = std::exp(1.0);
  // lambda = 1, delta = e: c = 2, bound = e^2 n e^{-2 sqrt n}
  CHECK(semi_exponential_bound(4, e, 1.0, 1.0) == doctest::Approx(4.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK(semi_exponential_bound(1, e, 1.0, 2.0) ==
        doctest::Approx(2.0 * e * e * std::exp(-2.0)).epsilon(1e-12));
  CHECK_THROWS(semi_exponential_bound(0, e, 1.0, 1.0));
  // value * n^5 -> 0
  CHECK(semi_exponential_bound(1e6, e, 1.0, 1.0) * 1e30 < 1e-300 + 1.0);
  const double v6 = semi_exponential_bound(1e6, e, 1.0, 1.0) * std::pow(1e6, 5);
  CHECK(v6 < 1e-100);
}

TEST_CASE("rbm bound parameter formulas") {
  // r = sigma = 1: b = 1, lambda = e^{-1/2}
  const double lambda = std::exp(-0.5);
  CHECK(rbm_bound(3, 1, 1, 1, 2.0) ==
        doctest::Approx(std::pow(lambda, 2.0) * 1.0 / (1 - lambda)).epsilon(1e-12));
  CHECK(rbm_bound(2, 1, 1, 1, 1.0) == 0.0);  // degenerate X_s = 0
}

TEST_CASE("heavy-traffic uniform bound: structure and laplace closed forms") {
  const auto Y = DistributionSpec::laplace(1.0);
  const double b = 1.4507993471;
  SUBCASE("m = 1 is constant in n") {
    CHECK(ht_uniform_bound(10, 1, b, Y) == doctest::Approx(ht_uniform_bound(1000, 1, b, Y)));
    // 4 E[(1+Y+)^2/2 + (1+b) Y+]: laplace moments E Y+ = 1/2, E (Y+)^2 = 1
    const double expected = 4.0 * ((1 + 2 * 0.5 + 1.0) / 2.0 + (1 + b) * 0.5);
    CHECK(ht_uniform_bound(7, 1, b, Y) == doctest::Approx(expected).epsilon(1e-7));
  }
  SUBCASE("m = 2 closed-form value and exact 1/n scaling") {
    // E(2+|Y|)^2 = 10, E(1+Y+)^3 = 8.5 (quadrature oracle cross-check)
    const double e1p3 = test_oracle::integrate(
        [](double y) { return std::pow(1.0 + std::max(y, 0.0), 3) * 0.5 * std::exp(-std::fabs(y)); },
        -60.0, 60.0);
    CHECK(e1p3 == doctest::Approx(8.5).epsilon(1e-9));
    const double n = 100;
    const double expected = 2.0 * (16.0 * 10.0 * std::pow(1 + b, 2) / n) *
                            (8.5 / 3.0 + std::pow(1 + b, 2) * 0.5);
    CHECK(ht_uniform_bound(n, 2, b, Y) == doctest::Approx(expected).epsilon(1e-7));
    CHECK(ht_uniform_bound(100, 2, b, Y) / ht_uniform_bound(200, 2, b, Y) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("tandem bound: hand assembly and exact ratio") {
  const auto Z = DistributionSpec::exponential(1.0);
  const double lambda = 2.0 / std::exp(1.0);
  // bound(0) = (1/(1-2/e)) * (mgf(1/2)-1)/(1/2) = 2/(1-2/e)
  CHECK(tandem_bound(0, 0.5, lambda, Z) == doctest::Approx(2.0 / (1.0 - lambda)).epsilon(1e-12));
  CHECK(tandem_bound(5, 0.5, lambda, Z) / tandem_bound(4, 0.5, lambda, Z) ==
        doctest::Approx(lambda).epsilon(1e-12));
  // Z == 0 (point mass at 0): pre-multiplier collapses to 0
  CHECK(tandem_bound(3, 0.5, lambda, DistributionSpec::deterministic(0.0)) ==
        doctest::Approx(0.0));
}

TEST_CASE("tandem general-start pre-multiplier Monte Carlo") {
  const auto model = ChainModel::tandem({1.5, 1.2}, DistributionSpec::deterministic(2.0),
                                        DistributionSpec::exponential(1.0));
  // from the empty state the pre-multiplier has the closed form (E e^{aZ}-1)/a
  const double a = 0.5833333333;
  const auto est = tandem_premultiplier_mc(model, std::vector<double>{0.0, 0.0}, a, 200000, 15);
  const double closed = (DistributionSpec::exponential(1.0).mgf(a) - 1.0) / a;
  CHECK(std::fabs(est.value - closed) <= 3.5 * est.se);
}

TEST_CASE("tree bound: degenerate, symmetric, and asymmetric trees") {
  const auto Z = DistributionSpec::exponential(1.0);
  const auto T = DistributionSpec::deterministic(2.0);
  SUBCASE("K = 1 tree equals the tandem bound of the single path") {
    TreeSpec tree;
    tree.K = 1;
    tree.L = 1;
    tree.rates = {1.5, 1.0};
    tree.routing = {{1.0}};
    const auto specs = tree_decompose(tree, Z, T);
    const auto tb = tree_bound(2.0, specs, Z, T, 0.99);
    const auto direct = tandem_rate(Z, T, 1.0, 0.99);
    CHECK(tb.lambda_bar == doctest::Approx(direct.lambda_star).epsilon(1e-9));
    CHECK(tb.value ==
          doctest::Approx(tandem_bound(2.0, direct.a_star, direct.lambda_star, Z)).epsilon(1e-6));
  }
  SUBCASE("symmetric K = 2 tree: lambda_bar equals the common per-path rate") {
    TreeSpec tree;
    tree.K = 2;
    tree.L = 1;
    tree.rates = {1.5, 0.6, 0.6};
    tree.routing = {{0.5, 0.5}};
    const auto specs = tree_decompose(tree, Z, T);
    const auto tb = tree_bound(0.0, specs, Z, T, 0.99);
    CHECK(tb.per_path.size() == 2);
    CHECK(tb.per_path[0].lambda_star == doctest::Approx(tb.per_path[1].lambda_star).epsilon(1e-9));
    CHECK(tb.lambda_bar == doctest::Approx(tb.per_path[0].lambda_star).epsilon(1e-12));
  }
  SUBCASE("asymmetric tree: lambda_bar dominates every per-path rate") {
    TreeSpec tree;
    tree.K = 2;
    tree.L = 1;
    tree.rates = {1.5, 0.9, 0.45};
    tree.routing = {{0.6, 0.4}};
    const auto specs = tree_decompose(tree, Z, T);
    const auto tb = tree_bound(0.0, specs, Z, T, 0.99);
    for (const auto& pr : tb.per_path) CHECK(tb.lambda_bar >= pr.lambda_star - 1e-15);
    CHECK(tb.per_path[0].lambda_star != doctest::Approx(tb.per_path[1].lambda_star));
  }
}

TEST_CASE("clt variance bounds") {
  CHECK(clt_sigma2_bound(CltBoundKind::geometric, 0.5, 1.0, 1.0) == doctest::Approx(6.0));
  CHECK(clt_sigma2_bound(CltBoundKind::polynomial_b3, 0.0, 2.0, 0.5) == doctest::Approx(13.5));
  CHECK(clt_sigma2_bound(CltBoundKind::geometric, 0.5, 1.0, 0.0) == 0.0);
}

TEST_CASE("bound_curve dispatches on certificate kind and stays nonincreasing") {
  Certificate geo;
  geo.kind = Certificate::Kind::geometric;
  geo.r = 0.25;
  Certificate poly;
  poly.kind = Certificate::Kind::polynomial;
  poly.b = 2.0;
  poly.delta = 1.0;
  poly.u_const = 1.0;
  Certificate semi;
  semi.kind = Certificate::Kind::semi_exponential;
  semi.se_delta = std::exp(1.0);
  semi.se_lambda = 1.0;
  const std::vector<double> grid{1, 2, 4, 8, 16, 64};
  for (const auto& cert : {geo, poly, semi}) {
    const auto c = bound_curve(cert, 1.0, grid);
    for (std::size_t i = 1; i < c.points.size(); ++i)
      CHECK(c.points[i].value <= c.points[i - 1].value + 1e-15);
  }
}
