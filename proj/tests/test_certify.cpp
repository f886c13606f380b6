#include <cmath>

#include "doctest.h"
#include "wassbound/certify.hpp"

using namespace wassbound;

namespace {
const DistributionSpec kZ = DistributionSpec::shifted(DistributionSpec::pareto(4, 1), -2.0);
const double kM = 5.0 / 3.0;
}  // namespace

TEST_CASE("kv_estimate trivial cases") {
  const auto absorb = ChainModel::gg1(DistributionSpec::deterministic(-1.0));
  const auto kv0 = kv_estimate(absorb, LyapunovSpec::constant(1.0), std::vector<double>{0.0}, 500, 1);
  CHECK(kv0.value == 0.0);

  const auto grow = ChainModel::gg1(DistributionSpec::deterministic(1.0));
  const auto kv = kv_estimate(grow, LyapunovSpec::poly_shift(1, 0, 0, 0), std::vector<double>{2.0},
                              500, 2);
  CHECK(kv.value == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("gg1_drift_value closed forms for the Pareto example") {
  CHECK(gg1_drift_value(kZ, 2, kM, 0.0) == doctest::Approx(259.0 / 240).epsilon(1e-12));
  CHECK(gg1_drift_value(kZ, 2, kM, 1.0) == doctest::Approx(13.0 / 12).epsilon(1e-12));
  CHECK(gg1_drift_value(kZ, 2, kM, 1e4) == doctest::Approx(4.0 / 3).epsilon(1e-3));
  CHECK(gg1_drift_limit(kZ, 2) == doctest::Approx(4.0 / 3).epsilon(1e-12));
}

TEST_CASE("kv Monte Carlo agrees with the analytic drift at x = 1") {
  // slack identity: KV(x) = V(x) - drift_value(x) * V(x)^{1/2}
  const auto model = ChainModel::gg1(kZ);
  const auto V = LyapunovSpec::poly_shift(2, kM, 0, 0);
  const auto kv = kv_estimate(model, V, std::vector<double>{1.0}, 400000, 5);
  const double analytic = V(1.0) - gg1_drift_value(kZ, 2, kM, 1.0) * std::sqrt(V(1.0));
  CHECK(std::fabs(kv.value - analytic) <= 3.5 * kv.se);
}

TEST_CASE("drift infimum over [0, 1e4] stays >= 1, reproducing (delta, M) = (1, 5/3)") {
  double inf = gg1_drift_limit(kZ, 2);
  for (double x = 0.0; x <= 1e4; x += 0.01) inf = std::min(inf, gg1_drift_value(kZ, 2, kM, x));
  CHECK(inf >= 1.0);
}

TEST_CASE("check_cd_grid accepts delta = 1 and rejects delta = 1.3 near the origin") {
  const auto model = ChainModel::gg1(kZ);
  const auto V = LyapunovSpec::poly_shift(2, kM, 0, 0);
  std::vector<std::vector<double>> grid;
  for (double x = 0.0; x <= 100.0; x += 0.5) grid.push_back({x});

  const auto ok = check_cd_grid(model, V, DriftForm::scaled_power_of_v(1.0, 0.5), grid, 60000,
                                0.99, 31);
  CHECK(ok.accepted);
  CHECK(ok.min_lower_bound >= 0.0);

  const auto bad = check_cd_grid(model, V, DriftForm::scaled_power_of_v(1.3, 0.5), grid, 60000,
                                 0.99, 32);
  CHECK_FALSE(bad.accepted);
  CHECK(bad.worst_x <= 1.0);  // analytic drift dips below 1.3 near x = 0..1

  // CD(1, 0) holds trivially for any non-expansive model
  const auto triv = check_cd_grid(model, LyapunovSpec::constant(1.0), DriftForm::zero(),
                                  {{0.0}, {1.0}, {7.0}}, 2000, 0.99, 33);
  CHECK(triv.accepted);
}

TEST_CASE("accepted certificates hold on fresh random grid points (99% one-sided)") {
  const auto model = ChainModel::gg1(kZ);
  const auto V = LyapunovSpec::poly_shift(2, kM, 0, 0);
  Rng rng(777);
  std::vector<std::vector<double>> fresh;
  for (int i = 0; i < 10; ++i) fresh.push_back({100.0 * rng.uniform()});
  const auto rep = check_cd_grid(model, V, DriftForm::scaled_power_of_v(1.0, 0.5), fresh, 60000,
                                 0.99, 34);
  CHECK(rep.accepted);
}

TEST_CASE("gg1_large_m_search reproduces the paper-quality certificate") {
  const auto cert = gg1_large_m_search(kZ, 2);
  CHECK(cert.kind == Certificate::Kind::polynomial);
  CHECK(cert.b == 2.0);
  CHECK(cert.delta >= 1.0);
  // n = 0 bound value beats 0.9
  const double bound0 = cert.params.at("e_dv") * 2.0 / (cert.delta * cert.delta);
  CHECK(bound0 <= 0.9);

  SUBCASE("deterministic Z = -1 with m = 1 yields delta close to 1") {
    const auto c1 = gg1_large_m_search(DistributionSpec::deterministic(-1.0), 1);
    CHECK(c1.delta == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("unstable queue is reported as failure") {
    CHECK_THROWS_AS(gg1_large_m_search(DistributionSpec::deterministic(0.5), 1),
                    std::domain_error);
  }
}

TEST_CASE("heavy-traffic certificate closed forms (laplace)") {
  const auto Y = DistributionSpec::laplace(1.0);
  const auto h = ht_certificate(Y, 2, 0.1);
  // E(2+|Y|)^2 = 4 + 4 E|Y| + E Y^2 = 10 for laplace(1)
  CHECK(h.e_2_abs_m == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(h.M == doctest::Approx(4.0 * 10.0 * std::pow(1.0 + h.b_resid, 2) / 0.1).epsilon(1e-7));
  CHECK(h.c == doctest::Approx(h.M * std::pow(1.0 + h.b_resid, 2)).epsilon(1e-9));
  CHECK(h.c < h.M * h.M);
  CHECK(h.c > 0.0);
  CHECK(h.drift_const == doctest::Approx(2.0 * 0.1 / 4.0));

  // M scales exactly as 1/delta
  const auto h2 = ht_certificate(Y, 2, 0.05);
  CHECK(h2.M == doctest::Approx(2.0 * h.M).epsilon(1e-9));

  CHECK_THROWS_AS(ht_certificate(DistributionSpec::normal(0.3, 1.0), 2, 0.1), std::domain_error);
}

TEST_CASE("tandem_rate: calculus oracle for exponential input, deterministic interarrival") {
  const auto rate =
      tandem_rate(DistributionSpec::exponential(1.0), DistributionSpec::deterministic(2.0), 1.0,
                  0.99);
  CHECK(rate.a_star == doctest::Approx(0.5).epsilon(2e-9));
  CHECK(rate.lambda_star == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-9));
  CHECK(rate.lambda_star < 1.0);  // phi(0) = 1, interior minimum strictly below
  CHECK(rate.stationarity_residual <= 1e-6);

  SUBCASE("unstable input rejected") {
    CHECK_THROWS_AS(tandem_rate(DistributionSpec::exponential(1.0),
                                DistributionSpec::deterministic(0.5), 1.0, 0.99),
                    std::domain_error);
  }
  SUBCASE("input scaling moves the optimum consistently") {
    const auto scaled =
        tandem_rate(DistributionSpec::exponential(2.0), DistributionSpec::deterministic(2.0), 1.0,
                    1.98, 2.0);
    // 2 * Exp(2) has the law of Exp(1); same phi up to the argument scaling
    CHECK(scaled.lambda_star == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-7));
  }
}

TEST_CASE("sgd_nsc certificate hand values and alpha scaling") {
  const auto Z = DistributionSpec::two_point(-1, 1, 0.5);
  const auto cert = sgd_nsc_certificate(0.3, 3, Z);
  CHECK(cert.params.at("alpha_tilde") == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(cert.params.at("delta") == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(cert.r == doctest::Approx(0.025).epsilon(1e-14));

  // r(alpha) = alpha^2/(3+2 alpha) for m = 3: log-log slope ~= 2 over [0.01, 0.3]
  for (double m : {3.0, 4.0}) {
    const double r_lo = sgd_nsc_certificate(0.01, m, Z).r;
    const double r_hi = sgd_nsc_certificate(0.3, m, Z).r;
    const double slope = (std::log(r_hi) - std::log(r_lo)) / (std::log(0.3) - std::log(0.01));
    CHECK(std::fabs(slope - (m - 1.0)) < 0.15);
  }

  CHECK_THROWS_AS(sgd_nsc_certificate(0.4, 3, Z), std::domain_error);  // 0.4 > 3/(4*2)
}

TEST_CASE("sgd_ht certificate hand values and precondition failures") {
  const auto Z = DistributionSpec::two_point(-1, 1, 0.5);
  const auto cert = sgd_ht_certificate(0.1, 1.5, 2.0, Z);
  CHECK(cert.b == doctest::Approx(2.0));
  CHECK(cert.params.at("M") == doctest::Approx(40.0));
  CHECK(cert.delta == doctest::Approx(7.808688094e-3).epsilon(1e-6));

  CHECK_THROWS_AS(sgd_ht_certificate(0.1, 1.0, 2.0, Z), std::domain_error);   // beta+gamma = 3
  CHECK_THROWS_AS(sgd_ht_certificate(0.2, 1.5, 2.0, Z), std::domain_error);   // 0.2 > 1/8
}

TEST_CASE("certificate JSON includes the asserted inequality and the report") {
  const auto cert = sgd_nsc_certificate(0.3, 3, DistributionSpec::two_point(-1, 1, 0.5));
  const auto j = cert.to_json();
  CHECK(j.at("kind") == "geometric");
  CHECK(j.contains("cd_inequality"));
  CHECK(j.contains("report"));
  CHECK(j.at("provenance") == "analytic");
}
