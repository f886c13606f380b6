#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "quad_oracle.hpp"
#include "wassbound/distributions.hpp"

using namespace wassbound;

namespace {
const DistributionSpec kParetoService = DistributionSpec::pareto(4.0, 1.0);
const DistributionSpec kGg1Increment = DistributionSpec::shifted(kParetoService, -2.0);
}  // namespace

TEST_CASE("sampling determinism: identical seeds give bit-identical streams") {
  const auto spec = DistributionSpec::laplace(1.0);
  Rng a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) CHECK(spec.sample(a) == spec.sample(b));
  Rng c(1235);
  bool all_equal = true;
  Rng a2(1234);
  for (int i = 0; i < 100; ++i) all_equal = all_equal && spec.sample(a2) == spec.sample(c);
  CHECK_FALSE(all_equal);
}

TEST_CASE("deterministic point mass samples its value") {
  const auto spec = DistributionSpec::deterministic(2.0);
  Rng rng(99);
  CHECK(spec.sample(rng) == 2.0);
  CHECK(spec.sample(rng) == 2.0);
}

TEST_CASE("sample means match first moments at desk scale") {
  const std::size_t n = 1'000'000;
  SUBCASE("two_point(-1,1,0.5) mean -> 0 within 0.003") {
    const auto spec = DistributionSpec::two_point(-1, 1, 0.5);
    Rng rng(7);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += spec.sample(rng);
    CHECK(std::fabs(s / n) < 0.003);
  }
  SUBCASE("pareto(4,1) mean -> 4/3 within 0.002") {
    Rng rng(8);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += kParetoService.sample(rng);
    CHECK(s / n == doctest::Approx(4.0 / 3.0).epsilon(0.0015));
  }
}

TEST_CASE("Kolmogorov-Smirnov at desk scale for the continuous samplers") {
  auto ks = [](const DistributionSpec& spec, std::uint64_t seed) {
    const std::size_t n = 20000;
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = spec.sample(rng);
    std::sort(xs.begin(), xs.end());
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = spec.cdf(xs[i]);
      d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
      d = std::max(d, std::fabs(F - static_cast<double>(i + 1) / n));
    }
    return d * std::sqrt(static_cast<double>(n));
  };
  // 1.95 is the 99.9% KS critical value; generous but seed-stable
  CHECK(ks(DistributionSpec::normal(0.5, 2.0), 11) < 1.95);
  CHECK(ks(DistributionSpec::exponential(0.7), 12) < 1.95);
  CHECK(ks(DistributionSpec::laplace(1.3), 13) < 1.95);
  CHECK(ks(DistributionSpec::pareto(3.0, 2.0), 14) < 1.95);
}

TEST_CASE("shifted Pareto positive-part moments (closed forms)") {
  CHECK(moment(kGg1Increment, 1, MomentFlavor::positive_part) == doctest::Approx(1.0 / 24).epsilon(1e-12));
  CHECK(moment(kGg1Increment, 2, MomentFlavor::positive_part) == doctest::Approx(1.0 / 12).epsilon(1e-12));
  CHECK(moment(kGg1Increment, 3, MomentFlavor::positive_part) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(moment(kGg1Increment, 4, MomentFlavor::positive_part) == kInf);
  CHECK(moment(kParetoService, 4, MomentFlavor::raw) == kInf);
  CHECK(moment(kParetoService, 3.5, MomentFlavor::raw) ==
        doctest::Approx(4.0 / 0.5).epsilon(1e-12));  // alpha s^k/(alpha-k)
}

TEST_CASE("moment flavors vs quadrature oracle: E(Z+)^k = k int x^{k-1} P(Z>x) dx") {
  auto oracle = [](const DistributionSpec& spec, int k) {
    return test_oracle::integrate(
        [&](double x) { return k * std::pow(x, k - 1) * (1.0 - spec.cdf(x)); }, 0.0, 1e6);
  };
  for (const auto& spec :
       {kGg1Increment, DistributionSpec::shifted(DistributionSpec::exponential(1.0), -0.5),
        DistributionSpec::normal(0.3, 1.0), DistributionSpec::laplace(0.8)}) {
    for (int k : {1, 2}) {
      const double lib = moment(spec, k, MomentFlavor::positive_part);
      CHECK(lib == doctest::Approx(oracle(spec, k)).epsilon(1e-6));
    }
  }
}

TEST_CASE("strict CDF convention at atoms and closed forms") {
  CHECK(kGg1Increment.cdf(1.0) == doctest::Approx(80.0 / 81).epsilon(1e-14));
  CHECK(kGg1Increment.cdf(-1.0) == 0.0);
  CHECK(DistributionSpec::normal(0, 1).cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  const auto tp = DistributionSpec::two_point(-1, 1, 0.25);
  CHECK(tp.cdf(-1.0) == 0.0);  // strict: P(Z < -1) = 0
  CHECK(tp.cdf(1.0) == doctest::Approx(0.25));
  CHECK(tp.cdf(1.000001) == doctest::Approx(1.0));
}

TEST_CASE("mgf closed forms, strip boundary, and log-convexity") {
  const auto e1 = DistributionSpec::exponential(1.0);
  CHECK(e1.mgf(0.5) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(e1.mgf(0.0) == 1.0);
  CHECK(e1.mgf(1.0) == kInf);
  CHECK(kParetoService.mgf(0.01) == kInf);
  CHECK(kParetoService.mgf_strip_upper() == 0.0);

  // quadrature cross-check of the exponential mgf
  const double quad = test_oracle::integrate(
      [](double x) { return std::exp(0.5 * x) * std::exp(-x); }, 0.0, 200.0);
  CHECK(quad == doctest::Approx(2.0).epsilon(1e-9));

  // log-convexity on a strip grid
  for (const auto& spec : {e1, DistributionSpec::laplace(0.5), DistributionSpec::normal(0, 1),
                           DistributionSpec::two_point(-1, 2, 0.3)}) {
    const double hi = std::min(spec.mgf_strip_upper(), 2.0);
    const double a1 = 0.1 * hi, a2 = 0.45 * hi, a3 = 0.8 * hi;
    const double t = (a2 - a1) / (a3 - a1);
    const double lhs = std::log(spec.mgf(a2));
    const double rhs = (1 - t) * std::log(spec.mgf(a1)) + t * std::log(spec.mgf(a3));
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("residual lower bound: laplace memoryless tail and gaussian Mills ratio") {
  SUBCASE("laplace(1): infimum at y=-1, flat -1 tail") {
    const auto rb = residual_lower_bound(DistributionSpec::laplace(1.0));
    CHECK(rb.b == doctest::Approx(1.4507993471).epsilon(1e-6));
    CHECK(rb.minimizer == doctest::Approx(-1.0));
  }
  SUBCASE("normal(0,1): finite infimum via Mills-ratio quadrature oracle") {
    const auto rb = residual_lower_bound(DistributionSpec::normal(0, 1));
    CHECK(rb.b == doctest::Approx(1.2875999709).epsilon(1e-6));
  }
  SUBCASE("support bounded below is rejected") {
    const auto shifted_exp = DistributionSpec::shifted(DistributionSpec::exponential(1.0), -1.0);
    CHECK_THROWS_AS(residual_lower_bound(shifted_exp), std::domain_error);
  }
  SUBCASE("non-centered law is rejected") {
    CHECK_THROWS_AS(residual_lower_bound(DistributionSpec::normal(0.5, 1)), std::domain_error);
  }
}

TEST_CASE("distribution JSON round trip") {
  for (const auto& spec :
       {kGg1Increment, DistributionSpec::two_point(-1, 1, 0.5), DistributionSpec::laplace(2.0)}) {
    const auto back = DistributionSpec::from_json(spec.to_json());
    Rng a(5), b(5);
    for (int i = 0; i < 32; ++i) CHECK(spec.sample(a) == back.sample(b));
  }
  CHECK_THROWS_AS(DistributionSpec::from_json(nlohmann::json{
                      {"kind", "shifted"},
                      {"offset", 1.0},
                      {"base", {{"kind", "shifted"}, {"offset", 1.0}, {"base", {{"kind", "deterministic"}, {"value", 0.0}}}}}}),
                  std::invalid_argument);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(DistributionSpec::pareto(-1, 1), std::invalid_argument);
  CHECK_THROWS_AS(DistributionSpec::exponential(0), std::invalid_argument);
  CHECK_THROWS_AS(DistributionSpec::two_point(0, 1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(moment(kParetoService, -1, MomentFlavor::raw), std::invalid_argument);
}
