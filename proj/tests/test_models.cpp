#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "wassbound/models.hpp"

using namespace wassbound;

TEST_CASE("gg1 step: reflection and Lipschitz factor") {
  const auto absorb = ChainModel::gg1(DistributionSpec::deterministic(-1.0));
  Rng rng(1);
  CHECK(absorb.step1(0.0, rng) == std::pair<double, double>{0.0, 0.0});
  const auto grow = ChainModel::gg1(DistributionSpec::deterministic(1.0));
  CHECK(grow.step1(2.0, rng) == std::pair<double, double>{3.0, 1.0});
}

TEST_CASE("sgd_nsc step: hand evaluation of the mapping and its derivative") {
  const auto model = ChainModel::sgd_nsc(3, 0.1, DistributionSpec::deterministic(0.0));
  Rng rng(2);
  const auto [x1, lip] = model.step1(0.5, rng);
  CHECK(x1 == doctest::Approx(0.475).epsilon(1e-15));
  CHECK(lip == doctest::Approx(0.9).epsilon(1e-15));
  // outside the unit interval the mapping is affine with slope 1-alpha
  const auto [x2, lip2] = model.step1(2.0, rng);
  CHECK(x2 == doctest::Approx(2.0 - 0.1 * 2.0));
  CHECK(lip2 == doctest::Approx(0.9));
}

TEST_CASE("sgd lip factors stay <= 1 under the smallness conditions (grid check)") {
  Rng rng(3);
  const auto nsc = ChainModel::sgd_nsc(3, 0.3, DistributionSpec::two_point(-1, 1, 0.5));
  const auto ht = ChainModel::sgd_ht(1.5, 0.1, DistributionSpec::two_point(-1, 1, 0.5));
  for (int i = 0; i <= 100; ++i) {
    const double x = -5.0 + 0.1 * i;
    double sx[1] = {x};
    CHECK(nsc.step(sx, rng) <= 1.0 + 1e-12);
    sx[0] = x;
    CHECK(ht.step(sx, rng) <= 1.0 + 1e-12);
  }
}

TEST_CASE("tandem_drain event traces") {
  SUBCASE("pass-through at an empty downstream station") {
    const auto w = tandem_drain(std::vector<double>{1, 2}, std::vector<double>{3, 0}, 1.0);
    CHECK(w[0] == doctest::Approx(2.0));
    CHECK(w[1] == doctest::Approx(0.0));
  }
  SUBCASE("empty stays empty") {
    const auto w = tandem_drain(std::vector<double>{2, 3, 1}, std::vector<double>{0, 0, 0}, 7.5);
    for (double v : w) CHECK(v == 0.0);
  }
  SUBCASE("slow second station builds then drains") {
    const auto mid = tandem_drain(std::vector<double>{2, 1}, std::vector<double>{2, 0}, 1.0);
    CHECK(mid[0] == doctest::Approx(0.0));
    CHECK(mid[1] == doctest::Approx(1.0));
    const auto w = tandem_drain(std::vector<double>{2, 1}, std::vector<double>{2, 0}, 2.0);
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(w[1] == doctest::Approx(0.0));
  }
  SUBCASE("negative workload rejected") {
    CHECK_THROWS(tandem_drain(std::vector<double>{1}, std::vector<double>{-0.5}, 1.0));
  }
}

TEST_CASE("tandem_drain agrees with a fine-step Euler simulation on reachable states") {
  const std::vector<double> rates{1.0, 2.0, 1.4};
  // generate reachable states by stepping the tandem chain from empty
  auto model = ChainModel::tandem(rates, DistributionSpec::exponential(0.9),
                                  DistributionSpec::exponential(1.2));
  Rng rng(17);
  std::vector<double> x(3, 0.0);
  auto euler = [&](std::vector<double> state, double t) {
    const double dt = 1e-5;
    const int steps = static_cast<int>(t / dt);
    for (int s = 0; s < steps; ++s) {
      double inflow = 0.0;
      std::vector<double> out(state.size());
      for (std::size_t i = 0; i < state.size(); ++i) {
        out[i] = state[i] > 0 ? rates[i] : std::min(inflow, rates[i]);
        const double d = inflow - out[i];
        inflow = out[i];
        state[i] = std::max(0.0, state[i] + d * dt);
      }
    }
    return state;
  };
  for (int trial = 0; trial < 12; ++trial) {
    for (int burn = 0; burn < 4; ++burn) model.step(x, rng);
    const double t = 0.3 + 0.2 * (trial % 5);
    const auto fast = tandem_drain(rates, x, t);
    const auto slow = euler(x, t);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-3).scale(1.0));
  }
}

TEST_CASE("total workload drains at exactly the bottleneck rate (reachable states)") {
  const std::vector<double> rates{1.0, 2.0};
  SUBCASE("hand trace (3,0): slope -1 until empty") {
    const auto r = total_workload_rate_check(rates, {{3.0, 0.0}}, std::vector<double>{0.5, 1, 2, 2.9});
    CHECK(r.ok);
  }
  SUBCASE("zero state: slope 0") {
    const auto r = total_workload_rate_check(rates, {{0.0, 0.0}}, std::vector<double>{1.0});
    CHECK(r.ok);
  }
  SUBCASE("100 simulated reachable states") {
    auto model = ChainModel::tandem(rates, DistributionSpec::exponential(1.0),
                                    DistributionSpec::exponential(1.5));
    Rng rng(5);
    std::vector<std::vector<double>> samples;
    std::vector<double> x(2, 0.0);
    for (int i = 0; i < 100; ++i) {
      model.step(x, rng);
      samples.push_back(x);
    }
    const auto r = total_workload_rate_check(rates, samples, std::vector<double>{0.1, 0.7, 1.9});
    CHECK(r.ok);
    CHECK(r.max_abs_error < 1e-9);
  }
}

TEST_CASE("lip factors are {0,1} and path products nonincreasing for queueing chains") {
  auto check_products = [](const ChainModel& model, int dim) {
    Rng rng(31);
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    double product = 1.0;
    for (int t = 0; t < 400; ++t) {
      const double lip = model.step(x, rng);
      CHECK((lip == 0.0 || lip == 1.0));
      const double next = product * lip;
      CHECK(next <= product);
      product = next;
    }
    CHECK((product == 0.0 || product == 1.0));
  };
  check_products(ChainModel::gg1(DistributionSpec::shifted(DistributionSpec::pareto(4, 1), -2)), 1);
  check_products(ChainModel::tandem({1.5, 1.2}, DistributionSpec::deterministic(2.0),
                                    DistributionSpec::exponential(1.0)),
                 2);
  check_products(ChainModel::priority(2.0, DistributionSpec::exponential(1.0),
                                      {DistributionSpec::exponential(1.2),
                                       DistributionSpec::exponential(2.0)}),
                 2);
}

TEST_CASE("priority queue: total workload follows the scalar Lindley recursion exactly") {
  // dyadic-valued inputs keep every floating-point operation exact, so the
  // structural identity holds bitwise
  const auto T = DistributionSpec::two_point(0.5, 1.5, 0.5);
  const std::vector<DistributionSpec> Z{DistributionSpec::two_point(0.0, 0.75, 0.5),
                                        DistributionSpec::two_point(0.25, 1.0, 0.25)};
  const double r = 1.25;
  const auto model = ChainModel::priority(r, T, Z);
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    Rng rng_model(mix_seed(404, rep)), rng_ref(mix_seed(404, rep));
    std::vector<double> x(2, 0.0);
    double s = 0.0;
    for (int t = 0; t < 1000; ++t) {
      model.step(x, rng_model);
      const auto noise = model.draw_noise(rng_ref);  // same stream, same draws
      const double arrivals = noise.vec[0] + noise.vec[1];
      s = std::max(s + arrivals - r * noise.a, 0.0);
      const double total = x[0] + x[1];
      CHECK(total == s);
    }
  }
}

TEST_CASE("rbm skeleton: doubling the substeps moves E X_s by less than 2 stderr") {
  auto run = [](int substeps) {
    const auto model = ChainModel::rbm_skeleton(1.0, 1.0, 1.0, substeps);
    const auto xs = simulate_marginal1(model, 0.0, 1, 20000, 51);
    double sum = 0, sumsq = 0;
    for (double v : xs) {
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / xs.size();
    const double var = (sumsq - sum * mean) / (xs.size() - 1);
    return std::pair<double, double>{mean, std::sqrt(var / xs.size())};
  };
  const auto [m1, se1] = run(512);
  const auto [m2, se2] = run(1024);
  CHECK(std::fabs(m1 - m2) < 2.0 * std::sqrt(se1 * se1 + se2 * se2));
}

TEST_CASE("simulate_marginal basics") {
  const auto model = ChainModel::ar1(0.5, DistributionSpec::two_point(-1, 1, 0.5));
  const auto at0 = simulate_marginal1(model, 0.25, 0, 100, 3);
  for (double v : at0) CHECK(v == 0.25);

  const auto far = simulate_marginal1(model, 0.0, 60, 40000, 4);
  const double mean = std::accumulate(far.begin(), far.end(), 0.0) / far.size();
  CHECK(std::fabs(mean) < 3.0 * 0.6 / std::sqrt(40000.0));

  // Lindley recursion from empty is stochastically monotone: E X_n nondecreasing
  const auto queue = ChainModel::gg1(DistributionSpec::shifted(DistributionSpec::pareto(4, 1), -2));
  const auto cols = marginal_samples(queue, 0.0, {1, 5, 20, 80}, 20000, 6);
  double prev = -1.0;
  for (const auto& col : cols) {
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
    const double sd = 0.6 / std::sqrt(static_cast<double>(col.size()));
    CHECK(m >= prev - 3 * sd);
    prev = m;
  }
}

TEST_CASE("tree decomposition") {
  SUBCASE("K=1 chain reproduces the original tandem") {
    TreeSpec tree;
    tree.K = 1;
    tree.L = 1;
    tree.rates = {2.0, 1.5};
    tree.routing = {{1.0}};
    const auto specs = tree_decompose(tree, DistributionSpec::exponential(1.0),
                                      DistributionSpec::deterministic(1.0));
    REQUIRE(specs.size() == 1);
    CHECK(specs[0].rates == std::vector<double>{2.0, 1.5});
    CHECK(specs[0].input_scale == doctest::Approx(1.0));
  }
  SUBCASE("K=2, L=1 splits into two 2-station tandems with halved inputs") {
    TreeSpec tree;
    tree.K = 2;
    tree.L = 1;
    tree.rates = {2.0, 0.8, 0.9};
    tree.routing = {{0.5, 0.5}};
    const auto specs = tree_decompose(tree, DistributionSpec::exponential(1.0),
                                      DistributionSpec::deterministic(1.0));
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].rates[0] == doctest::Approx(1.0));  // 0.5 * r_0
    CHECK(specs[0].rates[1] == doctest::Approx(0.8));
    CHECK(specs[1].rates[1] == doctest::Approx(0.9));
    CHECK(specs[0].input_scale == doctest::Approx(0.5));
  }
  SUBCASE("stability violation names the path") {
    TreeSpec tree;
    tree.K = 2;
    tree.L = 1;
    tree.rates = {2.0, 0.4, 0.9};  // child 1 cannot handle 0.5 * flow 1.0... (0.5 >= 0.4)
    tree.routing = {{0.5, 0.5}};
    CHECK_THROWS_WITH_AS(tree_decompose(tree, DistributionSpec::exponential(1.0),
                                        DistributionSpec::deterministic(1.0)),
                         doctest::Contains("path 0 1"), std::domain_error);
  }
}

TEST_CASE("model JSON round trip preserves sampling") {
  const auto models = {
      ChainModel::gg1(DistributionSpec::shifted(DistributionSpec::pareto(4, 1), -2)),
      ChainModel::tandem({1.5, 1.2}, DistributionSpec::deterministic(2.0),
                         DistributionSpec::exponential(1.0)),
      ChainModel::sgd_ht(1.5, 0.1, DistributionSpec::two_point(-1, 1, 0.5)),
      ChainModel::sgd_momentum(0.1, 0.05, DistributionSpec::two_point(-1, 1, 0.5)),
  };
  for (const auto& model : models) {
    const auto back = ChainModel::from_json(model.to_json());
    Rng a(9), b(9);
    std::vector<double> xa(static_cast<std::size_t>(model.dim()), 0.1);
    std::vector<double> xb(static_cast<std::size_t>(model.dim()), 0.1);
    for (int t = 0; t < 16; ++t) {
      CHECK(model.step(xa, a) == back.step(xb, b));
      CHECK(xa == xb);
    }
  }
}

TEST_CASE("sgd_momentum demo model keeps a 2-d state with a constant Jacobian norm") {
  const auto model = ChainModel::sgd_momentum(0.1, 0.05, DistributionSpec::two_point(-1, 1, 0.5));
  CHECK(model.dim() == 2);
  Rng rng(77);
  std::vector<double> x{0.4, -0.2};
  const double lip1 = model.step(x, rng);
  const double lip2 = model.step(x, rng);
  CHECK(lip1 == lip2);
  CHECK(std::isfinite(x[0]));
}
