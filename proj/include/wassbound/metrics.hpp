#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "wassbound/lyapunov.hpp"
#include "wassbound/models.hpp"

namespace wassbound {

/// Sequence of (n, value, standard error); the common shape of bound curves
/// and empirical Wasserstein curves. CSV schema: n,value,stderr.
struct Curve {
  struct Point {
    double n;
    double value;
    double se;
  };
  std::vector<Point> points;

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  bool exact = false;  // closed form used; se == 0
};

/// d_V(x, y) = integral of V over [x^y, xvy]; scalar Lyapunov families only.
double dv_interval(const LyapunovSpec& V, double x, double y);

/// E d_V(X0, X1) for a scalar model started at x0. Uses the closed form
/// (flagged exact) for gg1/gg1_ht from the empty state with an
/// integer-exponent poly_shift V; Monte Carlo otherwise.
Estimate e_dv_one_step(const ChainModel& model, double x0, const LyapunovSpec& V,
                       std::size_t reps, std::uint64_t seed);

/// Exact W1 between the empirical measures of two samples (quantile
/// coupling); sizes may differ.
double w1_empirical(std::span<const double> a, std::span<const double> b);

/// Finite discrete law on the line.
struct DiscreteDist {
  std::vector<double> xs;
  std::vector<double> ps;
};

/// Exact W1 between finite discrete laws via the CDF-difference integral;
/// brute-force oracle for w1_empirical.
double w1_discrete_exact(const DiscreteDist& p, const DiscreteDist& q);

/// For each n in n_grid (all of 0..horizon when empty), the Monte Carlo
/// estimate of E||Xbar_n - Xbar_horizon|| under backward composition sharing
/// the mappings f_1..f_n; upper-bounds W(X_n, X_horizon) by coupling.
Curve backward_distance_curve(const ChainModel& model, std::span<const double> x0, int horizon,
                              std::size_t reps, std::uint64_t seed,
                              const std::vector<int>& n_grid = {});

struct GapEstimate {
  double value = 0.0;
  double se = 0.0;
  bool plateau_warning = false;
};

/// W(X_n, X_inf) estimate for a stochastically monotone Lindley recursion
/// started empty: E X_horizon - E X_n with shared increments. Warns when
/// E X has not plateaued over the last 10% of the horizon.
GapEstimate gg1_monotone_w1(const ChainModel& model, int n, int horizon, std::size_t reps,
                            std::uint64_t seed);
Curve gg1_monotone_w1_curve(const ChainModel& model, const std::vector<int>& n_grid, int horizon,
                            std::size_t reps, std::uint64_t seed,
                            bool* plateau_warning = nullptr);

struct SpitzerEstimate {
  double value = 0.0;
  double se = 0.0;
  bool truncated = false;  // last term exceeds 1e-3 of the partial sum
};

/// Spitzer-identity estimate of W(X_n, X_inf) for the Lindley recursion from
/// empty: truncated sum of E S_k^+ / k over k in (n, k_max], with S_k from
/// shared random-walk paths.
SpitzerEstimate spitzer_w1(const ChainModel& model, int n, int k_max, std::size_t reps,
                           std::uint64_t seed);
Curve spitzer_w1_curve(const ChainModel& model, const std::vector<int>& n_grid, int k_max,
                       std::size_t reps, std::uint64_t seed,
                       std::vector<bool>* truncation_flags = nullptr);

}  // namespace wassbound
