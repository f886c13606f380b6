#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "wassbound/distributions.hpp"
#include "wassbound/rng.hpp"

namespace wassbound {

/// Randomness consumed by one transition, drawn separately from the state so
/// the same mapping can be replayed (backward coupling, shared-increment
/// estimators).
struct StepNoise {
  double a = 0.0, b = 0.0;
  std::vector<double> vec;
};

/// A Markov chain given by its random-mapping step
/// x -> (f(x), Df(x)), where Df is the local Lipschitz factor of the sampled
/// mapping at x (L1 metric for vector states).
class ChainModel {
 public:
  struct Gg1 {
    DistributionSpec Z;
  };
  struct Gg1Ht {
    DistributionSpec Y;
    double delta;
  };
  struct RbmSkeleton {
    double r, sigma, s;
    int substeps;
  };
  struct Tandem {
    std::vector<double> rates;
    DistributionSpec T, Z;
  };
  struct Priority {
    double r;
    DistributionSpec T;
    std::vector<DistributionSpec> Z;
  };
  struct SgdNsc {
    double m, alpha;
    DistributionSpec Z;
  };
  struct SgdHt {
    double beta, alpha;
    DistributionSpec Z;
  };
  struct Ar1 {
    double alpha;
    DistributionSpec Y;
  };
  struct SgdMomentum {  // simulation demo only; no certificate attaches
    double alpha, beta;
    DistributionSpec Y;
  };
  using Params = std::variant<Gg1, Gg1Ht, RbmSkeleton, Tandem, Priority, SgdNsc, SgdHt, Ar1,
                              SgdMomentum>;

  static ChainModel gg1(DistributionSpec Z);
  static ChainModel gg1_ht(DistributionSpec Y, double delta);
  static ChainModel rbm_skeleton(double r, double sigma, double s, int substeps = 1024);
  static ChainModel tandem(std::vector<double> rates, DistributionSpec T, DistributionSpec Z);
  static ChainModel priority(double r, DistributionSpec T, std::vector<DistributionSpec> Z);
  static ChainModel sgd_nsc(double m, double alpha, DistributionSpec Z);
  static ChainModel sgd_ht(double beta, double alpha, DistributionSpec Z);
  static ChainModel ar1(double alpha, DistributionSpec Y);
  static ChainModel sgd_momentum(double alpha, double beta, DistributionSpec Y);

  const Params& params() const { return params_; }
  int dim() const { return dim_; }
  std::string kind_name() const;

  StepNoise draw_noise(Rng& rng) const;
  /// Applies the mapping encoded by `noise` in place; returns the local
  /// Lipschitz factor at the pre-step state.
  double apply(std::span<double> x, const StepNoise& noise) const;
  double step(std::span<double> x, Rng& rng) const;
  /// Scalar convenience: (next state, lip).
  std::pair<double, double> step1(double x, Rng& rng) const;

  /// The scalar Lindley increment law (gg1: Z, gg1_ht: Y - delta);
  /// throws for other kinds.
  DistributionSpec increment_law() const;

  nlohmann::json to_json() const;
  static ChainModel from_json(const nlohmann::json& j);

 private:
  ChainModel(Params p, int dim) : params_(std::move(p)), dim_(dim) {}
  Params params_;
  int dim_;
};

/// Virtual workload of a tandem fluid network after draining for time t with
/// no further input: station 1 drains at rates[0] while positive; station i
/// receives station i-1's output (its full rate while busy, else its inflow
/// capped at the upstream rate) and drains at rates[i] while positive.
std::vector<double> tandem_drain(std::span<const double> rates, std::span<const double> x,
                                 double t);

struct RateCheckViolation {
  std::size_t sample;
  double t;
  double error;
};
struct RateCheckReport {
  bool ok = true;
  double max_abs_error = 0.0;
  std::vector<RateCheckViolation> violations;
};

/// Verifies that total workload e^T w(t;x) decreases at rate exactly
/// min_i rates[i] until it hits zero, for states reachable from empty.
RateCheckReport total_workload_rate_check(std::span<const double> rates,
                                          const std::vector<std::vector<double>>& x_samples,
                                          std::span<const double> t_grid, double tol = 1e-9);

/// Complete K-ary tree of stations with depth L. Node 0 is the root; the
/// j-th child (j = 1..K) of node i is node i*K + j. routing[i][j-1] is the
/// fraction of node i's output sent to child j.
struct TreeSpec {
  int K = 1, L = 1;
  std::vector<double> rates;                 // per node, breadth-first
  std::vector<std::vector<double>> routing;  // per internal node
};

struct TandemFromTree {
  std::vector<int> path;        // node ids root..leaf
  std::vector<double> rates;    // decomposed station rates, L+1 entries
  double input_scale;           // fraction of Z entering this tandem
};

/// Decomposes the tree into K^L independent tandem networks (one per
/// root-to-leaf routing choice). Throws std::domain_error naming the first
/// path violating the stability condition.
std::vector<TandemFromTree> tree_decompose(const TreeSpec& tree, const DistributionSpec& Z,
                                           const DistributionSpec& T);

/// reps independent forward paths of length n; returns the states at time n.
std::vector<std::vector<double>> simulate_marginal(const ChainModel& model,
                                                   std::span<const double> x0, int n,
                                                   std::size_t reps, std::uint64_t seed);
/// Scalar-state convenience.
std::vector<double> simulate_marginal1(const ChainModel& model, double x0, int n,
                                       std::size_t reps, std::uint64_t seed);

/// One pass per replication, recording the scalar state at every step index
/// in step_grid (ascending). result[g][rep] is the state at step_grid[g].
std::vector<std::vector<double>> marginal_samples(const ChainModel& model, double x0,
                                                  const std::vector<int>& step_grid,
                                                  std::size_t reps, std::uint64_t seed);

}  // namespace wassbound
