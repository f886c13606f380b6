#include "wassbound/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wassbound/parallel.hpp"

namespace wassbound {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double sum(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

}  // namespace

ChainModel ChainModel::gg1(DistributionSpec Z) { return {Gg1{std::move(Z)}, 1}; }

ChainModel ChainModel::gg1_ht(DistributionSpec Y, double delta) {
  require(delta > 0, "gg1_ht: delta must be positive");
  return {Gg1Ht{std::move(Y), delta}, 1};
}

ChainModel ChainModel::rbm_skeleton(double r, double sigma, double s, int substeps) {
  require(r > 0 && sigma > 0 && s > 0, "rbm_skeleton: r, sigma, s must be positive");
  require(substeps >= 2 && substeps % 2 == 0, "rbm_skeleton: substeps must be even and >= 2");
  return {RbmSkeleton{r, sigma, s, substeps}, 1};
}

ChainModel ChainModel::tandem(std::vector<double> rates, DistributionSpec T, DistributionSpec Z) {
  require(!rates.empty(), "tandem: needs at least one station");
  for (double r : rates) require(r > 0, "tandem: rates must be positive");
  const int d = static_cast<int>(rates.size());
  return {Tandem{std::move(rates), std::move(T), std::move(Z)}, d};
}

ChainModel ChainModel::priority(double r, DistributionSpec T, std::vector<DistributionSpec> Z) {
  require(r > 0, "priority: service rate must be positive");
  require(!Z.empty(), "priority: needs at least one queue");
  const int d = static_cast<int>(Z.size());
  return {Priority{r, std::move(T), std::move(Z)}, d};
}

ChainModel ChainModel::sgd_nsc(double m, double alpha, DistributionSpec Z) {
  require(m >= 3, "sgd_nsc: m must be >= 3");
  require(alpha > 0 && alpha < 1, "sgd_nsc: alpha must lie in (0,1)");
  return {SgdNsc{m, alpha, std::move(Z)}, 1};
}

ChainModel ChainModel::sgd_ht(double beta, double alpha, DistributionSpec Z) {
  require(beta >= 1 && beta < 2, "sgd_ht: beta must lie in [1,2)");
  require(alpha > 0 && alpha < 1, "sgd_ht: alpha must lie in (0,1)");
  return {SgdHt{beta, alpha, std::move(Z)}, 1};
}

ChainModel ChainModel::ar1(double alpha, DistributionSpec Y) {
  require(alpha > 0 && alpha < 1, "ar1: alpha must lie in (0,1)");
  return {Ar1{alpha, std::move(Y)}, 1};
}

ChainModel ChainModel::sgd_momentum(double alpha, double beta, DistributionSpec Y) {
  require(alpha > 0 && alpha < 1, "sgd_momentum: alpha must lie in (0,1)");
  require(beta >= 0 && beta < 1, "sgd_momentum: beta must lie in [0,1)");
  return {SgdMomentum{alpha, beta, std::move(Y)}, 2};
}

std::string ChainModel::kind_name() const {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gg1>) return "gg1";
        else if constexpr (std::is_same_v<T, Gg1Ht>) return "gg1_ht";
        else if constexpr (std::is_same_v<T, RbmSkeleton>) return "rbm_skeleton";
        else if constexpr (std::is_same_v<T, Tandem>) return "tandem";
        else if constexpr (std::is_same_v<T, Priority>) return "priority";
        else if constexpr (std::is_same_v<T, SgdNsc>) return "sgd_nsc";
        else if constexpr (std::is_same_v<T, SgdHt>) return "sgd_ht";
        else if constexpr (std::is_same_v<T, Ar1>) return "ar1";
        else return "sgd_momentum";
      },
      params_);
}

StepNoise ChainModel::draw_noise(Rng& rng) const {
  StepNoise n;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gg1>) {
          n.a = p.Z.sample(rng);
        } else if constexpr (std::is_same_v<T, Gg1Ht>) {
          n.a = p.Y.sample(rng) - p.delta;
        } else if constexpr (std::is_same_v<T, RbmSkeleton>) {
          n.vec.resize(static_cast<std::size_t>(p.substeps));
          for (auto& v : n.vec) v = rng.normal();
        } else if constexpr (std::is_same_v<T, Tandem>) {
          n.a = p.T.sample(rng);
          n.b = p.Z.sample(rng);
        } else if constexpr (std::is_same_v<T, Priority>) {
          n.a = p.T.sample(rng);
          n.vec.resize(p.Z.size());
          for (std::size_t i = 0; i < p.Z.size(); ++i) n.vec[i] = p.Z[i].sample(rng);
        } else if constexpr (std::is_same_v<T, SgdNsc>) {
          n.a = p.Z.sample(rng);
        } else if constexpr (std::is_same_v<T, SgdHt>) {
          n.a = p.Z.sample(rng);
        } else if constexpr (std::is_same_v<T, Ar1>) {
          n.a = p.Y.sample(rng);
        } else {
          n.a = p.Y.sample(rng);
        }
      },
      params_);
  return n;
}

double ChainModel::apply(std::span<double> x, const StepNoise& noise) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("ChainModel::apply: state dimension mismatch");
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gg1>) {
          const double y = x[0] + noise.a;
          x[0] = std::max(y, 0.0);
          return y >= 0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Gg1Ht>) {
          const double y = x[0] + noise.a;
          x[0] = std::max(y, 0.0);
          return y >= 0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, RbmSkeleton>) {
          // Euler substeps of the free path; Skorokhod reflection at the end.
          const double dt = p.s / p.substeps;
          const double drift = -p.r * dt;
          const double vol = p.sigma * std::sqrt(dt);
          double y = x[0];
          double ymin = y;
          for (double xi : noise.vec) {
            y += drift + vol * xi;
            ymin = std::min(ymin, y);
          }
          x[0] = y - std::min(0.0, ymin);
          return ymin >= 0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Tandem>) {
          const double rstar = *std::min_element(p.rates.begin(), p.rates.end());
          const double lip = sum(x) - rstar * noise.a >= 0 ? 1.0 : 0.0;
          auto drained = tandem_drain(p.rates, x, noise.a);
          std::copy(drained.begin(), drained.end(), x.begin());
          x[0] += noise.b;
          return lip;
        } else if constexpr (std::is_same_v<T, Priority>) {
          // Arrival first, then the server works for the whole interarrival
          // period: e^T X then follows the scalar Lindley recursion exactly.
          for (std::size_t i = 0; i < noise.vec.size(); ++i) x[i] += noise.vec[i];
          const double lip = sum(x) - p.r * noise.a >= 0 ? 1.0 : 0.0;
          double capacity = p.r * noise.a;
          for (std::size_t i = 0; i < x.size() && capacity > 0; ++i) {
            const double served = std::min(x[i], capacity);
            x[i] -= served;
            capacity -= served;
          }
          return lip;
        } else if constexpr (std::is_same_v<T, SgdNsc>) {
          const double ax = std::fabs(x[0]);
          double lip;
          if (ax < 1.0) {
            lip = std::fabs(1.0 - p.alpha * (p.m - 1) * std::pow(ax, p.m - 2));
            x[0] -= p.alpha * (sgn(x[0]) * std::pow(ax, p.m - 1) + noise.a);
          } else {
            lip = 1.0 - p.alpha;
            x[0] -= p.alpha * (x[0] + noise.a);
          }
          return lip;
        } else if constexpr (std::is_same_v<T, SgdHt>) {
          const double ax = std::fabs(x[0]);
          double lip;
          if (ax < 1.0) {
            lip = 1.0 - p.alpha;
            x[0] -= p.alpha * (x[0] + noise.a);
          } else {
            lip = std::fabs(1.0 - p.alpha * (p.beta - 1) * std::pow(ax, p.beta - 2));
            x[0] -= p.alpha * (sgn(x[0]) * std::pow(ax, p.beta - 1) + noise.a);
          }
          return lip;
        } else if constexpr (std::is_same_v<T, Ar1>) {
          x[0] = (1.0 - p.alpha) * x[0] + p.alpha * noise.a;
          return 1.0 - p.alpha;
        } else {
          // position/velocity pair; constant Jacobian, L1 operator norm
          const double xn = x[0] - p.alpha * x[1];
          const double vn = p.beta * x[1] + (1.0 - p.beta) * (xn - noise.a);
          x[0] = xn;
          x[1] = vn;
          const double col0 = 1.0 + (1.0 - p.beta);
          const double col1 = p.alpha + std::fabs(p.beta - (1.0 - p.beta) * p.alpha);
          return std::max(col0, col1);
        }
      },
      params_);
}

double ChainModel::step(std::span<double> x, Rng& rng) const {
  // Fast paths for the scalar chains that dominate simulation budgets.
  if (auto* g = std::get_if<Gg1>(&params_)) {
    const double y = x[0] + g->Z.sample(rng);
    x[0] = std::max(y, 0.0);
    return y >= 0 ? 1.0 : 0.0;
  }
  if (auto* g = std::get_if<Gg1Ht>(&params_)) {
    const double y = x[0] + g->Y.sample(rng) - g->delta;
    x[0] = std::max(y, 0.0);
    return y >= 0 ? 1.0 : 0.0;
  }
  if (auto* p = std::get_if<RbmSkeleton>(&params_)) {
    const double dt = p->s / p->substeps;
    const double drift = -p->r * dt;
    const double vol = p->sigma * std::sqrt(dt);
    double y = x[0];
    double ymin = y;
    for (int i = 0; i < p->substeps; ++i) {
      y += drift + vol * rng.normal();
      ymin = std::min(ymin, y);
    }
    x[0] = y - std::min(0.0, ymin);
    return ymin >= 0 ? 1.0 : 0.0;
  }
  return apply(x, draw_noise(rng));
}

std::pair<double, double> ChainModel::step1(double x, Rng& rng) const {
  if (dim_ != 1) throw std::invalid_argument("step1: model state is not scalar");
  double s[1] = {x};
  const double lip = step(s, rng);
  return {s[0], lip};
}

DistributionSpec ChainModel::increment_law() const {
  if (auto* g = std::get_if<Gg1>(&params_)) return g->Z;
  if (auto* g = std::get_if<Gg1Ht>(&params_)) return DistributionSpec::shifted(g->Y, -g->delta);
  throw std::invalid_argument("increment_law: defined only for gg1 / gg1_ht models");
}

nlohmann::json ChainModel::to_json() const {
  return std::visit(
      [&](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Gg1>) {
          return {{"kind", "gg1"}, {"Z", p.Z.to_json()}};
        } else if constexpr (std::is_same_v<T, Gg1Ht>) {
          return {{"kind", "gg1_ht"}, {"Y", p.Y.to_json()}, {"delta", p.delta}};
        } else if constexpr (std::is_same_v<T, RbmSkeleton>) {
          return {{"kind", "rbm_skeleton"}, {"r", p.r}, {"sigma", p.sigma}, {"s", p.s},
                  {"substeps", p.substeps}};
        } else if constexpr (std::is_same_v<T, Tandem>) {
          return {{"kind", "tandem"}, {"rates", p.rates}, {"T", p.T.to_json()},
                  {"Z", p.Z.to_json()}};
        } else if constexpr (std::is_same_v<T, Priority>) {
          nlohmann::json zs = nlohmann::json::array();
          for (const auto& z : p.Z) zs.push_back(z.to_json());
          return {{"kind", "priority"}, {"r", p.r}, {"T", p.T.to_json()}, {"Z", zs}};
        } else if constexpr (std::is_same_v<T, SgdNsc>) {
          return {{"kind", "sgd_nsc"}, {"m", p.m}, {"alpha", p.alpha}, {"Z", p.Z.to_json()}};
        } else if constexpr (std::is_same_v<T, SgdHt>) {
          return {{"kind", "sgd_ht"}, {"beta", p.beta}, {"alpha", p.alpha}, {"Z", p.Z.to_json()}};
        } else if constexpr (std::is_same_v<T, Ar1>) {
          return {{"kind", "ar1"}, {"alpha", p.alpha}, {"Y", p.Y.to_json()}};
        } else {
          return {{"kind", "sgd_momentum"}, {"alpha", p.alpha}, {"beta", p.beta},
                  {"Y", p.Y.to_json()}};
        }
      },
      params_);
}

ChainModel ChainModel::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gg1") return gg1(DistributionSpec::from_json(j.at("Z")));
  if (kind == "gg1_ht")
    return gg1_ht(DistributionSpec::from_json(j.at("Y")), j.at("delta"));
  if (kind == "rbm_skeleton")
    return rbm_skeleton(j.at("r"), j.at("sigma"), j.at("s"), j.value("substeps", 1024));
  if (kind == "tandem")
    return tandem(j.at("rates").get<std::vector<double>>(),
                  DistributionSpec::from_json(j.at("T")), DistributionSpec::from_json(j.at("Z")));
  if (kind == "priority") {
    std::vector<DistributionSpec> zs;
    for (const auto& z : j.at("Z")) zs.push_back(DistributionSpec::from_json(z));
    return priority(j.at("r"), DistributionSpec::from_json(j.at("T")), std::move(zs));
  }
  if (kind == "sgd_nsc")
    return sgd_nsc(j.at("m"), j.at("alpha"), DistributionSpec::from_json(j.at("Z")));
  if (kind == "sgd_ht")
    return sgd_ht(j.at("beta"), j.at("alpha"), DistributionSpec::from_json(j.at("Z")));
  if (kind == "ar1") return ar1(j.at("alpha"), DistributionSpec::from_json(j.at("Y")));
  if (kind == "sgd_momentum")
    return sgd_momentum(j.at("alpha"), j.at("beta"), DistributionSpec::from_json(j.at("Y")));
  throw std::invalid_argument("unknown model kind: " + kind);
}

// ---------------------------------------------------------------------------
// Tandem fluid drain
// ---------------------------------------------------------------------------

std::vector<double> tandem_drain(std::span<const double> rates, std::span<const double> x,
                                 double t) {
  const std::size_t d = rates.size();
  if (x.size() != d) throw std::invalid_argument("tandem_drain: dimension mismatch");
  std::vector<double> w(x.begin(), x.end());
  for (double v : w)
    if (v < 0) throw std::invalid_argument("tandem_drain: negative workload component");
  if (t <= 0) return w;

  double remaining = t;
  // Rates only change at emptying events, so advance event by event.
  for (std::size_t guard = 0; guard <= 2 * d + 2 && remaining > 0; ++guard) {
    // Output of each station under the current occupancy pattern.
    std::vector<double> out(d), deriv(d);
    double inflow = 0.0;  // no external input while draining
    for (std::size_t i = 0; i < d; ++i) {
      out[i] = w[i] > 0 ? rates[i] : std::min(inflow, rates[i]);
      deriv[i] = inflow - out[i];
      inflow = out[i];
    }
    // Earliest emptying among draining stations.
    double dt = remaining;
    for (std::size_t i = 0; i < d; ++i)
      if (w[i] > 0 && deriv[i] < 0) dt = std::min(dt, w[i] / -deriv[i]);
    if (dt <= 0) break;
    bool any_positive = false;
    for (std::size_t i = 0; i < d; ++i) {
      if (w[i] > 0 || deriv[i] > 0) {
        w[i] += deriv[i] * dt;
        if (w[i] < 1e-15 * (1.0 + std::fabs(deriv[i]) * dt)) w[i] = 0.0;
      }
      any_positive = any_positive || w[i] > 0;
    }
    remaining -= dt;
    if (!any_positive) break;  // empty stays empty
  }
  return w;
}

RateCheckReport total_workload_rate_check(std::span<const double> rates,
                                          const std::vector<std::vector<double>>& x_samples,
                                          std::span<const double> t_grid, double tol) {
  RateCheckReport report;
  const double rstar = *std::min_element(rates.begin(), rates.end());
  for (std::size_t s = 0; s < x_samples.size(); ++s) {
    const auto& x = x_samples[s];
    const double total0 = std::accumulate(x.begin(), x.end(), 0.0);
    for (double t : t_grid) {
      const auto w = tandem_drain(rates, x, t);
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      const double expected = std::max(total0 - rstar * t, 0.0);
      const double err = std::fabs(total - expected);
      report.max_abs_error = std::max(report.max_abs_error, err);
      if (err > tol) {
        report.ok = false;
        report.violations.push_back({s, t, err});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Tree decomposition
// ---------------------------------------------------------------------------

std::vector<TandemFromTree> tree_decompose(const TreeSpec& tree, const DistributionSpec& Z,
                                           const DistributionSpec& T) {
  const int K = tree.K, L = tree.L;
  require(K >= 1 && L >= 1, "tree_decompose: K and L must be >= 1");
  // node count of a complete K-ary tree of depth L
  std::size_t n_nodes = 1, level = 1;
  for (int l = 0; l < L; ++l) {
    level *= static_cast<std::size_t>(K);
    n_nodes += level;
  }
  require(tree.rates.size() == n_nodes, "tree_decompose: rates must have one entry per node");
  const std::size_t n_internal = n_nodes - level;
  require(tree.routing.size() >= n_internal,
          "tree_decompose: routing must cover every internal node");
  for (std::size_t i = 0; i < n_internal; ++i) {
    require(tree.routing[i].size() == static_cast<std::size_t>(K),
            "tree_decompose: routing vectors must have K entries");
    double s = 0;
    for (double q : tree.routing[i]) {
      require(q >= 0, "tree_decompose: routing fractions must be nonnegative");
      s += q;
    }
    require(std::fabs(s - 1.0) <= 1e-9, "tree_decompose: routing vectors must sum to 1");
  }

  const double flow = Z.mean() / T.mean();
  require(std::isfinite(flow) && flow > 0, "tree_decompose: E Z / E T must be finite and positive");

  std::size_t n_paths = 1;
  for (int l = 0; l < L; ++l) n_paths *= static_cast<std::size_t>(K);
  require(n_paths <= 100000, "tree_decompose: too many leaf paths");

  std::vector<TandemFromTree> specs;
  specs.reserve(n_paths);
  std::vector<int> b(L, 1);  // path digits in 1..K
  for (std::size_t it = 0; it < n_paths; ++it) {
    // nodes a_0 = 0, a_{j+1} = a_j*K + b_{j+1}
    std::vector<int> nodes(L + 1);
    nodes[0] = 0;
    for (int j = 0; j < L; ++j) nodes[j + 1] = nodes[j] * K + b[j];
    // cumulative routing products prefix[l] = prod_{j=0}^{l-1} p_{a_j}(b_{j+1})
    std::vector<double> prefix(L + 1, 1.0);
    for (int j = 0; j < L; ++j)
      prefix[j + 1] = prefix[j] * tree.routing[static_cast<std::size_t>(nodes[j])][b[j] - 1];
    // stability along the path
    for (int l = 0; l <= L; ++l) {
      if (!(flow * prefix[l] < tree.rates[static_cast<std::size_t>(nodes[l])])) {
        std::ostringstream os;
        os << "tree_decompose: stability fails on path";
        for (int v : nodes) os << " " << v;
        os << " at node " << nodes[l];
        throw std::domain_error(os.str());
      }
    }
    TandemFromTree spec;
    spec.path = nodes;
    spec.input_scale = prefix[L];
    spec.rates.resize(L + 1);
    for (int l = 0; l <= L; ++l)
      spec.rates[l] = tree.rates[static_cast<std::size_t>(nodes[l])] * prefix[L] / prefix[l];
    specs.push_back(std::move(spec));
    // next path
    for (int j = L - 1; j >= 0; --j) {
      if (b[j] < K) {
        ++b[j];
        std::fill(b.begin() + j + 1, b.end(), 1);
        break;
      }
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Forward simulation
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> simulate_marginal(const ChainModel& model,
                                                   std::span<const double> x0, int n,
                                                   std::size_t reps, std::uint64_t seed) {
  if (static_cast<int>(x0.size()) != model.dim())
    throw std::invalid_argument("simulate_marginal: state dimension mismatch");
  std::vector<std::vector<double>> out(reps);
  for_each_chunk(reps, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> x(x0.size());
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      std::copy(x0.begin(), x0.end(), x.begin());
      for (int t = 0; t < n; ++t) model.step(x, rng);
      out[i] = x;
    }
  });
  return out;
}

std::vector<double> simulate_marginal1(const ChainModel& model, double x0, int n,
                                       std::size_t reps, std::uint64_t seed) {
  if (model.dim() != 1) throw std::invalid_argument("simulate_marginal1: model is not scalar");
  std::vector<double> out(reps);
  for_each_chunk(reps, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      double x[1] = {x0};
      for (int t = 0; t < n; ++t) model.step(x, rng);
      out[i] = x[0];
    }
  });
  return out;
}

std::vector<std::vector<double>> marginal_samples(const ChainModel& model, double x0,
                                                  const std::vector<int>& step_grid,
                                                  std::size_t reps, std::uint64_t seed) {
  if (model.dim() != 1) throw std::invalid_argument("marginal_samples: model is not scalar");
  if (step_grid.empty()) throw std::invalid_argument("marginal_samples: empty step grid");
  if (!std::is_sorted(step_grid.begin(), step_grid.end()) || step_grid.front() < 0)
    throw std::invalid_argument("marginal_samples: step grid must be ascending and nonnegative");
  const std::size_t g = step_grid.size();
  std::vector<std::vector<double>> out(g, std::vector<double>(reps));
  const int horizon = step_grid.back();
  for_each_chunk(reps, 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      double x[1] = {x0};
      std::size_t ptr = 0;
      while (ptr < g && step_grid[ptr] == 0) out[ptr++][i] = x[0];
      for (int t = 1; t <= horizon; ++t) {
        model.step(x, rng);
        while (ptr < g && step_grid[ptr] == t) out[ptr++][i] = x[0];
      }
    }
  });
  return out;
}

}  // namespace wassbound
