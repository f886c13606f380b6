#include "wassbound/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wassbound/parallel.hpp"

namespace wassbound {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct MeanVar {
  double mean = 0.0, se = 0.0;
};

MeanVar mean_se(double sum, double sumsq, std::size_t n) {
  MeanVar r;
  r.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sumsq - sum * r.mean) / static_cast<double>(n - 1));
    r.se = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

double l1_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

void format_double(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void Curve::write_csv(std::ostream& os) const {
  os << "n,value,stderr\n";
  for (const auto& p : points) {
    format_double(os, p.n);
    os << ',';
    format_double(os, p.value);
    os << ',';
    format_double(os, p.se);
    os << '\n';
  }
}

std::string Curve::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

double dv_interval(const LyapunovSpec& V, double x, double y) {
  if (!V.scalar())
    throw std::invalid_argument("dv_interval: exp_sum is multi-dimensional; no interval d_V");
  const double lo = std::min(x, y), hi = std::max(x, y);
  return V.antiderivative(hi) - V.antiderivative(lo);
}

Estimate e_dv_one_step(const ChainModel& model, double x0, const LyapunovSpec& V,
                       std::size_t reps, std::uint64_t seed) {
  if (model.dim() != 1) throw std::invalid_argument("e_dv_one_step: model is not scalar");

  const std::string kind = model.kind_name();
  const bool lindley = kind == "gg1" || kind == "gg1_ht";
  if (lindley && x0 == 0.0 && V.family() == LyapunovSpec::Family::poly_shift) {
    const double m = V.param("m");
    if (m == std::floor(m)) {
      // X1 = Z^+ >= x0 = 0, so E d_V = E[A(Z^+) - A(0)] expands binomially in
      // the positive-part moments of the increment.
      const DistributionSpec Z = model.increment_law();
      const int mi = static_cast<int>(m);
      const double M = V.param("M");
      const double cc = V.param("c") - V.param("offset");
      double val = 0.0;
      for (int k = 1; k <= mi + 1; ++k)
        val += binom(mi + 1, k) * std::pow(M, mi + 1 - k) *
               moment(Z, k, MomentFlavor::positive_part);
      val /= (mi + 1);
      val += cc * moment(Z, 1, MomentFlavor::positive_part);
      if (std::isfinite(val)) return {val, 0.0, true};
    }
  }

  std::vector<double> sums, sumsqs;
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  sums.assign(n_chunks, 0.0);
  sumsqs.assign(n_chunks, 0.0);
  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    double s = 0, s2 = 0;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      const auto [x1, lip] = model.step1(x0, rng);
      (void)lip;
      const double d = dv_interval(V, x0, x1);
      s += d;
      s2 += d * d;
    }
    sums[c] = s;
    sumsqs[c] = s2;
  });
  const double sum = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double sumsq = std::accumulate(sumsqs.begin(), sumsqs.end(), 0.0);
  const auto mv = mean_se(sum, sumsq, reps);
  return {mv.mean, mv.se, false};
}

double w1_empirical(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_empirical: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  if (na == nb) {
    double s = 0;
    for (std::size_t i = 0; i < na; ++i) s += std::fabs(sa[i] - sb[i]);
    return s / static_cast<double>(na);
  }
  // Integrate |F_a^{-1} - F_b^{-1}| over the merged quantile grid. Breakpoint
  // comparisons i/na vs j/nb are done in exact integer arithmetic.
  double w = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < na && j < nb) {
    const unsigned long long lhs = static_cast<unsigned long long>(i + 1) * nb;
    const unsigned long long rhs = static_cast<unsigned long long>(j + 1) * na;
    const double next =
        lhs <= rhs ? static_cast<double>(i + 1) / na : static_cast<double>(j + 1) / nb;
    w += (next - prev) * std::fabs(sa[i] - sb[j]);
    prev = next;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return w;
}

double w1_discrete_exact(const DiscreteDist& p, const DiscreteDist& q) {
  if (p.xs.size() != p.ps.size() || q.xs.size() != q.ps.size())
    throw std::invalid_argument("w1_discrete_exact: support/weight size mismatch");
  if (p.xs.empty() || q.xs.empty()) throw std::invalid_argument("w1_discrete_exact: empty law");
  auto normalize = [](const DiscreteDist& d) {
    std::vector<std::pair<double, double>> pts;
    double tot = 0;
    for (std::size_t i = 0; i < d.xs.size(); ++i) {
      if (d.ps[i] < 0) throw std::invalid_argument("w1_discrete_exact: negative weight");
      pts.emplace_back(d.xs[i], d.ps[i]);
      tot += d.ps[i];
    }
    if (std::fabs(tot - 1.0) > 1e-9)
      throw std::invalid_argument("w1_discrete_exact: weights must sum to 1");
    std::sort(pts.begin(), pts.end());
    for (auto& pt : pts) pt.second /= tot;
    return pts;
  };
  const auto pp = normalize(p);
  const auto qq = normalize(q);

  std::vector<double> support;
  support.reserve(pp.size() + qq.size());
  for (const auto& pt : pp) support.push_back(pt.first);
  for (const auto& pt : qq) support.push_back(pt.first);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  double w = 0.0, Fp = 0.0, Fq = 0.0;
  std::size_t ip = 0, iq = 0;
  for (std::size_t k = 0; k + 1 < support.size(); ++k) {
    while (ip < pp.size() && pp[ip].first <= support[k]) Fp += pp[ip++].second;
    while (iq < qq.size() && qq[iq].first <= support[k]) Fq += qq[iq++].second;
    w += std::fabs(Fp - Fq) * (support[k + 1] - support[k]);
  }
  return w;
}

Curve backward_distance_curve(const ChainModel& model, std::span<const double> x0, int horizon,
                              std::size_t reps, std::uint64_t seed,
                              const std::vector<int>& n_grid) {
  if (horizon < 0) throw std::invalid_argument("backward_distance_curve: horizon must be >= 0");
  std::vector<int> grid = n_grid;
  if (grid.empty()) {
    grid.resize(static_cast<std::size_t>(horizon) + 1);
    std::iota(grid.begin(), grid.end(), 0);
  }
  for (int n : grid)
    if (n < 0 || n > horizon)
      throw std::invalid_argument("backward_distance_curve: grid point outside [0, horizon]");

  const std::size_t g = grid.size();
  const std::size_t chunk = 256;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  std::vector<std::vector<double>> sums(n_chunks, std::vector<double>(g, 0.0));
  std::vector<std::vector<double>> sumsqs(n_chunks, std::vector<double>(g, 0.0));

  const std::size_t d = x0.size();
  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<StepNoise> noises(static_cast<std::size_t>(horizon));
    std::vector<double> xn(d), xN(d);
    for (std::size_t rep = begin; rep < end; ++rep) {
      Rng rng(mix_seed(seed, rep));
      for (auto& nz : noises) nz = model.draw_noise(rng);
      // Xbar_n = f_1(...f_n(x0)): innermost mapping first.
      auto backward = [&](int n, std::span<double> out) {
        std::copy(x0.begin(), x0.end(), out.begin());
        for (int k = n - 1; k >= 0; --k) model.apply(out, noises[static_cast<std::size_t>(k)]);
      };
      backward(horizon, xN);
      for (std::size_t gi = 0; gi < g; ++gi) {
        backward(grid[gi], xn);
        const double dist = l1_dist(xn, xN);
        sums[c][gi] += dist;
        sumsqs[c][gi] += dist * dist;
      }
    }
  });

  Curve curve;
  curve.points.resize(g);
  for (std::size_t gi = 0; gi < g; ++gi) {
    double s = 0, s2 = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      s += sums[c][gi];
      s2 += sumsqs[c][gi];
    }
    const auto mv = mean_se(s, s2, reps);
    curve.points[gi] = {static_cast<double>(grid[gi]), mv.mean, mv.se};
  }
  return curve;
}

namespace {

void check_lindley(const ChainModel& model, const char* who) {
  const auto kind = model.kind_name();
  if (kind != "gg1" && kind != "gg1_ht")
    throw std::invalid_argument(std::string(who) +
                                ": requires a G/G/1 Lindley recursion (gg1 or gg1_ht)");
}

}  // namespace

Curve gg1_monotone_w1_curve(const ChainModel& model, const std::vector<int>& n_grid, int horizon,
                            std::size_t reps, std::uint64_t seed, bool* plateau_warning) {
  check_lindley(model, "gg1_monotone_w1");
  for (int n : n_grid)
    if (n < 0 || n > horizon)
      throw std::invalid_argument("gg1_monotone_w1: n outside [0, horizon]");

  std::vector<int> grid = n_grid;
  const int checkpoint = horizon - horizon / 10;  // plateau test marker
  const std::size_t g = grid.size();

  // record times in ascending order, keeping the caller's grid order for output
  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });

  const std::size_t chunk = 64;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  std::vector<std::vector<double>> sums(n_chunks, std::vector<double>(g + 2, 0.0));
  std::vector<std::vector<double>> sumsqs(n_chunks, std::vector<double>(g + 2, 0.0));

  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> at_n(g);
    for (std::size_t rep = begin; rep < end; ++rep) {
      Rng rng(mix_seed(seed, rep));
      double x[1] = {0.0};
      double at_checkpoint = 0.0;
      std::size_t ptr = 0;
      while (ptr < g && grid[order[ptr]] == 0) at_n[order[ptr++]] = 0.0;
      for (int t = 1; t <= horizon; ++t) {
        model.step(x, rng);
        while (ptr < g && grid[order[ptr]] == t) at_n[order[ptr++]] = x[0];
        if (t == checkpoint) at_checkpoint = x[0];
      }
      for (std::size_t gi = 0; gi < g; ++gi) {
        const double gap = x[0] - at_n[gi];  // shared increments
        sums[c][gi] += gap;
        sumsqs[c][gi] += gap * gap;
      }
      sums[c][g] += x[0];
      sumsqs[c][g] += x[0] * x[0];
      sums[c][g + 1] += at_checkpoint;
      sumsqs[c][g + 1] += at_checkpoint * at_checkpoint;
    }
  });

  Curve curve;
  curve.points.resize(g);
  std::vector<double> s(g + 2, 0.0), s2(g + 2, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t k = 0; k < g + 2; ++k) {
      s[k] += sums[c][k];
      s2[k] += sumsqs[c][k];
    }
  for (std::size_t gi = 0; gi < g; ++gi) {
    const auto mv = mean_se(s[gi], s2[gi], reps);
    curve.points[gi] = {static_cast<double>(grid[gi]), mv.mean, mv.se};
  }
  const auto end_mv = mean_se(s[g], s2[g], reps);
  const auto mid_mv = mean_se(s[g + 1], s2[g + 1], reps);
  if (plateau_warning)
    *plateau_warning = std::fabs(end_mv.mean - mid_mv.mean) > std::max(end_mv.se, 1e-300);
  return curve;
}

GapEstimate gg1_monotone_w1(const ChainModel& model, int n, int horizon, std::size_t reps,
                            std::uint64_t seed) {
  bool warn = false;
  const Curve c = gg1_monotone_w1_curve(model, {n}, horizon, reps, seed, &warn);
  return {c.points[0].value, c.points[0].se, warn};
}

Curve spitzer_w1_curve(const ChainModel& model, const std::vector<int>& n_grid, int k_max,
                       std::size_t reps, std::uint64_t seed,
                       std::vector<bool>* truncation_flags) {
  check_lindley(model, "spitzer_w1");
  const DistributionSpec inc = model.increment_law();
  if (!(inc.mean() < 0)) throw std::invalid_argument("spitzer_w1: increments must have negative mean");
  for (int n : n_grid)
    if (n < 0 || n >= k_max) throw std::invalid_argument("spitzer_w1: need 0 <= n < k_max");

  const std::size_t g = n_grid.size();
  const std::size_t chunk = 256;
  const std::size_t n_chunks = (reps + chunk - 1) / chunk;
  // per-grid partial sums plus the last term E S_{kmax}^+ / kmax
  std::vector<std::vector<double>> sums(n_chunks, std::vector<double>(g + 1, 0.0));
  std::vector<std::vector<double>> sumsqs(n_chunks, std::vector<double>(g + 1, 0.0));

  for_each_chunk(reps, chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> terms(static_cast<std::size_t>(k_max) + 1, 0.0);
    std::vector<double> suffix_at(g, 0.0);
    for (std::size_t rep = begin; rep < end; ++rep) {
      Rng rng(mix_seed(seed, rep));
      double s = 0.0;
      for (int k = 1; k <= k_max; ++k) {
        s += inc.sample(rng);
        terms[static_cast<std::size_t>(k)] = s > 0 ? s / k : 0.0;
      }
      // suffix sums: value(n) = sum_{k=n+1}^{k_max} terms[k]
      double suffix = 0.0;
      std::fill(suffix_at.begin(), suffix_at.end(), 0.0);
      for (int k = k_max; k >= 1; --k) {
        suffix += terms[static_cast<std::size_t>(k)];
        for (std::size_t gi = 0; gi < g; ++gi)
          if (n_grid[gi] == k - 1) suffix_at[gi] = suffix;
      }
      for (std::size_t gi = 0; gi < g; ++gi) {
        sums[c][gi] += suffix_at[gi];
        sumsqs[c][gi] += suffix_at[gi] * suffix_at[gi];
      }
      const double last = terms[static_cast<std::size_t>(k_max)];
      sums[c][g] += last;
      sumsqs[c][g] += last * last;
    }
  });

  Curve curve;
  curve.points.resize(g);
  if (truncation_flags) truncation_flags->assign(g, false);
  std::vector<double> s(g + 1, 0.0), s2(g + 1, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t k = 0; k <= g; ++k) {
      s[k] += sums[c][k];
      s2[k] += sumsqs[c][k];
    }
  const double last_term = s[g] / static_cast<double>(reps);
  for (std::size_t gi = 0; gi < g; ++gi) {
    const auto mv = mean_se(s[gi], s2[gi], reps);
    curve.points[gi] = {static_cast<double>(n_grid[gi]), mv.mean, mv.se};
    if (truncation_flags)
      (*truncation_flags)[gi] = mv.mean > 0 && last_term > 1e-3 * mv.mean;
  }
  return curve;
}

SpitzerEstimate spitzer_w1(const ChainModel& model, int n, int k_max, std::size_t reps,
                           std::uint64_t seed) {
  std::vector<bool> flags;
  const Curve c = spitzer_w1_curve(model, {n}, k_max, reps, seed, &flags);
  return {c.points[0].value, c.points[0].se, flags[0]};
}

}  // namespace wassbound
