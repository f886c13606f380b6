#include "wassbound/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace wassbound {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool is_integer(double x) { return x == std::floor(x) && std::fabs(x) < 1e9; }

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0x1.6a09e667f3bcdp-1); }  // 1/sqrt(2)

}  // namespace

DistributionSpec DistributionSpec::pareto(double shape, double scale) {
  require(shape > 0 && scale > 0, "pareto: shape and scale must be positive");
  return {Pareto{shape, scale}, 0.0};
}
DistributionSpec DistributionSpec::normal(double mean, double stdev) {
  require(stdev > 0, "normal: stdev must be positive");
  return {Normal{mean, stdev}, 0.0};
}
DistributionSpec DistributionSpec::exponential(double rate) {
  require(rate > 0, "exponential: rate must be positive");
  return {Exponential{rate}, 0.0};
}
DistributionSpec DistributionSpec::two_point(double a, double b, double p) {
  require(p >= 0 && p <= 1, "two_point: p must lie in [0,1]");
  return {TwoPoint{a, b, p}, 0.0};
}
DistributionSpec DistributionSpec::laplace(double scale) {
  require(scale > 0, "laplace: scale must be positive");
  return {Laplace{scale}, 0.0};
}
DistributionSpec DistributionSpec::deterministic(double value) { return {Deterministic{value}, 0.0}; }

DistributionSpec DistributionSpec::shifted(const DistributionSpec& base, double offset) {
  DistributionSpec s = base;  // offsets fold, keeping composition one level deep
  s.offset_ += offset;
  return s;
}

bool DistributionSpec::is_atomic() const {
  return std::holds_alternative<TwoPoint>(params_) || std::holds_alternative<Deterministic>(params_);
}

double DistributionSpec::sample(Rng& rng) const {
  const double off = offset_;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          return off + p.scale * std::pow(rng.uniform(), -1.0 / p.shape);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return off + p.mean + p.stdev * rng.normal();
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return off + rng.exponential() / p.rate;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return off + (rng.uniform() <= p.p ? p.a : p.b);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          const double u = rng.uniform();
          return off + (u < 0.5 ? p.scale * std::log(2.0 * u) : -p.scale * std::log(2.0 * (1.0 - u)));
        } else {
          return off + p.value;
        }
      },
      params_);
}

double DistributionSpec::mean() const {
  const double off = offset_;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          if (p.shape <= 1) return kInf;
          return off + p.shape * p.scale / (p.shape - 1);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return off + p.mean;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return off + 1.0 / p.rate;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return off + p.p * p.a + (1 - p.p) * p.b;
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return off;
        } else {
          return off + p.value;
        }
      },
      params_);
}

double DistributionSpec::variance() const {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          if (p.shape <= 2) return kInf;
          const double m = p.shape * p.scale / (p.shape - 1);
          return p.shape * p.scale * p.scale / (p.shape - 2) - m * m;
        } else if constexpr (std::is_same_v<T, Normal>) {
          return p.stdev * p.stdev;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return 1.0 / (p.rate * p.rate);
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          const double m = p.p * p.a + (1 - p.p) * p.b;
          return p.p * (p.a - m) * (p.a - m) + (1 - p.p) * (p.b - m) * (p.b - m);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return 2.0 * p.scale * p.scale;
        } else {
          return 0.0;
        }
      },
      params_);
}

double DistributionSpec::cdf(double z) const {
  const double t = z - offset_;  // P(base < t)
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          if (t <= p.scale) return 0.0;
          return 1.0 - std::pow(p.scale / t, p.shape);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return norm_cdf((t - p.mean) / p.stdev);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return t <= 0 ? 0.0 : -std::expm1(-p.rate * t);
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return (p.a < t ? p.p : 0.0) + (p.b < t ? 1.0 - p.p : 0.0);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return t < 0 ? 0.5 * std::exp(t / p.scale) : 1.0 - 0.5 * std::exp(-t / p.scale);
        } else {
          return p.value < t ? 1.0 : 0.0;
        }
      },
      params_);
}

double DistributionSpec::mgf(double a) const {
  if (a == 0.0) return 1.0;
  const double shift = std::exp(a * offset_);
  const double base = std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          if (a > 0) return kInf;
          auto f = [&](double w) {
            return std::exp(a * w) * p.shape * std::pow(p.scale, p.shape) * std::pow(w, -p.shape - 1);
          };
          return detail::integrate(f, p.scale, kInf).value;
        } else if constexpr (std::is_same_v<T, Normal>) {
          return std::exp(a * p.mean + 0.5 * a * a * p.stdev * p.stdev);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          if (a >= p.rate) return kInf;
          return p.rate / (p.rate - a);
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return p.p * std::exp(a * p.a) + (1 - p.p) * std::exp(a * p.b);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          if (std::fabs(a) >= 1.0 / p.scale) return kInf;
          const double as = a * p.scale;
          return 1.0 / (1.0 - as * as);
        } else {
          return std::exp(a * p.value);
        }
      },
      params_);
  return shift * base;
}

double DistributionSpec::mgf_strip_upper() const {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return p.rate;
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return 1.0 / p.scale;
        } else {
          return kInf;
        }
      },
      params_);
}

double DistributionSpec::support_lower() const {
  const double off = offset_;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>) {
          return off + p.scale;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return off;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return off + std::min(p.a, p.b);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return off + p.value;
        } else {
          return -kInf;
        }
      },
      params_);
}

double DistributionSpec::support_upper() const {
  const double off = offset_;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TwoPoint>) {
          return off + std::max(p.a, p.b);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return off + p.value;
        } else {
          return kInf;
        }
      },
      params_);
}

std::string DistributionSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>)
          os << "pareto(" << p.shape << "," << p.scale << ")";
        else if constexpr (std::is_same_v<T, Normal>)
          os << "normal(" << p.mean << "," << p.stdev << ")";
        else if constexpr (std::is_same_v<T, Exponential>)
          os << "exponential(" << p.rate << ")";
        else if constexpr (std::is_same_v<T, TwoPoint>)
          os << "two_point(" << p.a << "," << p.b << "," << p.p << ")";
        else if constexpr (std::is_same_v<T, Laplace>)
          os << "laplace(" << p.scale << ")";
        else
          os << "deterministic(" << p.value << ")";
      },
      params_);
  if (offset_ != 0.0) os << (offset_ > 0 ? "+" : "") << offset_;
  return os.str();
}

nlohmann::json DistributionSpec::to_json() const {
  nlohmann::json base = std::visit(
      [&](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Pareto>)
          return {{"kind", "pareto"}, {"shape", p.shape}, {"scale", p.scale}};
        else if constexpr (std::is_same_v<T, Normal>)
          return {{"kind", "normal"}, {"mean", p.mean}, {"stdev", p.stdev}};
        else if constexpr (std::is_same_v<T, Exponential>)
          return {{"kind", "exponential"}, {"rate", p.rate}};
        else if constexpr (std::is_same_v<T, TwoPoint>)
          return {{"kind", "two_point"}, {"a", p.a}, {"b", p.b}, {"p", p.p}};
        else if constexpr (std::is_same_v<T, Laplace>)
          return {{"kind", "laplace"}, {"scale", p.scale}};
        else
          return {{"kind", "deterministic"}, {"value", p.value}};
      },
      params_);
  if (offset_ == 0.0) return base;
  return {{"kind", "shifted"}, {"offset", offset_}, {"base", base}};
}

DistributionSpec DistributionSpec::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pareto") return pareto(j.at("shape"), j.at("scale"));
  if (kind == "normal") return normal(j.at("mean"), j.at("stdev"));
  if (kind == "exponential") return exponential(j.at("rate"));
  if (kind == "two_point") return two_point(j.at("a"), j.at("b"), j.at("p"));
  if (kind == "laplace") return laplace(j.at("scale"));
  if (kind == "deterministic") return deterministic(j.at("value"));
  if (kind == "shifted") {
    const auto& base = j.at("base");
    require(base.at("kind").get<std::string>() != "shifted",
            "shifted: base must not itself be shifted");
    return shifted(from_json(base), j.at("offset"));
  }
  throw std::invalid_argument("unknown distribution kind: " + kind);
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

namespace {

double flavored(double z, double k, MomentFlavor f) {
  switch (f) {
    case MomentFlavor::raw:
      if (z >= 0 || is_integer(k)) return std::pow(z, k);
      throw std::domain_error("raw moment of non-integer order requires nonnegative support");
    case MomentFlavor::absolute:
      return std::pow(std::fabs(z), k);
    case MomentFlavor::positive_part:
      return z > 0 ? std::pow(z, k) : 0.0;
  }
  return 0.0;
}

double density(const DistributionSpec::Params& p, double x) {
  return std::visit(
      [&](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, DistributionSpec::Pareto>) {
          if (x < q.scale) return 0.0;
          return q.shape * std::pow(q.scale, q.shape) * std::pow(x, -q.shape - 1);
        } else if constexpr (std::is_same_v<T, DistributionSpec::Normal>) {
          const double z = (x - q.mean) / q.stdev;
          return std::exp(-0.5 * z * z) / (q.stdev * 2.5066282746310002);
        } else if constexpr (std::is_same_v<T, DistributionSpec::Exponential>) {
          return x < 0 ? 0.0 : q.rate * std::exp(-q.rate * x);
        } else if constexpr (std::is_same_v<T, DistributionSpec::Laplace>) {
          return std::exp(-std::fabs(x) / q.scale) / (2.0 * q.scale);
        } else {
          return 0.0;  // atoms handled separately
        }
      },
      p);
}

// E W^j 1{W > t} for Pareto(shape, scale), t >= scale, j < shape.
double pareto_tail_moment(const DistributionSpec::Pareto& p, int j, double t) {
  return p.shape * std::pow(p.scale, p.shape) * std::pow(t, j - p.shape) / (p.shape - j);
}

}  // namespace

ExpectationResult expect(const DistributionSpec& spec, const std::function<double(double)>& g) {
  ExpectationResult res;
  const double off = spec.offset();
  if (auto* tp = std::get_if<DistributionSpec::TwoPoint>(&spec.params())) {
    res.value = tp->p * g(tp->a + off) + (1 - tp->p) * g(tp->b + off);
    return res;
  }
  if (auto* d = std::get_if<DistributionSpec::Deterministic>(&spec.params())) {
    res.value = g(d->value + off);
    return res;
  }
  const double lo = spec.support_lower();
  auto f = [&](double x) { return g(x + off) * density(spec.params(), x); };
  auto q = detail::integrate(f, std::isfinite(lo) ? lo - off : -kInf, kInf);
  if (q.converged) {
    res.value = q.value;
    return res;
  }
  // Quadrature did not converge; flagged Monte Carlo fallback.
  res.monte_carlo_fallback = true;
  Rng rng(0x5eedfa11u);
  const std::size_t n = 1'000'000;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += g(spec.sample(rng));
  res.value = sum / static_cast<double>(n);
  return res;
}

double moment(const DistributionSpec& spec, double order, MomentFlavor flavor) {
  if (!(order > 0)) throw std::invalid_argument("moment: order must be positive");
  const double k = order;
  const double off = spec.offset();

  if (spec.is_atomic()) {
    return expect(spec, [&](double z) { return flavored(z, k, flavor); }).value;
  }

  if (auto* p = std::get_if<DistributionSpec::Pareto>(&spec.params())) {
    if (k >= p->shape) return kInf;  // power tail dominates every flavor
    const double t0 = p->scale + off;  // support lower end of shifted variable
    if (off == 0.0) return p->shape * std::pow(p->scale, k) / (p->shape - k);
    if (is_integer(k)) {
      const int ki = static_cast<int>(k);
      // raw: binomial over unshifted moments
      double raw = 0;
      for (int j = 0; j <= ki; ++j)
        raw += binom(ki, j) * std::pow(off, ki - j) * p->shape * std::pow(p->scale, j) /
               (p->shape - j);
      if (flavor == MomentFlavor::raw) return raw;
      if (t0 >= 0) return raw;  // entire support nonnegative
      const double tstar = -off;  // W > tstar  <=>  W + off > 0
      double pos = 0, neg = 0;
      for (int j = 0; j <= ki; ++j) {
        const double cj = binom(ki, j) * std::pow(off, ki - j);
        const double tail = pareto_tail_moment(*p, j, tstar);
        const double full = p->shape * std::pow(p->scale, j) / (p->shape - j);
        pos += cj * tail;
        neg += cj * (full - tail);
      }
      neg *= std::pow(-1.0, ki);  // E((-(W+off))^+)^k over {W < tstar}
      if (flavor == MomentFlavor::positive_part) return pos;
      return pos + neg;  // absolute
    }
    // non-integer order with a shift: quadrature
  }

  if (auto* e = std::get_if<DistributionSpec::Exponential>(&spec.params())) {
    if (off == 0.0) return std::tgamma(k + 1.0) / std::pow(e->rate, k);
  }

  auto r = expect(spec, [&](double z) { return flavored(z, k, flavor); });
  return r.value;
}

ResidualBound residual_lower_bound(const DistributionSpec& spec, const std::vector<double>& y_grid) {
  if (std::isfinite(spec.support_lower()))
    throw std::domain_error(
        "residual_lower_bound: support bounded below; condition (minus_b) is not needed");
  if (std::fabs(spec.mean()) > 1e-9)
    throw std::domain_error("residual_lower_bound: requires a centered law (E Y = 0)");

  std::vector<double> grid = y_grid;
  double lo = -1.0, hi = 50.0, step = 0.01;
  if (grid.empty()) {
    for (double y = lo; y <= hi + 1e-12; y += step) grid.push_back(y);
  } else {
    lo = grid.front();
    hi = grid.back();
    step = grid.size() > 1 ? grid[1] - grid[0] : 0.0;
  }

  auto cond_mean = [&](double y) -> double {
    // E[(Y + y) 1{Y <= -y}] / P(Y <= -y); continuous laws only reach here.
    const double den = spec.cdf(-y);
    if (den <= 0) return 0.0;
    const double off = spec.offset();
    auto f = [&](double x) { return (x + off + y) * density(spec.params(), x); };
    const double num = detail::integrate(f, -kInf, -y - off, 1e-12).value;
    return num / den;
  };

  double best = 0.0, arg = grid.front();
  std::vector<double> vals;
  vals.reserve(grid.size());
  for (double y : grid) {
    const double m = cond_mean(y);
    vals.push_back(m);
    if (m < best) {
      best = m;
      arg = y;
    }
  }

  // Tail check at the cutoff: the conditional mean must not still be heading
  // down, otherwise the infimum over [-1, inf) is not certified by the grid.
  const std::size_t n = vals.size();
  if (n >= 10) {
    const double tail_drop = vals[n - 1] - vals[n - 1 - n / 10];
    if (tail_drop < -1e-6)
      throw std::domain_error(
          "residual_lower_bound: conditional mean still decreasing at the grid cutoff; "
          "condition (minus_b) not certified");
  }

  ResidualBound rb;
  rb.b = std::max(0.0, -best);
  rb.minimizer = arg;
  rb.grid_lo = lo;
  rb.grid_hi = hi;
  rb.grid_step = step;
  std::ostringstream note;
  note << "grid cutoff y_max=" << hi << "; conditional mean at cutoff " << vals.back();
  if (std::holds_alternative<DistributionSpec::Laplace>(spec.params()))
    note << "; laplace lower tail is memoryless, E[Y+y|Y+y<=0] = -scale for all y >= 0";
  if (std::holds_alternative<DistributionSpec::Normal>(spec.params()))
    note << "; gaussian conditional mean y - phi(y)/Phi(-y) increases to 0 (Mills ratio)";
  rb.tail_note = note.str();
  return rb;
}

}  // namespace wassbound
