#include "wassbound/lyapunov.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wassbound {

namespace {
double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }
}

LyapunovSpec LyapunovSpec::poly_shift(double m, double M, double offset, double c) {
  if (!(m > 0)) throw std::invalid_argument("poly_shift: exponent must be positive");
  if (M < 0) throw std::invalid_argument("poly_shift: M must be nonnegative");
  return {Family::poly_shift, m, M, offset, c};
}
LyapunovSpec LyapunovSpec::wedge(double delta) {
  if (!(delta > 0)) throw std::invalid_argument("wedge: delta must be positive");
  return {Family::wedge, delta, 0, 0, 0};
}
LyapunovSpec LyapunovSpec::exp_sum(double a) {
  if (!(a > 0)) throw std::invalid_argument("exp_sum: a must be positive");
  return {Family::exp_sum, a, 0, 0, 0};
}
LyapunovSpec LyapunovSpec::constant(double value) {
  if (!(value > 0)) throw std::invalid_argument("constant: value must be positive");
  return {Family::constant, value, 0, 0, 0};
}

double LyapunovSpec::operator()(double x) const {
  switch (family_) {
    case Family::poly_shift:
      return std::pow(std::fabs(x + p1_), p0_) - p2_ + p3_;
    case Family::wedge:
      return p0_ * std::max(1.0 - std::fabs(x), 0.0) + 1.0;
    case Family::exp_sum:
      return std::exp(p0_ * x);
    case Family::constant:
      return p0_;
  }
  return 0;
}

double LyapunovSpec::eval(std::span<const double> x) const {
  if (family_ == Family::exp_sum) {
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    return std::exp(p0_ * s);
  }
  if (x.size() != 1) throw std::invalid_argument("scalar Lyapunov family applied to vector state");
  return (*this)(x[0]);
}

double LyapunovSpec::antiderivative(double x) const {
  switch (family_) {
    case Family::poly_shift: {
      const double u = x + p1_;
      return sgn(u) * std::pow(std::fabs(u), p0_ + 1.0) / (p0_ + 1.0) + (p3_ - p2_) * x;
    }
    case Family::wedge: {
      // integral of (1-|t|)^+ from 0 to x
      double w;
      if (std::fabs(x) <= 1.0)
        w = x - sgn(x) * 0.5 * x * x;
      else
        w = sgn(x) * 0.5;
      return x + p0_ * w;
    }
    case Family::exp_sum:
      throw std::invalid_argument("exp_sum has no scalar antiderivative (multi-dimensional family)");
    case Family::constant:
      return p0_ * x;
  }
  return 0;
}

double LyapunovSpec::min_on_grid(double lo, double hi, double step) const {
  double m = (*this)(lo);
  for (double x = lo; x <= hi; x += step) m = std::min(m, (*this)(x));
  return m;
}

double LyapunovSpec::param(const std::string& name) const {
  switch (family_) {
    case Family::poly_shift:
      if (name == "m") return p0_;
      if (name == "M") return p1_;
      if (name == "offset") return p2_;
      if (name == "c") return p3_;
      break;
    case Family::wedge:
      if (name == "delta") return p0_;
      break;
    case Family::exp_sum:
      if (name == "a") return p0_;
      break;
    case Family::constant:
      if (name == "value") return p0_;
      break;
  }
  throw std::invalid_argument("LyapunovSpec: no parameter named " + name);
}

std::string LyapunovSpec::describe() const {
  std::ostringstream os;
  switch (family_) {
    case Family::poly_shift:
      os << "|x+" << p1_ << "|^" << p0_;
      if (p2_ != 0) os << " - " << p2_;
      if (p3_ != 0) os << " + " << p3_;
      break;
    case Family::wedge:
      os << p0_ << "*(1-|x|)^+ + 1";
      break;
    case Family::exp_sum:
      os << "exp(" << p0_ << "*sum(x))";
      break;
    case Family::constant:
      os << p0_;
      break;
  }
  return os.str();
}

nlohmann::json LyapunovSpec::to_json() const {
  switch (family_) {
    case Family::poly_shift:
      return {{"family", "poly_shift"}, {"m", p0_}, {"M", p1_}, {"offset", p2_}, {"c", p3_}};
    case Family::wedge:
      return {{"family", "wedge"}, {"delta", p0_}};
    case Family::exp_sum:
      return {{"family", "exp_sum"}, {"a", p0_}};
    case Family::constant:
      return {{"family", "constant"}, {"value", p0_}};
  }
  return {};
}

LyapunovSpec LyapunovSpec::from_json(const nlohmann::json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "poly_shift")
    return poly_shift(j.at("m"), j.at("M"), j.value("offset", 0.0), j.value("c", 0.0));
  if (fam == "wedge") return wedge(j.at("delta"));
  if (fam == "exp_sum") return exp_sum(j.at("a"));
  if (fam == "constant") return constant(j.at("value"));
  throw std::invalid_argument("unknown Lyapunov family: " + fam);
}

}  // namespace wassbound
