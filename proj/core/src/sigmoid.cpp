#include "sigrid/sigmoid.hpp"

#include <algorithm>
#include <cmath>

namespace sigrid {

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Cubic smoothstep stretched onto [-3, 3]; monotone, centrally symmetric.
double smoothed_ramp(double x) {
  if (x <= -3.0) return 0.0;
  if (x >= 3.0) return 1.0;
  double t = (x + 3.0) / 6.0;
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

SigmoidKind parse_sigmoid_kind(const std::string& name) {
  if (name == "logistic") return SigmoidKind::logistic;
  if (name == "ramp" || name == "smoothed_ramp") return SigmoidKind::smoothed_ramp;
  throw DomainError("unknown sigmoid kind: " + name);
}

std::string to_string(SigmoidKind kind) {
  return kind == SigmoidKind::logistic ? "logistic" : "smoothed_ramp";
}

void SigmoidSpec::validate() const {
  if (!(steepness > 0.0) || !std::isfinite(steepness))
    throw DomainError("sigmoid steepness must be positive and finite");
}

double sigma_eval(const SigmoidSpec& spec, double x) {
  double t = spec.steepness * x;
  return spec.kind == SigmoidKind::logistic ? logistic(t) : smoothed_ramp(t);
}

double phi_eval(const SigmoidSpec& spec, double x) {
  double d = sigma_eval(spec, x + 1.0) - sigma_eval(spec, x - 1.0);
  return d > 0.0 ? 0.5 * d : 0.0;
}

double psi_eval(const SigmoidSpec& spec, std::span<const double> x) {
  if (x.empty()) throw DomainError("psi_eval: dimension must be at least 1");
  double p = 1.0;
  for (double xi : x) p *= phi_eval(spec, xi);
  return p;
}

double phi_support_halfwidth(const SigmoidSpec& spec) {
  if (spec.kind == SigmoidKind::smoothed_ramp) return 1.0 + 3.0 / spec.steepness;
  // 0.5*exp(-w*(|x|-1)) drops below 1e-300 once w*(|x|-1) > 745.
  return 1.0 + 745.0 / spec.steepness;
}

}  // namespace sigrid
