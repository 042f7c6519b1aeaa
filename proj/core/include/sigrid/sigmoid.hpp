#pragma once

#include <span>
#include <string>

#include "sigrid/errors.hpp"

namespace sigrid {

// Two sigmoid families: the globally supported logistic and a compactly
// supported smoothed ramp (cubic, rising 0 -> 1 on [-3, 3], exact 0/1
// outside). The ramp yields banded operator matrices, the logistic dense
// ones.
enum class SigmoidKind { logistic, smoothed_ramp };

SigmoidKind parse_sigmoid_kind(const std::string& name);
std::string to_string(SigmoidKind kind);

// Sigmoid in the limit sense (0 at -inf, 1 at +inf); the steepness w enters
// as sigma_w(x) = sigma(w*x).
struct SigmoidSpec {
  SigmoidKind kind = SigmoidKind::logistic;
  double steepness = 1.0;

  void validate() const;
};

double sigma_eval(const SigmoidSpec& spec, double x);

// phi(x) = (sigma_w(x+1) - sigma_w(x-1)) / 2. Nonnegative, even.
double phi_eval(const SigmoidSpec& spec, double x);

// Tensor-product density: product of phi over the coordinates of x.
double psi_eval(const SigmoidSpec& spec, std::span<const double> x);

// |x| beyond this bound has phi(x) == 0 (ramp) or below 1e-300 (logistic);
// evaluation windows use it to skip dead terms.
double phi_support_halfwidth(const SigmoidSpec& spec);

}  // namespace sigrid
