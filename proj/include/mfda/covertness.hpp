#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfda {

/// Received-power variances at one warden: lambda0 under H0 (noise only),
/// lambda1 under H1 (signal plus noise).
template <typename Scalar = double>
struct DetectionStats {
  Scalar lambda0_w;
  Scalar lambda1_w;

  static DetectionStats from_signal(Scalar noise_w, Scalar signal_w) { return {noise_w, noise_w + signal_w}; }
};

/// y(x) = ln(x) + 1/x - 1, increasing on x >= 1.
template <typename Scalar>
Scalar y_function(Scalar x) {
  return std::log(x) + Scalar(1) / x - Scalar(1);
}

/// y(1 + d) evaluated without cancellation for small d >= 0.
template <typename Scalar>
Scalar y_function_offset(Scalar d) {
  return std::log1p(d) - d / (Scalar(1) + d);
}

/// D(p0 || p1) for zero-mean circular Gaussians with variances lambda0, lambda1.
template <typename Scalar>
Scalar kl_divergence(const DetectionStats<Scalar>& s) {
  if (!(s.lambda0_w > Scalar(0)) || !(s.lambda1_w > Scalar(0)))
    throw std::domain_error("kl_divergence: variances must be positive");
  // ln(l1/l0) + l0/l1 - 1 = y(l1/l0), written in the offset form.
  return y_function_offset((s.lambda1_w - s.lambda0_w) / s.lambda0_w);
}

/// Pinsker lower bound on the warden's detection error probability,
/// max(0, 1 - sqrt(D / 2)).
template <typename Scalar>
Scalar dep_lower_bound(const DetectionStats<Scalar>& s) {
  const Scalar d = kl_divergence(s);
  return std::max(Scalar(0), Scalar(1) - std::sqrt(std::max(Scalar(0), d) / Scalar(2)));
}

/// The d >= 0 with y(1 + d) = target. Safeguarded Newton on a bracket that is
/// doubled until it contains the root; bisection whenever Newton leaves it.
template <typename Scalar>
Scalar y_inverse_offset(Scalar target) {
  if (!(target >= Scalar(0))) throw std::domain_error("y_inverse: target must be non-negative");
  if (target == Scalar(0)) return Scalar(0);
  Scalar lo = Scalar(0);
  Scalar hi = Scalar(1);
  while (y_function_offset(hi) < target) {
    lo = hi;
    hi *= Scalar(2);
  }
  // y(1 + d) ~ d^2 / 2 near zero.
  Scalar d = std::clamp(std::sqrt(Scalar(2) * target), lo, hi);
  for (int it = 0; it < 200; ++it) {
    const Scalar f = y_function_offset(d) - target;
    if (f == Scalar(0)) return d;
    if (f < Scalar(0))
      lo = d;
    else
      hi = d;
    const Scalar x = Scalar(1) + d;
    const Scalar slope = d / (x * x);
    Scalar next = slope > Scalar(0) ? d - f / slope : (lo + hi) / Scalar(2);
    if (!(next > lo && next < hi)) next = (lo + hi) / Scalar(2);
    if (std::abs(next - d) <= std::numeric_limits<Scalar>::epsilon() * d * Scalar(4)) return next;
    d = next;
    if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * hi * Scalar(4)) return (lo + hi) / Scalar(2);
  }
  return d;
}

/// The x >= 1 with ln(x) + 1/x - 1 = target.
template <typename Scalar>
Scalar y_inverse(Scalar target) {
  return Scalar(1) + y_inverse_offset(target);
}

/// Largest |h_w w|^2 with D <= 2 eps^2: sigma^2 (y^-1(2 eps^2) - 1).
template <typename Scalar>
Scalar covert_power_threshold(Scalar noise_w, Scalar epsilon) {
  if (!(noise_w > Scalar(0))) throw std::domain_error("covert_power_threshold: noise must be positive");
  if (!(epsilon >= Scalar(0))) throw std::domain_error("covert_power_threshold: epsilon must be non-negative");
  return noise_w * y_inverse_offset(Scalar(2) * epsilon * epsilon);
}

}  // namespace mfda
