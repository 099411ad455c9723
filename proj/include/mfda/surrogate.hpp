#pragma once

#include <cmath>

namespace mfda {

/// One term cos(slope * x + phase_rest) of the channel-correlation objective,
/// viewed as a function of a single antenna coordinate x.
struct CosineTerm {
  double slope = 0.0;
  double phase_rest = 0.0;

  double value(double x) const { return std::cos(slope * x + phase_rest); }
  double derivative(double x) const { return -slope * std::sin(slope * x + phase_rest); }
};

/// Which tangency configuration produced a surrogate.
enum class SurrogateCase {
  descent,   ///< y'(x0) != 0; vertex on the adjacent cosine minimizer
  valley,    ///< y'(x0) = 0 at a minimum; convex, majorizes
  peak,      ///< y'(x0) = 0 at a maximum; concave, minorizes locally
  constant,  ///< slope = 0, the term does not depend on x
};

/// u(x) = a (x - b)^2 + c_off.
struct QuadraticSurrogate {
  double a = 0.0;
  double b = 0.0;
  double c_off = 0.0;
  SurrogateCase kind = SurrogateCase::constant;

  double operator()(double x) const { return a * (x - b) * (x - b) + c_off; }
  double derivative(double x) const { return 2.0 * a * (x - b); }
};

/// Position-block surrogate. The vertex phase is ceil(p0) - 1/2 cycles,
/// p0 = (slope * x0 + phase_rest) / 2 pi, i.e. the cosine minimum reached by
/// descending from x0; a matches the slope at x0 and c_off the value.
QuadraticSurrogate position_surrogate(const CosineTerm& term, double x0);

/// Sign of r_b - r_w for the point that generated a frequency term.
enum class RangeOrder {
  bob_not_closer,  ///< r_b >= r_w: vertex phase floor(p0) + 1/2
  bob_closer,      ///< r_b <  r_w: vertex phase -floor(-p0) - 1/2
};

/// Frequency-block surrogate for cos(2 pi (tau_m f - tau_n f_n)): slope is
/// 2 pi tau_m and phase_rest is -2 pi tau_n f_n.
QuadraticSurrogate frequency_surrogate(const CosineTerm& term, double f0, RangeOrder order);

/// |y'(x0)| below this multiple of |slope| counts as stationary.
inline constexpr double kStationaryTolerance = 1e-12;

}  // namespace mfda
