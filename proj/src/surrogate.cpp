#include "mfda/surrogate.hpp"

#include "mfda/types.hpp"

namespace mfda {

namespace {

// Shared tail of both surrogate rules once the vertex phase (in cycles) is known.
QuadraticSurrogate from_vertex_phase(const CosineTerm& term, double x0, double vertex_cycles) {
  const double phase0 = term.slope * x0 + term.phase_rest;
  QuadraticSurrogate u;
  u.kind = SurrogateCase::descent;
  // x0 - b = (phase0 - 2 pi vertex) / slope, formed directly to avoid
  // cancelling two large coordinates.
  const double offset = (phase0 - kTwoPi * vertex_cycles) / term.slope;
  u.b = x0 - offset;
  // 2 a (x0 - b) = y'(x0) = -slope sin(phase0)
  u.a = -term.slope * std::sin(phase0) / (2.0 * offset);
  u.c_off = std::cos(phase0) - u.a * offset * offset;
  return u;
}

// Stationary point: b = x0, c_off = y(x0) = +-1, a = -2 (slope / 2)^2 c_off.
QuadraticSurrogate stationary(const CosineTerm& term, double x0) {
  const double phase0 = term.slope * x0 + term.phase_rest;
  QuadraticSurrogate u;
  u.b = x0;
  u.c_off = std::cos(phase0) < 0.0 ? -1.0 : 1.0;
  const double half = 0.5 * term.slope;
  u.a = -2.0 * half * half * u.c_off;
  u.kind = u.c_off < 0.0 ? SurrogateCase::valley : SurrogateCase::peak;
  return u;
}

bool is_constant(const CosineTerm& term) { return term.slope == 0.0; }

bool is_stationary(const CosineTerm& term, double x0) {
  return std::abs(std::sin(term.slope * x0 + term.phase_rest)) <= kStationaryTolerance;
}

QuadraticSurrogate constant(const CosineTerm& term, double x0) {
  return {0.0, x0, term.value(x0), SurrogateCase::constant};
}

}  // namespace

QuadraticSurrogate position_surrogate(const CosineTerm& term, double x0) {
  if (is_constant(term)) return constant(term, x0);
  if (is_stationary(term, x0)) return stationary(term, x0);
  const double cycles = (term.slope * x0 + term.phase_rest) / kTwoPi;
  // (1 + 2 kappa) / 2 with kappa = ceil(p0) - 1
  return from_vertex_phase(term, x0, std::ceil(cycles) - 0.5);
}

QuadraticSurrogate frequency_surrogate(const CosineTerm& term, double f0, RangeOrder order) {
  if (is_constant(term)) return constant(term, f0);
  if (is_stationary(term, f0)) return stationary(term, f0);
  const double cycles = (term.slope * f0 + term.phase_rest) / kTwoPi;
  const double vertex =
      order == RangeOrder::bob_not_closer ? std::floor(cycles) + 0.5 : -(std::floor(-cycles) + 0.5);
  return from_vertex_phase(term, f0, vertex);
}

}  // namespace mfda
