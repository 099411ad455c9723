#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mfda/channel.hpp"
#include "mfda/surrogate.hpp"

namespace mfda {

/// Stop when the objective moved by at most `tolerance` over the last
/// `window` coordinate updates, or after `max_iterations` updates.
struct StopRule {
  double tolerance = 1e-6;
  long max_iterations = 20000;
  int window = 0;  ///< 0 selects the number of antennas

  void validate() const;
};

struct BsumState {
  ArrayLayout layout;
  PolarCoordinate bob;
  SamplePointSet warden_points;
  long iteration = 0;
  /// Objective before the first update, then one entry per update.
  std::vector<double> objective_trace;
  long accepted = 0;
  long rejected = 0;
  bool converged = false;
};

struct AggregateResult {
  double value = 0.0;
  bool informative = false;  ///< false when every curvature is zero
  bool concave = false;      ///< the summed curvature is not positive
};

/// Minimizer sum(a_i b_i) / sum(a_i) of the summed quadratics, skipping a = 0.
AggregateResult aggregate_optimal_coordinate(std::span<const QuadraticSurrogate> surrogates);

/// Clamp of a candidate for antenna `m` (0-based, m >= 1) into
/// [x_{m-1} + D_min, min(D_max - (M-1-m) D_min, x_{m+1} - D_min)].
/// nullopt when the interval is empty.
std::optional<double> project_position(double candidate, int m, const ArrayLayout& layout, double d_min,
                                       double d_max);

/// Clamp into [f_C, f_C + dF].
double project_frequency(double candidate, double f_c, double delta_f);

/// One majorize-minimize step on a single coordinate, without acceptance.
struct CoordinateUpdate {
  double current = 0.0;
  double candidate = 0.0;
  double surrogate_at_current = 0.0;
  double surrogate_at_candidate = 0.0;
  bool informative = false;
  bool concave = false;
};

/// Builds one surrogate per (warden point, n != m) term and returns the
/// projected minimizer for the position of antenna m (0-based, m >= 1).
CoordinateUpdate position_update(const ArrayLayout& layout, const PolarCoordinate& bob,
                                 const SamplePointSet& points, int m, const LayoutLimits& limits);
/// Same for the frequency of antenna m (0-based).
CoordinateUpdate frequency_update(const ArrayLayout& layout, const PolarCoordinate& bob,
                                  const SamplePointSet& points, int m, const LayoutLimits& limits);

/// Cyclic BSUM over positions 2..M (antenna 1 stays at the origin). A move
/// is kept only when it strictly lowers the true objective, so the trace is
/// non-increasing.
BsumState bsum_positions(BsumState state, const LayoutLimits& limits, const StopRule& stop);
/// Cyclic BSUM over all M frequencies.
BsumState bsum_frequencies(BsumState state, const LayoutLimits& limits, const StopRule& stop);

}  // namespace mfda
