#include "mfda/bsum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace mfda {

void StopRule::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("stop.tolerance", "must be positive");
  if (max_iterations <= 0) throw ConfigError("stop.max_iterations", "must be positive");
  if (window < 0) throw ConfigError("stop.window", "must be non-negative");
}

AggregateResult aggregate_optimal_coordinate(std::span<const QuadraticSurrogate> surrogates) {
  AggregateResult out;
  double reference = 0.0;
  double sum_a = 0.0;
  double sum_ab = 0.0;
  for (const auto& s : surrogates) {
    if (s.a == 0.0) continue;
    if (!out.informative) {
      reference = s.b;
      out.informative = true;
    }
    // Weighted mean relative to the first vertex keeps precision when the
    // vertices are large (frequencies near 10 GHz).
    sum_a += s.a;
    sum_ab += s.a * (s.b - reference);
  }
  if (!out.informative) return out;
  out.concave = !(sum_a > 0.0);
  out.value = reference + sum_ab / sum_a;
  return out;
}

std::optional<double> project_position(double candidate, int m, const ArrayLayout& layout, double d_min,
                                       double d_max) {
  const int m_count = layout.size();
  if (m < 1 || m >= m_count) throw std::out_of_range("project_position: antenna 1 is pinned at the origin");
  const double lower = layout.positions_m[m - 1] + d_min;
  double upper = d_max - (m_count - 1 - m) * d_min;
  if (m + 1 < m_count) upper = std::min(upper, layout.positions_m[m + 1] - d_min);
  if (lower > upper) return std::nullopt;
  return std::clamp(candidate, lower, upper);
}

double project_frequency(double candidate, double f_c, double delta_f) {
  return std::clamp(candidate, f_c, f_c + delta_f);
}

namespace {

// Per-point constants of the delay difference tau_{p,m} = x_m a_p + b_p.
struct PointGeometry {
  std::vector<double> angle_term;  // (sin theta_p - sin theta_b) / c
  std::vector<double> range_term;  // (r_b - r_p) / c
  std::vector<RangeOrder> order;

  PointGeometry(const PolarCoordinate& bob, const SamplePointSet& points) {
    const double sin_b = std::sin(bob.angle_rad);
    for (const auto& p : points.points) {
      angle_term.push_back((std::sin(p.angle_rad) - sin_b) / kSpeedOfLight);
      range_term.push_back((bob.range_m - p.range_m) / kSpeedOfLight);
      order.push_back(bob.range_m >= p.range_m ? RangeOrder::bob_not_closer : RangeOrder::bob_closer);
    }
  }
  std::size_t size() const { return angle_term.size(); }
};

// sum_p |sum_m exp(j 2 pi f_m tau_{p,m})|^2; identical to the inner-product
// form on loss-free channels.
double objective(const ArrayLayout& layout, const PointGeometry& geo) {
  const int m_count = layout.size();
  double total = 0.0;
  for (std::size_t p = 0; p < geo.size(); ++p) {
    Complex sum{0.0, 0.0};
    for (int m = 0; m < m_count; ++m) {
      const double tau = layout.positions_m[m] * geo.angle_term[p] + geo.range_term[p];
      sum += std::polar(1.0, kTwoPi * layout.frequencies_hz[m] * tau);
    }
    total += std::norm(sum);
  }
  return total;
}

CoordinateUpdate finish(std::vector<QuadraticSurrogate>& terms, double current,
                        const std::function<std::optional<double>(double)>& project) {
  CoordinateUpdate up;
  up.current = current;
  up.candidate = current;
  const AggregateResult agg = aggregate_optimal_coordinate(terms);
  up.informative = agg.informative;
  up.concave = agg.concave;
  // A concave sum has its stationary point at a maximum: keep the coordinate.
  if (agg.informative && !agg.concave) {
    if (auto projected = project(agg.value)) up.candidate = *projected;
  }
  for (const auto& s : terms) {
    up.surrogate_at_current += s(current);
    up.surrogate_at_candidate += s(up.candidate);
  }
  return up;
}

CoordinateUpdate position_update_impl(const ArrayLayout& layout, const PointGeometry& geo, int m,
                                      const LayoutLimits& limits, std::vector<QuadraticSurrogate>& terms) {
  const int m_count = layout.size();
  const double fm = layout.frequencies_hz[m];
  const double x0 = layout.positions_m[m];
  terms.clear();
  for (std::size_t p = 0; p < geo.size(); ++p) {
    const double a = geo.angle_term[p];
    const double b = geo.range_term[p];
    for (int n = 0; n < m_count; ++n) {
      if (n == m) continue;
      const double fn = layout.frequencies_hz[n];
      const CosineTerm term{kTwoPi * fm * a, kTwoPi * (-fn * layout.positions_m[n] * a + (fm - fn) * b)};
      terms.push_back(position_surrogate(term, x0));
    }
  }
  return finish(terms, x0, [&](double c) { return project_position(c, m, layout, limits.d_min_m, limits.d_max_m); });
}

CoordinateUpdate frequency_update_impl(const ArrayLayout& layout, const PointGeometry& geo, int m,
                                       const LayoutLimits& limits, std::vector<QuadraticSurrogate>& terms) {
  const int m_count = layout.size();
  const double f0 = layout.frequencies_hz[m];
  terms.clear();
  for (std::size_t p = 0; p < geo.size(); ++p) {
    const double a = geo.angle_term[p];
    const double b = geo.range_term[p];
    const double tau_m = layout.positions_m[m] * a + b;
    for (int n = 0; n < m_count; ++n) {
      if (n == m) continue;
      const double tau_n = layout.positions_m[n] * a + b;
      const CosineTerm term{kTwoPi * tau_m, -kTwoPi * tau_n * layout.frequencies_hz[n]};
      terms.push_back(frequency_surrogate(term, f0, geo.order[p]));
    }
  }
  return finish(terms, f0, [&](double c) -> std::optional<double> {
    return project_frequency(c, limits.carrier_hz, limits.delta_f_hz);
  });
}

enum class Block { positions, frequencies };

BsumState run(BsumState state, const LayoutLimits& limits, const StopRule& stop, Block block) {
  stop.validate();
  const int m_count = state.layout.size();
  const PointGeometry geo(state.bob, state.warden_points);
  const int first = block == Block::positions ? 1 : 0;
  const int free_count = m_count - first;
  const int window = stop.window > 0 ? stop.window : m_count;

  double current = objective(state.layout, geo);
  if (state.objective_trace.empty()) state.objective_trace.push_back(current);
  state.converged = false;
  if (free_count <= 0 || geo.size() == 0) {
    state.converged = true;
    return state;
  }

  std::vector<QuadraticSurrogate> terms;
  terms.reserve(geo.size() * m_count);
  const std::size_t base = state.objective_trace.size() - 1;
  for (long s = 1; s <= stop.max_iterations; ++s) {
    const int m = first + static_cast<int>((s - 1) % free_count);
    const CoordinateUpdate up = block == Block::positions
                                    ? position_update_impl(state.layout, geo, m, limits, terms)
                                    : frequency_update_impl(state.layout, geo, m, limits, terms);
    bool moved = false;
    if (up.candidate != up.current) {
      ArrayLayout trial = state.layout;
      (block == Block::positions ? trial.positions_m : trial.frequencies_hz)[m] = up.candidate;
      const double value = objective(trial, geo);
      if (value < current) {
        state.layout = std::move(trial);
        current = value;
        moved = true;
      }
    }
    moved ? ++state.accepted : ++state.rejected;
    ++state.iteration;
    state.objective_trace.push_back(current);

    const std::size_t done = state.objective_trace.size() - 1 - base;
    if (done >= static_cast<std::size_t>(window)) {
      const double before = state.objective_trace[state.objective_trace.size() - 1 - window];
      if (std::abs(before - current) <= stop.tolerance) {
        state.converged = true;
        break;
      }
    }
  }
  return state;
}

}  // namespace

CoordinateUpdate position_update(const ArrayLayout& layout, const PolarCoordinate& bob, const SamplePointSet& points,
                                 int m, const LayoutLimits& limits) {
  std::vector<QuadraticSurrogate> terms;
  return position_update_impl(layout, PointGeometry(bob, points), m, limits, terms);
}

CoordinateUpdate frequency_update(const ArrayLayout& layout, const PolarCoordinate& bob,
                                  const SamplePointSet& points, int m, const LayoutLimits& limits) {
  std::vector<QuadraticSurrogate> terms;
  return frequency_update_impl(layout, PointGeometry(bob, points), m, limits, terms);
}

BsumState bsum_positions(BsumState state, const LayoutLimits& limits, const StopRule& stop) {
  return run(std::move(state), limits, stop, Block::positions);
}

BsumState bsum_frequencies(BsumState state, const LayoutLimits& limits, const StopRule& stop) {
  return run(std::move(state), limits, stop, Block::frequencies);
}

}  // namespace mfda
