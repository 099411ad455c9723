#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mfda/scenario.hpp"

namespace mfda {

/// Antenna position vector (meters, antenna 1 at the origin) and antenna
/// frequency vector (hertz).
struct ArrayLayout {
  RealVector positions_m;
  RealVector frequencies_hz;

  int size() const { return static_cast<int>(positions_m.size()); }
  bool operator==(const ArrayLayout& o) const {
    return positions_m == o.positions_m && frequencies_hz == o.frequencies_hz;
  }
};

/// Box and spacing limits a layout must respect.
struct LayoutLimits {
  double d_min_m = 0.0;
  double d_max_m = 0.0;
  double carrier_hz = 0.0;
  double delta_f_hz = 0.0;

  static LayoutLimits from(const ScenarioConfig& cfg) {
    return {cfg.d_min_m, cfg.d_max_m, cfg.carrier_hz, cfg.delta_f_hz};
  }
};

/// Checks x_1 = 0, x_m - x_{m-1} >= D_min, x_M <= D_max and
/// f_m in [f_C, f_C + dF]. `tol` is an absolute slack in meters and a
/// relative slack on the frequency box. Writes the first violation to `why`.
bool is_feasible(const ArrayLayout& layout, const LayoutLimits& limits, double tol = 1e-12,
                 std::string* why = nullptr);

/// Uniform lambda / 2 positions (clamped to D_min when larger) with every
/// antenna at f_C. This is the phased-array layout.
ArrayLayout phased_array_layout(const ScenarioConfig& cfg);
/// Phased-array positions with the linear frequency ramp
/// f_m = f_C + (m - 1) dF / (M - 1).
ArrayLayout frequency_ramp_layout(const ScenarioConfig& cfg);
/// Uniform spacing D_max / (M - 1) over the whole aperture with the linear
/// frequency ramp.
ArrayLayout full_aperture_layout(const ScenarioConfig& cfg);
/// Uniformly random feasible positions and/or frequencies; the fixed parts
/// come from frequency_ramp_layout.
ArrayLayout random_feasible_layout(const ScenarioConfig& cfg, std::mt19937_64& rng, bool random_positions = true,
                                   bool random_frequencies = true);

/// Row vector h with h * w the received baseband sample.
struct ChannelVector {
  ComplexRowVector entries;
  bool scaled = false;

  int size() const { return static_cast<int>(entries.size()); }
};

/// Path-loss selection applied when building a scaled channel.
struct LinkLoss {
  PathLossModel model;
  LinkKind kind = LinkKind::legitimate;
};

/// Entry m = exp(-j 2 pi f_m (t - (r - x_m sin(theta)) / c)), multiplied by
/// Lfs(r) when `loss` is given.
ChannelVector channel_vector(const ArrayLayout& layout, const PolarCoordinate& point, double t = 0.0,
                             const std::optional<LinkLoss>& loss = std::nullopt);

/// Transmit weight vector w (column), represented at t = 0.
struct Beamformer {
  ComplexVector weights;

  int size() const { return static_cast<int>(weights.size()); }
  double power() const { return weights.squaredNorm(); }
};

/// |h w|^2.
inline double received_power(const ChannelVector& h, const Beamformer& w) {
  return std::norm((h.entries * w.weights).value());
}

/// w_m(t) = w_m exp(+j 2 pi f_m t), so h(t) w(t) = h(0) w(0) at every receiver.
Beamformer time_rotated_beamformer(const Beamformer& w, const ArrayLayout& layout, double t);

/// Receiver sample points; `owner[i]` is the warden index of point i.
struct SamplePointSet {
  std::vector<PolarCoordinate> points;
  std::vector<int> owner;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void append(const SamplePointSet& other);
};

/// Sum over the points of |<h_b, h_p>|^2 with loss-free channels.
double correlation_objective(const ArrayLayout& layout, const PolarCoordinate& bob, const SamplePointSet& points);

/// The nominal warden coordinates, one point per warden.
SamplePointSet nominal_warden_points(const ScenarioConfig& cfg);
/// L x L range/angle grid around warden `warden_index` (row-major in range).
/// Requires cfg.uncertainty.
SamplePointSet build_uncertainty_grid(const ScenarioConfig& cfg, int warden_index);
/// Every point the optimizer protects: the uncertainty grids when present,
/// the nominal coordinates otherwise.
SamplePointSet warden_sample_points(const ScenarioConfig& cfg);

}  // namespace mfda
