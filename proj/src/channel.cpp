#include "mfda/channel.hpp"

#include <algorithm>
#include <cmath>

namespace mfda {

bool is_feasible(const ArrayLayout& layout, const LayoutLimits& limits, double tol, std::string* why) {
  auto fail = [why](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  const int m_count = layout.size();
  if (m_count < 1 || layout.frequencies_hz.size() != m_count) return fail("position/frequency sizes differ");
  if (layout.positions_m[0] != 0.0) return fail("antenna 1 is not at the origin");
  for (int m = 1; m < m_count; ++m) {
    if (layout.positions_m[m] - layout.positions_m[m - 1] < limits.d_min_m - tol)
      return fail("spacing below D_min at antenna " + std::to_string(m + 1));
  }
  if (layout.positions_m[m_count - 1] > limits.d_max_m + tol) return fail("last antenna beyond D_max");
  const double f_tol = tol * limits.carrier_hz;
  for (int m = 0; m < m_count; ++m) {
    const double f = layout.frequencies_hz[m];
    if (f < limits.carrier_hz - f_tol || f > limits.carrier_hz + limits.delta_f_hz + f_tol)
      return fail("frequency of antenna " + std::to_string(m + 1) + " outside [f_C, f_C + dF]");
  }
  return true;
}

ArrayLayout phased_array_layout(const ScenarioConfig& cfg) {
  const int m_count = cfg.num_antennas;
  const double spacing = std::max(0.5 * cfg.wavelength(), cfg.d_min_m);
  ArrayLayout layout;
  layout.positions_m.resize(m_count);
  for (int m = 0; m < m_count; ++m) layout.positions_m[m] = spacing * m;
  layout.frequencies_hz = RealVector::Constant(m_count, cfg.carrier_hz);
  return layout;
}

ArrayLayout frequency_ramp_layout(const ScenarioConfig& cfg) {
  ArrayLayout layout = phased_array_layout(cfg);
  const int m_count = cfg.num_antennas;
  for (int m = 0; m < m_count; ++m)
    layout.frequencies_hz[m] = cfg.carrier_hz + cfg.delta_f_hz * m / std::max(1, m_count - 1);
  return layout;
}

ArrayLayout full_aperture_layout(const ScenarioConfig& cfg) {
  ArrayLayout layout = frequency_ramp_layout(cfg);
  const int m_count = cfg.num_antennas;
  for (int m = 0; m < m_count; ++m) layout.positions_m[m] = cfg.d_max_m * m / std::max(1, m_count - 1);
  return layout;
}

ArrayLayout random_feasible_layout(const ScenarioConfig& cfg, std::mt19937_64& rng, bool random_positions,
                                   bool random_frequencies) {
  ArrayLayout layout = frequency_ramp_layout(cfg);
  const int m_count = cfg.num_antennas;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (random_positions) {
    // Spread the free slack D_max - (M-1) D_min over the M-1 gaps plus an
    // unused tail, using sorted uniforms (uniform on the simplex).
    const double slack = cfg.d_max_m - (m_count - 1) * cfg.d_min_m;
    std::vector<double> cuts(m_count - 1);
    for (auto& c : cuts) c = unit(rng);
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    layout.positions_m[0] = 0.0;
    for (int m = 1; m < m_count; ++m) {
      const double share = (cuts[m - 1] - prev) * slack;
      prev = cuts[m - 1];
      layout.positions_m[m] = layout.positions_m[m - 1] + cfg.d_min_m + share;
    }
  }
  if (random_frequencies) {
    for (int m = 0; m < m_count; ++m) layout.frequencies_hz[m] = cfg.carrier_hz + cfg.delta_f_hz * unit(rng);
  }
  return layout;
}

ChannelVector channel_vector(const ArrayLayout& layout, const PolarCoordinate& point, double t,
                             const std::optional<LinkLoss>& loss) {
  const int m_count = layout.size();
  const double sin_theta = std::sin(point.angle_rad);
  const double amplitude = loss ? path_loss_amplitude(point.range_m, loss->model, loss->kind) : 1.0;
  ChannelVector h;
  h.scaled = loss.has_value();
  h.entries.resize(m_count);
  for (int m = 0; m < m_count; ++m) {
    const double delay = (point.range_m - layout.positions_m[m] * sin_theta) / kSpeedOfLight;
    const double phase = -kTwoPi * layout.frequencies_hz[m] * (t - delay);
    h.entries[m] = std::polar(amplitude, phase);
  }
  return h;
}

void SamplePointSet::append(const SamplePointSet& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  owner.insert(owner.end(), other.owner.begin(), other.owner.end());
}

double correlation_objective(const ArrayLayout& layout, const PolarCoordinate& bob, const SamplePointSet& points) {
  const ComplexRowVector hb = channel_vector(layout, bob).entries;
  double total = 0.0;
  for (const auto& p : points.points) {
    const ComplexRowVector hw = channel_vector(layout, p).entries;
    // <h_b, h_w> = sum_m h_b,m conj(h_w,m)
    const Complex inner = (hb.array() * hw.array().conjugate()).sum();
    total += std::norm(inner);
  }
  return total;
}

Beamformer time_rotated_beamformer(const Beamformer& w, const ArrayLayout& layout, double t) {
  Beamformer out = w;
  for (int m = 0; m < layout.size(); ++m) out.weights[m] *= std::polar(1.0, kTwoPi * layout.frequencies_hz[m] * t);
  return out;
}

SamplePointSet nominal_warden_points(const ScenarioConfig& cfg) {
  SamplePointSet set;
  for (int k = 0; k < cfg.num_wardens(); ++k) {
    set.points.push_back(cfg.willies[k].position);
    set.owner.push_back(k);
  }
  return set;
}

SamplePointSet build_uncertainty_grid(const ScenarioConfig& cfg, int warden_index) {
  if (!cfg.uncertainty) throw ConfigError("uncertainty", "scenario has no uncertainty block");
  if (warden_index < 0 || warden_index >= cfg.num_wardens()) throw ConfigError("willies", "warden index out of range");
  const auto& u = *cfg.uncertainty;
  const int samples = u.samples;
  if (samples < 1) throw ConfigError("uncertainty.samples", "must be >= 1");
  const auto& nominal = cfg.willies[warden_index].position;
  const double dr = u.delta_r_m[warden_index];
  const double dtheta = u.delta_theta_rad[warden_index];

  auto sample = [samples](double centre, double half_width, int l) {
    if (samples == 1) return centre;
    return centre - half_width + l * (2.0 * half_width / (samples - 1));
  };

  SamplePointSet set;
  for (int i = 0; i < samples; ++i) {
    const double r = sample(nominal.range_m, dr, i);
    for (int j = 0; j < samples; ++j) {
      const double theta = sample(nominal.angle_rad, dtheta, j);
      set.points.push_back(PolarCoordinate::make(r, theta));
      set.owner.push_back(warden_index);
    }
  }
  return set;
}

SamplePointSet warden_sample_points(const ScenarioConfig& cfg) {
  if (!cfg.uncertainty) return nominal_warden_points(cfg);
  SamplePointSet all;
  for (int k = 0; k < cfg.num_wardens(); ++k) all.append(build_uncertainty_grid(cfg, k));
  return all;
}

}  // namespace mfda
