#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfda/types.hpp"

namespace mfda {

/// Position of a receiver relative to antenna 1 of the array. The angle is
/// measured from broadside, positive towards increasing antenna position.
struct PolarCoordinate {
  double range_m = 1.0;
  double angle_rad = 0.0;

  /// Throws ConfigError unless range > 0 and |angle| < pi/2.
  static PolarCoordinate make(double range_m, double angle_rad);
  static PolarCoordinate from_degrees(double range_m, double angle_deg) {
    return make(range_m, deg_to_rad(angle_deg));
  }

  double angle_deg() const { return rad_to_deg(angle_rad); }
  bool operator==(const PolarCoordinate&) const = default;
};

enum class LinkKind { legitimate, warden };

/// Log-distance path loss, C * (r / R)^-alpha in the power domain.
struct PathLossModel {
  double c_db = -30.0;
  double ref_distance_m = 1.0;
  double alpha_ab = 2.0;
  double alpha_aw = 3.0;

  double exponent(LinkKind kind) const { return kind == LinkKind::legitimate ? alpha_ab : alpha_aw; }
  bool operator==(const PathLossModel&) const = default;
};

struct Warden {
  PolarCoordinate position;
  double noise_w = 1e-13;
  bool operator==(const Warden&) const = default;
};

/// Per-warden uncertainty box, discretized into samples x samples points.
struct Uncertainty {
  std::vector<double> delta_r_m;
  std::vector<double> delta_theta_rad;
  int samples = 1;
  bool operator==(const Uncertainty&) const = default;
};

struct ScenarioConfig {
  int num_antennas = 10;
  double carrier_hz = 10e9;
  double delta_f_hz = 10e6;
  double d_min_m = 0.0;
  double d_max_m = 0.0;
  double p_max_w = 1e-2;
  double noise_bob_w = 1e-13;
  double epsilon = 0.1;
  PolarCoordinate bob;
  std::vector<Warden> willies;
  PathLossModel loss;
  std::optional<Uncertainty> uncertainty;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  int num_wardens() const { return static_cast<int>(willies.size()); }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
  /// Advisory findings that do not invalidate the scenario.
  std::vector<std::string> warnings() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// 10^((p_dbm - 30) / 10).
template <typename Scalar>
Scalar dbm_to_watts(Scalar p_dbm) {
  return std::pow(Scalar(10), (p_dbm - Scalar(30)) / Scalar(10));
}

template <typename Scalar>
Scalar watts_to_dbm(Scalar p_w) {
  return Scalar(10) * std::log10(p_w) + Scalar(30);
}

/// Amplitude factor Lfs(r) = sqrt(10^(C/10) (r/R)^-alpha); its square is the
/// power-domain gain. Throws std::domain_error for r <= 0.
template <typename Scalar>
Scalar path_loss_amplitude(Scalar r_m, const PathLossModel& model, LinkKind kind) {
  if (!(r_m > Scalar(0))) throw std::domain_error("path_loss_amplitude: range must be positive");
  const Scalar power_ref = std::pow(Scalar(10), Scalar(model.c_db) / Scalar(10));
  const Scalar ratio = r_m / Scalar(model.ref_distance_m);
  return std::sqrt(power_ref * std::pow(ratio, -Scalar(model.exponent(kind))));
}

/// Parses a scenario document (JSON, dBm / degrees / wavelengths at the
/// boundary) into SI units and validates it.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
/// Inverse of load_scenario.
std::string render_scenario(const ScenarioConfig& config);

/// True when every field agrees to `rel_tol` (relative, per number).
bool approx_equal(const ScenarioConfig& a, const ScenarioConfig& b, double rel_tol = 1e-12);

/// Built-in scenarios from the numerical study.
ScenarioConfig low_correlation_scenario(int num_antennas);
ScenarioConfig high_correlation_scenario(int num_antennas);
/// Three-warden imperfect-CSI geometry. `samples` is L; the uncertainty
/// half-widths are (L - 1) / 2 sample spacings.
ScenarioConfig imperfect_csi_scenario(int num_antennas, int samples, double spacing_r_m = 10.0,
                                      double spacing_theta_deg = 1.0);

}  // namespace mfda
