#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mfda {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexRowVector = Eigen::RowVectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * static_cast<Scalar>(std::numbers::pi) / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / static_cast<Scalar>(std::numbers::pi);
}

/// Configuration or input validation failure. `field()` names the offending
/// field path (e.g. `willies[2].r_m`) when one applies.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Interior-point solver failed to reach the requested accuracy.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double primal_residual, double gap)
      : std::runtime_error(what), primal_residual_(primal_residual), gap_(gap) {}
  double primal_residual() const noexcept { return primal_residual_; }
  double gap() const noexcept { return gap_; }

 private:
  double primal_residual_;
  double gap_;
};

/// Geometry for which the requested beamformer does not exist
/// (rank-deficient warden channels, Bob inside the warden span, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfda
