#include <doctest.h>

#include <cmath>
#include <random>

#include "mfda/channel.hpp"

using namespace mfda;

namespace {

ArrayLayout two_antennas(double x1, double f0, double f1) {
  ArrayLayout l;
  l.positions_m = RealVector{{0.0, x1}};
  l.frequencies_hz = RealVector{{f0, f1}};
  return l;
}

}  // namespace

TEST_CASE("channel entries follow the propagation delay") {
  const auto layout = two_antennas(0.015, 10e9, 10.01e9);
  const auto p = PolarCoordinate::from_degrees(1000.0, 30.0);
  const double t = 3.7e-9;
  const auto h = channel_vector(layout, p, t);
  for (int m = 0; m < 2; ++m) {
    const double tau = (1000.0 - layout.positions_m[m] * 0.5) / 299792458.0;
    const double phase = -2.0 * std::numbers::pi * layout.frequencies_hz[m] * (t - tau);
    CHECK(std::abs(h.entries[m] - std::polar(1.0, phase)) < 1e-9);
  }
  CHECK_FALSE(h.scaled);

  const auto scaled = channel_vector(layout, p, t, LinkLoss{PathLossModel{}, LinkKind::warden});
  CHECK(scaled.scaled);
  CHECK(std::abs(scaled.entries[1]) == doctest::Approx(std::sqrt(1e-3 * std::pow(1000.0, -3.0))));
}

TEST_CASE("broadside point on a single carrier sees equal phases") {
  auto cfg = low_correlation_scenario(6);
  const auto layout = phased_array_layout(cfg);
  const auto h = channel_vector(layout, PolarCoordinate::make(700.0, 0.0));
  for (int m = 1; m < 6; ++m) CHECK(std::abs(h.entries[m] - h.entries[0]) < 1e-9);
}

TEST_CASE("time rotated beamformer keeps the received sample") {
  const auto cfg = low_correlation_scenario(5);
  const auto layout = frequency_ramp_layout(cfg);
  Beamformer w;
  w.weights = ComplexVector::Random(5);
  const auto p = PolarCoordinate::from_degrees(950.0, 20.0);
  const Complex at0 = (channel_vector(layout, p, 0.0).entries * w.weights).value();
  for (double t : {1e-9, 2.5e-7}) {
    const Complex at_t = (channel_vector(layout, p, t).entries * time_rotated_beamformer(w, layout, t).weights).value();
    CHECK(std::abs(at_t - at0) < 1e-9 * std::abs(at0));
  }
}

TEST_CASE("correlation objective equals the summed inner products") {
  const auto cfg = high_correlation_scenario(7);
  std::mt19937_64 rng(3);
  const auto layout = random_feasible_layout(cfg, rng);
  const auto pts = nominal_warden_points(cfg);
  double expected = 0.0;
  const auto hb = channel_vector(layout, cfg.bob).entries;
  for (const auto& p : pts.points) {
    const auto hw = channel_vector(layout, p).entries;
    Complex s = 0.0;
    for (int m = 0; m < 7; ++m) s += hb[m] * std::conj(hw[m]);
    expected += std::norm(s);
  }
  CHECK(correlation_objective(layout, cfg.bob, pts) == doctest::Approx(expected).epsilon(1e-12));
  // Bob against himself gives M^2.
  SamplePointSet self;
  self.points.push_back(cfg.bob);
  self.owner.push_back(0);
  CHECK(correlation_objective(layout, cfg.bob, self) == doctest::Approx(49.0));
}

TEST_CASE("starting layouts are feasible") {
  const auto cfg = low_correlation_scenario(10);
  const auto limits = LayoutLimits::from(cfg);
  for (const auto& l : {phased_array_layout(cfg), frequency_ramp_layout(cfg), full_aperture_layout(cfg)})
    CHECK(is_feasible(l, limits));
  const auto full = full_aperture_layout(cfg);
  CHECK(full.positions_m[9] == doctest::Approx(cfg.d_max_m));
  CHECK(full.frequencies_hz[9] == doctest::Approx(cfg.carrier_hz + cfg.delta_f_hz));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) CHECK(is_feasible(random_feasible_layout(cfg, rng), limits));
}

TEST_CASE("feasibility violations are reported") {
  const auto cfg = low_correlation_scenario(4);
  const auto limits = LayoutLimits::from(cfg);
  std::string why;
  auto l = phased_array_layout(cfg);
  l.positions_m[2] = l.positions_m[1] + 0.4 * cfg.d_min_m;
  CHECK_FALSE(is_feasible(l, limits, 1e-12, &why));
  CHECK(why.find("D_min") != std::string::npos);
  l = phased_array_layout(cfg);
  l.frequencies_hz[3] = cfg.carrier_hz + 2.0 * cfg.delta_f_hz;
  CHECK_FALSE(is_feasible(l, limits, 1e-12, &why));
  l = phased_array_layout(cfg);
  l.positions_m[0] = 1e-3;
  CHECK_FALSE(is_feasible(l, limits));
}

TEST_CASE("uncertainty grid") {
  const auto cfg = imperfect_csi_scenario(10, 3);
  const auto grid = build_uncertainty_grid(cfg, 1);
  REQUIRE(grid.size() == 9);
  CHECK(grid.points[0].range_m == doctest::Approx(840.0));
  CHECK(grid.points[0].angle_deg() == doctest::Approx(19.0));
  CHECK(grid.points[4] == cfg.willies[1].position);
  CHECK(grid.points[8].range_m == doctest::Approx(860.0));
  CHECK(grid.points[8].angle_deg() == doctest::Approx(21.0));
  CHECK(grid.points[1].range_m == grid.points[0].range_m);
  for (int o : grid.owner) CHECK(o == 1);

  const auto all = warden_sample_points(cfg);
  CHECK(all.size() == 27);
  CHECK(all.owner.back() == 2);
  CHECK(warden_sample_points(low_correlation_scenario(10)).size() == 4);
  CHECK_THROWS_AS(build_uncertainty_grid(low_correlation_scenario(10), 0), ConfigError);
}
