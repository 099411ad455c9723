#include <doctest.h>

#include <cmath>
#include <random>

#include "mfda/bsum.hpp"

using namespace mfda;

namespace {

ScenarioConfig one_warden(int antennas, double delta_f) {
  auto cfg = low_correlation_scenario(antennas);
  cfg.willies.resize(1);
  cfg.delta_f_hz = delta_f;
  cfg.validate();
  return cfg;
}

BsumState start_state(const ScenarioConfig& cfg, const ArrayLayout& layout) {
  BsumState st;
  st.layout = layout;
  st.bob = cfg.bob;
  st.warden_points = warden_sample_points(cfg);
  return st;
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("aggregate minimizer is the curvature-weighted vertex mean") {
  std::vector<QuadraticSurrogate> s{{2.0, 1.0, 0.0, SurrogateCase::descent},
                                    {1.0, 4.0, 3.0, SurrogateCase::descent},
                                    {0.0, 100.0, 1.0, SurrogateCase::constant}};
  auto agg = aggregate_optimal_coordinate(s);
  CHECK(agg.informative);
  CHECK_FALSE(agg.concave);
  CHECK(agg.value == doctest::Approx(2.0));
  // Brute force: the summed quadratic is smallest there.
  auto total = [&](double x) {
    double v = 0.0;
    for (const auto& q : s) v += q(x);
    return v;
  };
  CHECK(total(agg.value) <= total(agg.value + 1e-3));
  CHECK(total(agg.value) <= total(agg.value - 1e-3));

  s.push_back({-5.0, 0.0, 1.0, SurrogateCase::peak});
  CHECK(aggregate_optimal_coordinate(s).concave);
  const std::vector<QuadraticSurrogate> flat{{0.0, 1.0, 0.0, SurrogateCase::constant}};
  CHECK_FALSE(aggregate_optimal_coordinate(flat).informative);
}

TEST_CASE("aggregate keeps precision near 10 GHz") {
  const std::vector<QuadraticSurrogate> s{{1e-12, 1e10 + 1.0, 0.0, SurrogateCase::descent},
                                          {1e-12, 1e10 + 3.0, 0.0, SurrogateCase::descent}};
  CHECK(aggregate_optimal_coordinate(s).value == doctest::Approx(1e10 + 2.0).epsilon(1e-15));
}

TEST_CASE("position projection") {
  ArrayLayout l;
  l.positions_m = RealVector{{0.0, 1.0, 2.0, 3.0}};
  l.frequencies_hz = RealVector::Constant(4, 1e10);
  CHECK(*project_position(1.7, 1, l, 0.5, 10.0) == doctest::Approx(1.5));
  CHECK(*project_position(0.1, 1, l, 0.5, 10.0) == doctest::Approx(0.5));
  CHECK(*project_position(9.0, 3, l, 0.5, 4.0) == doctest::Approx(4.0));
  CHECK(*project_position(1.2, 1, l, 0.5, 10.0) == doctest::Approx(1.2));
  CHECK_FALSE(project_position(1.0, 1, l, 1.5, 10.0).has_value());
  CHECK_THROWS_AS(project_position(0.3, 0, l, 0.5, 10.0), std::out_of_range);
  CHECK(project_frequency(9e9, 1e10, 1e7) == 1e10);
  CHECK(project_frequency(2e10, 1e10, 1e7) == 1e10 + 1e7);
  CHECK(project_frequency(1e10 + 5.0, 1e10, 1e7) == 1e10 + 5.0);
}

TEST_CASE("coordinate update never raises its own surrogate") {
  const auto cfg = high_correlation_scenario(8);
  const auto limits = LayoutLimits::from(cfg);
  const auto pts = warden_sample_points(cfg);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto layout = random_feasible_layout(cfg, rng);
    for (int m = 1; m < 8; ++m) {
      const auto up = position_update(layout, cfg.bob, pts, m, limits);
      if (up.informative && !up.concave) CHECK(up.surrogate_at_candidate <= up.surrogate_at_current + 1e-9);
      const auto fu = frequency_update(layout, cfg.bob, pts, m, limits);
      if (fu.informative && !fu.concave) CHECK(fu.surrogate_at_candidate <= fu.surrogate_at_current + 1e-9);
      CHECK(fu.candidate >= cfg.carrier_hz);
      CHECK(fu.candidate <= cfg.carrier_hz + cfg.delta_f_hz);
    }
  }
}

TEST_CASE("two antennas on one carrier: positions reach the cosine minimum") {
  // Objective 2 + 2 cos(2 pi f_C x (sin th_w - sin th_b) / c): zero at its minima.
  const auto cfg = one_warden(2, 0.0);
  const auto pts = warden_sample_points(cfg);
  const auto out = bsum_positions(start_state(cfg, phased_array_layout(cfg)), LayoutLimits::from(cfg), StopRule{});
  double grid_min = 1e300;
  for (int i = 0; i <= 200000; ++i) {
    ArrayLayout l = phased_array_layout(cfg);
    l.positions_m[1] = cfg.d_min_m + (cfg.d_max_m - cfg.d_min_m) * i / 200000.0;
    grid_min = std::min(grid_min, correlation_objective(l, cfg.bob, pts));
  }
  CHECK(grid_min < 1e-6);
  CHECK(out.objective_trace.back() <= grid_min + 1e-6);
  CHECK(out.objective_trace.back() == doctest::Approx(correlation_objective(out.layout, cfg.bob, pts)).scale(1.0));
}

TEST_CASE("two antennas: frequencies reach the brute-force minimum") {
  const auto cfg = one_warden(2, 10e6);
  const auto pts = warden_sample_points(cfg);
  const auto out =
      bsum_frequencies(start_state(cfg, frequency_ramp_layout(cfg)), LayoutLimits::from(cfg), StopRule{});
  double grid_min = 1e300;
  ArrayLayout l = phased_array_layout(cfg);
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      l.frequencies_hz[0] = cfg.carrier_hz + cfg.delta_f_hz * i / 400.0;
      l.frequencies_hz[1] = cfg.carrier_hz + cfg.delta_f_hz * j / 400.0;
      grid_min = std::min(grid_min, correlation_objective(l, cfg.bob, pts));
    }
  }
  CHECK(out.objective_trace.back() <= grid_min + 1e-6);
  CHECK(is_feasible(out.layout, LayoutLimits::from(cfg)));
}

TEST_CASE("BSUM traces are monotone, feasible and deterministic") {
  const auto cfg = low_correlation_scenario(8);
  const auto limits = LayoutLimits::from(cfg);
  StopRule stop;
  stop.max_iterations = 3000;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    const auto layout = random_feasible_layout(cfg, rng);
    const auto a = bsum_positions(start_state(cfg, layout), limits, stop);
    const auto b = bsum_positions(start_state(cfg, layout), limits, stop);
    CHECK(non_increasing(a.objective_trace));
    CHECK(is_feasible(a.layout, limits));
    CHECK(a.objective_trace == b.objective_trace);
    CHECK(a.layout == b.layout);
    CHECK(a.layout.positions_m[0] == 0.0);
    CHECK(a.objective_trace.size() == static_cast<std::size_t>(a.iteration + 1));
    CHECK(a.accepted + a.rejected == a.iteration);

    const auto f = bsum_frequencies(start_state(cfg, layout), limits, stop);
    CHECK(non_increasing(f.objective_trace));
    CHECK(is_feasible(f.layout, limits));
    CHECK(f.layout.positions_m == layout.positions_m);
  }
}

TEST_CASE("stop rule") {
  StopRule bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = StopRule{};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const auto cfg = low_correlation_scenario(6);
  StopRule short_run;
  short_run.max_iterations = 7;
  const auto out = bsum_positions(start_state(cfg, full_aperture_layout(cfg)), LayoutLimits::from(cfg), short_run);
  CHECK(out.iteration <= 7);
}
