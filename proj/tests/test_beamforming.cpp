#include <doctest.h>

#include <cmath>
#include <random>

#include "mfda/beamforming.hpp"

using namespace mfda;

namespace {

ChannelVector random_channel(int m, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ChannelVector h;
  h.scaled = true;
  h.entries.resize(m);
  for (int i = 0; i < m; ++i) h.entries[i] = scale * Complex(n(rng), n(rng));
  return h;
}

// Thresholds drawn as a fraction of what the MRT beamformer would deliver,
// so some constraints bind and some do not.
BeamformingProblem random_problem(int m, int k, std::mt19937_64& rng) {
  BeamformingProblem p;
  p.h_bob = random_channel(m, 1e-5, rng);
  p.p_max_w = 1e-2;
  Beamformer mrt;
  mrt.weights = std::sqrt(p.p_max_w) * p.h_bob.entries.adjoint() / p.h_bob.entries.norm();
  std::uniform_real_distribution<double> frac(0.01, 1.5);
  for (int i = 0; i < k; ++i) {
    p.warden_channels.push_back(random_channel(m, 1e-6, rng));
    p.thresholds_w.push_back(frac(rng) * received_power(p.warden_channels.back(), mrt));
  }
  return p;
}

}  // namespace

TEST_CASE("no active wardens gives the matched filter") {
  std::mt19937_64 rng(1);
  auto p = random_problem(6, 2, rng);
  for (auto& t : p.thresholds_w) t = kNoThreshold;
  const Beamformer w = solve_socp_exact(p);
  const double expected = p.p_max_w * p.h_bob.entries.squaredNorm();
  CHECK(beamforming_objective(p, w) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(w.power() == doctest::Approx(p.p_max_w).epsilon(1e-9));
  const Complex hw = (p.h_bob.entries * w.weights).value();
  CHECK(std::abs(hw.imag()) <= 1e-9 * std::abs(hw));
  CHECK(solve_sdr(p).value_w == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("zero thresholds reproduce the null-space projection") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_problem(5, 3, rng);
    for (auto& t : p.thresholds_w) t = 0.0;
    const Beamformer zf = nullspace_beamformer(p.h_bob, p.warden_channels, p.p_max_w);
    const Beamformer w = solve_socp_exact(p);
    CHECK(beamforming_objective(p, w) == doctest::Approx(beamforming_objective(p, zf)).epsilon(1e-8));
    for (const auto& g : p.warden_channels) {
      CHECK(received_power(g, zf) <= 1e-20 * p.p_max_w * g.entries.squaredNorm());
      CHECK(received_power(g, w) <= 1e-18 * p.p_max_w * g.entries.squaredNorm());
    }
    CHECK(zf.power() == doctest::Approx(p.p_max_w).epsilon(1e-12));
  }
}

TEST_CASE("null-space beamformer rejects degenerate geometry") {
  std::mt19937_64 rng(3);
  const auto h = random_channel(3, 1.0, rng);
  std::vector<ChannelVector> g{random_channel(3, 1.0, rng), random_channel(3, 1.0, rng), random_channel(3, 1.0, rng)};
  CHECK_THROWS_AS(nullspace_beamformer(h, g, 1.0), GeometryError);
  g.resize(2);
  g[1] = g[0];
  CHECK_THROWS_AS(nullspace_beamformer(h, g, 1.0), GeometryError);
  std::vector<ChannelVector> one{h};
  CHECK_THROWS_AS(nullspace_beamformer(h, one, 1.0), GeometryError);
}

TEST_CASE("SOCP and SDR agree and randomization stays below") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 2 + trial % 6;
    const int k = 1 + trial % 4;
    const auto p = random_problem(m, k, rng);
    SolverDiagnostics diag;
    const Beamformer w = solve_socp_exact(p, &diag);
    const SdrSolution sdr = solve_sdr(p);
    const double v = beamforming_objective(p, w);
    CHECK(v == doctest::Approx(sdr.value_w).epsilon(1e-6));
    CHECK(max_constraint_ratio(p, w) <= 1.0 + 1e-9);
    CHECK(sdr.dual_bound_w >= sdr.value_w * (1.0 - 1e-9));
    const Beamformer r = randomize(sdr, p, 200, 9);
    CHECK(beamforming_objective(p, r) <= sdr.value_w * (1.0 + 1e-9));
    CHECK(max_constraint_ratio(p, r) <= 1.0 + 1e-9);
    CHECK(diag.newton_steps > 0);
  }
}

TEST_CASE("two antennas: no sampled beamformer beats the SOCP value") {
  std::mt19937_64 rng(5);
  const auto p = random_problem(2, 1, rng);
  const double best = beamforming_objective(p, solve_socp_exact(p));
  std::normal_distribution<double> n(0.0, 1.0);
  double sampled = 0.0;
  for (int i = 0; i < 100000; ++i) {
    Beamformer w;
    w.weights = ComplexVector{{Complex(n(rng), n(rng)), Complex(n(rng), n(rng))}};
    // Scale onto the boundary of the feasible set.
    w.weights /= std::sqrt(max_constraint_ratio(p, w));
    sampled = std::max(sampled, beamforming_objective(p, w));
  }
  CHECK(sampled <= best * (1.0 + 1e-9));
  CHECK(sampled >= 0.9 * best);
}

TEST_CASE("value ordering: null space <= covert optimum <= matched filter") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_problem(6, 3, rng);
    const double covert = beamforming_objective(p, solve_socp_exact(p));
    const double zf = beamforming_objective(p, nullspace_beamformer(p.h_bob, p.warden_channels, p.p_max_w));
    const double mrt = p.p_max_w * p.h_bob.entries.squaredNorm();
    CHECK(zf <= covert * (1.0 + 1e-9));
    CHECK(covert <= mrt * (1.0 + 1e-9));
  }
}

TEST_CASE("looser thresholds never lower the value and shrink to the null space") {
  std::mt19937_64 rng(7);
  auto p = random_problem(5, 2, rng);
  const auto base = p.thresholds_w;
  const double zf = beamforming_objective(p, nullspace_beamformer(p.h_bob, p.warden_channels, p.p_max_w));
  double previous = zf;
  for (double scale : {1e-12, 1e-8, 1e-4, 1e-2, 1.0, 10.0}) {
    for (std::size_t i = 0; i < base.size(); ++i) p.thresholds_w[i] = scale * base[i];
    const double v = beamforming_objective(p, solve_socp_exact(p));
    CHECK(v >= previous * (1.0 - 1e-8));
    previous = v;
    if (scale == 1e-12) CHECK(v == doctest::Approx(zf).epsilon(1e-4));
  }
}

TEST_CASE("problem validation") {
  std::mt19937_64 rng(8);
  auto p = random_problem(4, 2, rng);
  p.thresholds_w.pop_back();
  CHECK_THROWS_AS(solve_socp_exact(p), ConfigError);
  p = random_problem(4, 2, rng);
  p.thresholds_w[0] = -1.0;
  CHECK_THROWS_AS(solve_sdr(p), ConfigError);
  p = random_problem(4, 1, rng);
  p.warden_channels[0].entries.conservativeResize(3);
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
