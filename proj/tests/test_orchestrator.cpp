#include <doctest.h>

#include <cmath>

#include "mfda/covertness.hpp"
#include "mfda/orchestrator.hpp"

using namespace mfda;

namespace {

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("mfda") == StrategyKind::mfda);
  CHECK(parse_strategy("Perfect_Covert") == StrategyKind::perfect_covert);
  CHECK(to_string(StrategyKind::upper_bound) == "UPPER_BOUND");
  CHECK_THROWS_AS(parse_strategy("ZF"), ConfigError);
}

TEST_CASE("upper bound closed form") {
  CHECK(upper_bound_rate(low_correlation_scenario(10)) == doctest::Approx(std::log2(1001.0)).epsilon(1e-12));
  CHECK(upper_bound_rate(low_correlation_scenario(20)) == doctest::Approx(10.966).epsilon(1e-4));
  const auto r = run_two_stage_ao(low_correlation_scenario(10), StrategyKind::upper_bound, AoOptions{});
  CHECK(r.covert_rate_bits == doctest::Approx(9.967).epsilon(1e-4));
  CHECK(verify_report(r).passed());
  CHECK(verify_report(r).covert_exempt);
}

TEST_CASE("problem assembly") {
  const auto cfg = imperfect_csi_scenario(6, 3);
  const auto layout = full_aperture_layout(cfg);
  const auto p = build_problem(cfg, layout);
  CHECK(p.warden_channels.size() == 27);
  CHECK(p.p_max_w == cfg.p_max_w);
  for (double t : p.thresholds_w) CHECK(t == doctest::Approx(covert_power_threshold(1e-13, 0.1)));
  CHECK(std::abs(p.h_bob.entries[0]) == doctest::Approx(path_loss_amplitude(1000.0, cfg.loss, LinkKind::legitimate)));
  CHECK(std::abs(p.warden_channels[0].entries[0]) ==
        doctest::Approx(path_loss_amplitude(1090.0, cfg.loss, LinkKind::warden)));
}

TEST_CASE("strategy feasible sets") {
  const auto cfg = low_correlation_scenario(6);
  const auto pa = strategy_start(cfg, StrategyKind::pa);
  const auto fda = strategy_start(cfg, StrategyKind::fda);
  const auto mfda = strategy_start(cfg, StrategyKind::mfda);
  CHECK(pa == phased_array_layout(cfg));
  CHECK(fda == frequency_ramp_layout(cfg));
  CHECK(mfda == full_aperture_layout(cfg));
  CHECK(strategy_start(cfg, StrategyKind::mfda, PositionStart::phased_array) == frequency_ramp_layout(cfg));
  CHECK(layout_allowed(cfg, StrategyKind::pa, pa));
  CHECK_FALSE(layout_allowed(cfg, StrategyKind::pa, fda));
  CHECK(layout_allowed(cfg, StrategyKind::fda, fda));
  CHECK(layout_allowed(cfg, StrategyKind::fda, pa));
  CHECK_FALSE(layout_allowed(cfg, StrategyKind::fda, mfda));
  CHECK(layout_allowed(cfg, StrategyKind::mfda, pa));
  CHECK(layout_allowed(cfg, StrategyKind::mfda, mfda));
}

TEST_CASE("two-stage runs satisfy the covert constraints") {
  const auto cfg = high_correlation_scenario(8);
  const AoOptions o = default_options(cfg);
  for (auto kind : {StrategyKind::pa, StrategyKind::fda, StrategyKind::mfda, StrategyKind::perfect_covert}) {
    const auto r = run_two_stage_ao(cfg, kind, o);
    const auto v = verify_report(r);
    CHECK_MESSAGE(v.passed(), to_string(kind));
    CHECK(r.outer_iterations >= 2);
    CHECK(r.outer_iterations <= o.max_outer_iterations);
    CHECK(r.covert_rate_bits <= upper_bound_rate(cfg) + 1e-9);
    CHECK(r.covert_rate_bits == doctest::Approx(v.recomputed_rate_bits).epsilon(1e-12));
    CHECK(non_increasing(r.position_trace));
    CHECK(non_increasing(r.frequency_trace));
    CHECK(layout_allowed(cfg, kind, r.final_layout));
    CHECK(r.constraints.size() == 4);
  }
}

TEST_CASE("strategy dominance after warm starts") {
  for (const auto& cfg : {low_correlation_scenario(8), high_correlation_scenario(12)}) {
    const std::vector<StrategyKind> kinds{StrategyKind::pa, StrategyKind::fda, StrategyKind::mfda,
                                          StrategyKind::perfect_covert, StrategyKind::upper_bound};
    const auto reports = run_strategies(cfg, kinds, default_options(cfg));
    REQUIRE(reports.size() == 5);
    CHECK(reports[1].covert_rate_bits >= reports[0].covert_rate_bits);
    CHECK(reports[2].covert_rate_bits >= reports[1].covert_rate_bits);
    CHECK(reports[2].covert_rate_bits >= reports[3].covert_rate_bits);
    CHECK(reports[4].covert_rate_bits >= reports[2].covert_rate_bits - 1e-9);
    for (const auto& r : reports) CHECK(verify_report(r).passed());
  }
}

TEST_CASE("more power or a looser budget never lowers the phased-array rate") {
  auto cfg = low_correlation_scenario(6);
  double previous = 0.0;
  for (double dbm : {-10.0, 0.0, 10.0, 20.0}) {
    cfg.p_max_w = dbm_to_watts(dbm);
    const double rate = run_two_stage_ao(cfg, StrategyKind::pa, default_options(cfg)).covert_rate_bits;
    CHECK(rate >= previous - 1e-9);
    previous = rate;
  }
  cfg = high_correlation_scenario(6);
  previous = 0.0;
  for (double eps : {0.01, 0.05, 0.1, 0.3}) {
    cfg.epsilon = eps;
    const double rate = run_two_stage_ao(cfg, StrategyKind::pa, default_options(cfg)).covert_rate_bits;
    CHECK(rate >= previous - 1e-9);
    previous = rate;
  }
}

TEST_CASE("perfect covertness nulls every warden") {
  const auto cfg = low_correlation_scenario(10);
  const auto r = run_two_stage_ao(cfg, StrategyKind::perfect_covert, default_options(cfg));
  CHECK(r.final_beamformer.power() == doctest::Approx(cfg.p_max_w).epsilon(1e-9));
  for (const auto& c : r.constraints) CHECK(c.received_w <= 1e-10 * 1e-13);
  CHECK(r.solver.method == "nullspace");
  CHECK_THROWS_AS(run_two_stage_ao(high_correlation_scenario(4), StrategyKind::perfect_covert, AoOptions{}),
                  GeometryError);
}

TEST_CASE("SDR stage 2 matches the exact solver") {
  const auto cfg = high_correlation_scenario(6);
  AoOptions socp = default_options(cfg);
  AoOptions sdr = socp;
  sdr.solver = Stage2Solver::sdr;
  const auto a = run_two_stage_ao(cfg, StrategyKind::pa, socp);
  const auto b = run_two_stage_ao(cfg, StrategyKind::pa, sdr);
  CHECK(b.covert_rate_bits <= a.covert_rate_bits + 1e-9);
  CHECK(b.covert_rate_bits == doctest::Approx(a.covert_rate_bits).epsilon(1e-6));
  CHECK(verify_report(b).passed());
}

TEST_CASE("nesting retry raises a low result") {
  const auto cfg = high_correlation_scenario(8);
  const AoOptions o = default_options(cfg);
  const auto fda = run_two_stage_ao(cfg, StrategyKind::fda, o);
  // An MFDA report that kept a poor layout: the phased array with a tiny beam.
  OptimizationReport weak = run_two_stage_ao(cfg, StrategyKind::pa, o);
  weak.strategy = StrategyKind::mfda;
  weak.final_beamformer.weights *= 1e-3;
  weak.covert_rate_bits = 1e-3;
  const auto fixed = enforce_nesting(cfg, weak, fda, o);
  CHECK(fixed.covert_rate_bits >= fda.covert_rate_bits);
  CHECK_FALSE(fixed.notes.empty());
  CHECK(verify_report(fixed).passed());
}

TEST_CASE("verification catches tampering") {
  const auto cfg = low_correlation_scenario(8);
  const auto good = run_two_stage_ao(cfg, StrategyKind::mfda, default_options(cfg));
  REQUIRE(verify_report(good).passed());

  auto loud = good;
  loud.final_beamformer.weights *= 2.0;
  CHECK_FALSE(verify_report(loud).passed());

  auto wrong_rate = good;
  wrong_rate.covert_rate_bits += 1e-6;
  CHECK_FALSE(verify_report(wrong_rate).passed());

  auto moved = good;
  moved.final_layout.positions_m[1] = 0.1 * cfg.d_min_m;
  CHECK_FALSE(verify_report(moved).passed());

  // The phased array's constraints bind in the high-correlation scenario, so
  // a smaller epsilon makes the same beam a violation.
  const auto high = high_correlation_scenario(8);
  const auto pa = run_two_stage_ao(high, StrategyKind::pa, default_options(high));
  REQUIRE(pa.max_constraint_excess() > -1e-6);
  auto strict = high;
  strict.epsilon = 0.05;
  CHECK_FALSE(verify_report(pa, strict).passed());
}

TEST_CASE("report JSON round trip") {
  const auto cfg = imperfect_csi_scenario(6, 3);
  const auto r = run_two_stage_ao(cfg, StrategyKind::fda, default_options(cfg));
  const auto back = parse_report(render_report(r));
  CHECK(back.strategy == r.strategy);
  CHECK(back.final_layout == r.final_layout);
  CHECK(back.final_beamformer.weights == r.final_beamformer.weights);
  CHECK(back.covert_rate_bits == r.covert_rate_bits);
  CHECK(back.position_trace == r.position_trace);
  CHECK(back.frequency_trace == r.frequency_trace);
  CHECK(back.constraints.size() == r.constraints.size());
  CHECK(approx_equal(back.scenario, r.scenario, 1e-12));
  CHECK(verify_report(back).passed());

  CHECK_THROWS_AS(parse_report("{}"), ConfigError);
  CHECK_THROWS_AS(parse_report("{\"strategy\": \"MFDA\"}"), ConfigError);
  CHECK_THROWS_AS(parse_report("[]"), ConfigError);
}
