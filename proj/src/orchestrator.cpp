#include "mfda/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mfda/covertness.hpp"

namespace mfda {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::pa: return "PA";
    case StrategyKind::fda: return "FDA";
    case StrategyKind::mfda: return "MFDA";
    case StrategyKind::perfect_covert: return "PERFECT_COVERT";
    case StrategyKind::upper_bound: return "UPPER_BOUND";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto kind : {StrategyKind::pa, StrategyKind::fda, StrategyKind::mfda, StrategyKind::perfect_covert,
                    StrategyKind::upper_bound})
    if (upper == to_string(kind)) return kind;
  throw ConfigError("strategy", "unknown strategy '" + std::string(name) + "'");
}

AoOptions default_options(const ScenarioConfig& cfg) {
  AoOptions o;
  const bool grid = cfg.uncertainty && cfg.uncertainty->samples > 1;
  o.position_stop.max_iterations = grid ? 100000 : 20000;
  o.frequency_stop.max_iterations = o.position_stop.max_iterations;
  return o;
}

double OptimizationReport::max_constraint_excess() const {
  double worst = -1.0;
  for (const auto& c : constraints) worst = std::max(worst, c.excess);
  return worst;
}

double covert_rate(const ChannelVector& h_bob, const Beamformer& w, double noise_w) {
  if (!(noise_w > 0.0)) throw std::domain_error("covert_rate: noise must be positive");
  return std::log2(1.0 + received_power(h_bob, w) / noise_w);
}

double upper_bound_rate(const ScenarioConfig& cfg) {
  const double l = path_loss_amplitude(cfg.bob.range_m, cfg.loss, LinkKind::legitimate);
  return std::log2(1.0 + l * l * cfg.p_max_w * cfg.num_antennas / cfg.noise_bob_w);
}

namespace {

ChannelVector bob_channel(const ScenarioConfig& cfg, const ArrayLayout& layout) {
  return channel_vector(layout, cfg.bob, 0.0, LinkLoss{cfg.loss, LinkKind::legitimate});
}

std::vector<ChannelVector> warden_channels(const ScenarioConfig& cfg, const ArrayLayout& layout,
                                           const SamplePointSet& points) {
  std::vector<ChannelVector> out;
  out.reserve(points.size());
  for (const auto& p : points.points) out.push_back(channel_vector(layout, p, 0.0, LinkLoss{cfg.loss, LinkKind::warden}));
  return out;
}

bool same_positions(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::abs(a(i) - b(i)) > 1e-12 * std::max(1.0, std::abs(b(i)))) return false;
  return true;
}

struct Stage1 {
  ArrayLayout layout;
  std::vector<double> position_trace;
  std::vector<double> frequency_trace;
  int rounds = 0;
};

void append_trace(std::vector<double>& into, const std::vector<double>& trace) {
  // Later blocks start where the previous one ended; drop the repeated head.
  const std::size_t skip = into.empty() ? 0 : 1;
  if (trace.size() > skip) into.insert(into.end(), trace.begin() + static_cast<long>(skip), trace.end());
}

Stage1 run_stage1(const ScenarioConfig& cfg, StrategyKind kind, const ArrayLayout& start, const AoOptions& o) {
  Stage1 out;
  out.layout = start;
  if (kind == StrategyKind::pa || kind == StrategyKind::upper_bound) return out;

  const LayoutLimits limits = LayoutLimits::from(cfg);
  BsumState state;
  state.layout = start;
  state.bob = cfg.bob;
  state.warden_points = warden_sample_points(cfg);

  auto run_block = [&](bool positions) {
    state.objective_trace.clear();
    state.iteration = 0;
    state = positions ? bsum_positions(std::move(state), limits, o.position_stop)
                      : bsum_frequencies(std::move(state), limits, o.frequency_stop);
    append_trace(positions ? out.position_trace : out.frequency_trace, state.objective_trace);
  };

  if (kind == StrategyKind::fda) {
    run_block(false);
    out.rounds = 1;
  } else {
    double previous = correlation_objective(state.layout, cfg.bob, state.warden_points);
    for (int round = 1; round <= o.max_stage1_rounds; ++round) {
      // Frequencies first: the position block starts from optimized f.
      run_block(false);
      run_block(true);
      out.rounds = round;
      const double current = correlation_objective(state.layout, cfg.bob, state.warden_points);
      if (std::abs(previous - current) <= o.tolerance) break;
      previous = current;
    }
  }
  out.layout = state.layout;
  return out;
}

struct Stage2 {
  Beamformer w;
  SolverDiagnostics diagnostics;
};

Stage2 run_stage2(const ScenarioConfig& cfg, StrategyKind kind, const ArrayLayout& layout, const AoOptions& o) {
  Stage2 out;
  if (kind == StrategyKind::perfect_covert) {
    const auto channels = warden_channels(cfg, layout, warden_sample_points(cfg));
    out.w = nullspace_beamformer(bob_channel(cfg, layout), channels, cfg.p_max_w);
    out.diagnostics.method = "nullspace";
    return out;
  }
  const BeamformingProblem problem = build_problem(cfg, layout);
  if (o.solver == Stage2Solver::socp) {
    out.w = solve_socp_exact(problem, &out.diagnostics);
  } else {
    const SdrSolution sdr = solve_sdr(problem);
    out.w = randomize(sdr, problem, o.randomization_samples, o.seed);
    out.diagnostics = sdr.diagnostics;
    out.diagnostics.method += sdr.rank1 ? "+eigenvector" : "+randomization";
  }
  return out;
}

OptimizationReport make_report(const ScenarioConfig& cfg, StrategyKind kind, const ArrayLayout& layout,
                               const Stage2& s2, const AoOptions& o) {
  OptimizationReport r;
  r.strategy = kind;
  r.scenario = cfg;
  r.final_layout = layout;
  r.final_beamformer = s2.w;
  r.solver = s2.diagnostics;
  r.seed = o.seed;
  r.covert_rate_bits = covert_rate(bob_channel(cfg, layout), s2.w, cfg.noise_bob_w);
  r.constraints = evaluate_constraints(cfg, layout, s2.w);
  return r;
}

}  // namespace

BeamformingProblem build_problem(const ScenarioConfig& cfg, const ArrayLayout& layout) {
  const SamplePointSet points = warden_sample_points(cfg);
  BeamformingProblem p;
  p.h_bob = bob_channel(cfg, layout);
  p.warden_channels = warden_channels(cfg, layout, points);
  p.thresholds_w.reserve(points.size());
  for (int owner : points.owner)
    p.thresholds_w.push_back(covert_power_threshold(cfg.willies[owner].noise_w, cfg.epsilon));
  p.p_max_w = cfg.p_max_w;
  return p;
}

ArrayLayout strategy_start(const ScenarioConfig& cfg, StrategyKind kind, PositionStart start) {
  if (kind == StrategyKind::pa || kind == StrategyKind::upper_bound) return phased_array_layout(cfg);
  if (kind == StrategyKind::fda || start == PositionStart::phased_array) return frequency_ramp_layout(cfg);
  return full_aperture_layout(cfg);
}

bool layout_allowed(const ScenarioConfig& cfg, StrategyKind kind, const ArrayLayout& layout) {
  if (layout.size() != cfg.num_antennas) return false;
  if (!is_feasible(layout, LayoutLimits::from(cfg), 1e-9)) return false;
  const ArrayLayout pa = phased_array_layout(cfg);
  switch (kind) {
    case StrategyKind::pa:
    case StrategyKind::upper_bound:
      return same_positions(layout.positions_m, pa.positions_m) &&
             same_positions(layout.frequencies_hz, pa.frequencies_hz);
    case StrategyKind::fda: return same_positions(layout.positions_m, pa.positions_m);
    default: return true;
  }
}

std::vector<ConstraintEntry> evaluate_constraints(const ScenarioConfig& cfg, const ArrayLayout& layout,
                                                  const Beamformer& w) {
  const SamplePointSet points = warden_sample_points(cfg);
  const auto channels = warden_channels(cfg, layout, points);
  std::vector<ConstraintEntry> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    ConstraintEntry e;
    e.warden = points.owner[i];
    e.point = points.points[i];
    const double noise = cfg.willies[e.warden].noise_w;
    e.received_w = received_power(channels[i], w);
    e.threshold_w = covert_power_threshold(noise, cfg.epsilon);
    const auto stats = DetectionStats<double>::from_signal(noise, e.received_w);
    e.kl = kl_divergence(stats);
    e.dep_lower_bound = dep_lower_bound(stats);
    e.excess = e.threshold_w > 0.0 ? (e.received_w - e.threshold_w) / e.threshold_w : e.received_w / noise;
    out.push_back(e);
  }
  return out;
}

OptimizationReport run_two_stage_ao(const ScenarioConfig& cfg, StrategyKind kind, const AoOptions& o) {
  cfg.validate();
  if (!(o.tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
  if (o.max_outer_iterations < 2) throw ConfigError("max_outer_iterations", "must be at least 2");

  if (kind == StrategyKind::upper_bound) {
    const ArrayLayout layout = phased_array_layout(cfg);
    const ChannelVector h = bob_channel(cfg, layout);
    Stage2 s2;
    s2.w.weights = std::sqrt(cfg.p_max_w) * h.entries.adjoint() / h.entries.norm();
    s2.diagnostics.method = "closed-form";
    OptimizationReport r = make_report(cfg, kind, layout, s2, o);
    r.covert_rate_bits = upper_bound_rate(cfg);
    return r;
  }

  ArrayLayout layout = o.initial_layout ? *o.initial_layout : strategy_start(cfg, kind, o.position_start);
  if (!layout_allowed(cfg, kind, layout))
    throw ConfigError("initial_layout", "not in the feasible set of " + std::string(to_string(kind)));

  OptimizationReport report;
  double previous = 0.0;
  for (int outer = 1; outer <= o.max_outer_iterations; ++outer) {
    Stage1 s1 = run_stage1(cfg, kind, layout, o);
    layout = s1.layout;
    const Stage2 s2 = run_stage2(cfg, kind, layout, o);
    OptimizationReport next = make_report(cfg, kind, layout, s2, o);
    next.position_trace = std::move(report.position_trace);
    next.frequency_trace = std::move(report.frequency_trace);
    append_trace(next.position_trace, s1.position_trace);
    append_trace(next.frequency_trace, s1.frequency_trace);
    next.stage1_rounds = report.stage1_rounds + s1.rounds;
    next.outer_iterations = outer;
    report = std::move(next);
    if (outer >= 2 && std::abs(report.covert_rate_bits - previous) <= o.tolerance) break;
    previous = report.covert_rate_bits;
  }
  return report;
}

OptimizationReport warm_start_retry(const ScenarioConfig& cfg, OptimizationReport report,
                                    std::span<const ArrayLayout> candidates, const AoOptions& o) {
  const StrategyKind kind = report.strategy;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const ArrayLayout& start = candidates[i];
    if (!layout_allowed(cfg, kind, start)) {
      report.notes.push_back("warm start " + std::to_string(i) + " skipped: layout outside the feasible set");
      continue;
    }
    OptimizationReport as_is = make_report(cfg, kind, start, run_stage2(cfg, kind, start, o), o);
    as_is.outer_iterations = 1;
    AoOptions restart = o;
    restart.initial_layout = start;
    OptimizationReport rerun = run_two_stage_ao(cfg, kind, restart);
    OptimizationReport& best = rerun.covert_rate_bits >= as_is.covert_rate_bits ? rerun : as_is;
    if (best.covert_rate_bits > report.covert_rate_bits) {
      best.notes = std::move(report.notes);
      best.notes.push_back("warm start " + std::to_string(i) + " raised the rate from " +
                           std::to_string(report.covert_rate_bits) + " to " +
                           std::to_string(best.covert_rate_bits) + " bits");
      report = std::move(best);
    }
  }
  return report;
}

OptimizationReport enforce_nesting(const ScenarioConfig& looser_cfg, OptimizationReport looser,
                                   const OptimizationReport& tighter, const AoOptions& o) {
  if (looser.covert_rate_bits >= tighter.covert_rate_bits) return looser;
  looser.notes.push_back("rate " + std::to_string(looser.covert_rate_bits) + " below the nested " +
                         std::string(to_string(tighter.strategy)) + " result " +
                         std::to_string(tighter.covert_rate_bits) + "; retrying from its layout");
  const ArrayLayout candidate = tighter.final_layout;
  return warm_start_retry(looser_cfg, std::move(looser), std::span<const ArrayLayout>(&candidate, 1), o);
}

std::vector<OptimizationReport> run_strategies(const ScenarioConfig& cfg, std::span<const StrategyKind> kinds,
                                               const AoOptions& o) {
  auto wanted = [&](StrategyKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  std::optional<OptimizationReport> pa, fda, perfect, mfda, bound;
  if (wanted(StrategyKind::pa)) pa = run_two_stage_ao(cfg, StrategyKind::pa, o);
  if (wanted(StrategyKind::fda)) {
    fda = run_two_stage_ao(cfg, StrategyKind::fda, o);
    if (pa) fda = enforce_nesting(cfg, std::move(*fda), *pa, o);
  }
  if (wanted(StrategyKind::perfect_covert)) perfect = run_two_stage_ao(cfg, StrategyKind::perfect_covert, o);
  if (wanted(StrategyKind::mfda)) {
    mfda = run_two_stage_ao(cfg, StrategyKind::mfda, o);
    for (const auto* tighter : {&fda, &pa, &perfect})
      if (*tighter) mfda = enforce_nesting(cfg, std::move(*mfda), **tighter, o);
  }
  if (wanted(StrategyKind::upper_bound)) bound = run_two_stage_ao(cfg, StrategyKind::upper_bound, o);

  std::vector<OptimizationReport> out;
  for (auto k : kinds) {
    switch (k) {
      case StrategyKind::pa: out.push_back(*pa); break;
      case StrategyKind::fda: out.push_back(*fda); break;
      case StrategyKind::mfda: out.push_back(*mfda); break;
      case StrategyKind::perfect_covert: out.push_back(*perfect); break;
      case StrategyKind::upper_bound: out.push_back(*bound); break;
    }
  }
  return out;
}

VerificationResult verify_report(const OptimizationReport& report, const ScenarioConfig& cfg) {
  constexpr double kRel = 1e-9;
  VerificationResult v;
  v.covert_exempt = report.strategy == StrategyKind::upper_bound;
  const ArrayLayout& layout = report.final_layout;
  const Beamformer& w = report.final_beamformer;

  if (layout.size() != cfg.num_antennas || w.size() != cfg.num_antennas) {
    v.violations.push_back("layout or beamformer size differs from the scenario's antenna count");
    return v;
  }
  std::string why;
  if (!is_feasible(layout, LayoutLimits::from(cfg), 1e-9, &why)) v.violations.push_back("layout: " + why);
  if (w.power() > cfg.p_max_w * (1.0 + kRel))
    v.violations.push_back("transmit power " + std::to_string(w.power()) + " W exceeds P_max");

  v.recomputed_rate_bits = report.strategy == StrategyKind::upper_bound
                               ? upper_bound_rate(cfg)
                               : covert_rate(bob_channel(cfg, layout), w, cfg.noise_bob_w);
  if (std::abs(v.recomputed_rate_bits - report.covert_rate_bits) > kRel * std::max(1.0, v.recomputed_rate_bits))
    v.violations.push_back("reported rate " + std::to_string(report.covert_rate_bits) + " differs from recomputed " +
                           std::to_string(v.recomputed_rate_bits));

  v.constraints = evaluate_constraints(cfg, layout, w);
  if (v.covert_exempt) return v;
  const double kl_limit = 2.0 * cfg.epsilon * cfg.epsilon + 1e-10;
  const double dep_limit = 1.0 - cfg.epsilon * (1.0 + 1e-6);
  for (std::size_t i = 0; i < v.constraints.size(); ++i) {
    const auto& c = v.constraints[i];
    const std::string where = "point " + std::to_string(i) + " (warden " + std::to_string(c.warden) + ")";
    const bool zero = c.threshold_w == 0.0;
    if (zero ? c.excess > 1e-10 : c.excess > kRel)
      v.violations.push_back(where + ": received power exceeds the covert threshold");
    if (c.kl > kl_limit) v.violations.push_back(where + ": KL divergence above 2 eps^2");
    if (c.dep_lower_bound < dep_limit) v.violations.push_back(where + ": detection error bound below 1 - eps");
  }
  return v;
}

VerificationResult verify_report(const OptimizationReport& report) { return verify_report(report, report.scenario); }

}  // namespace mfda
