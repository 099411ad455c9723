#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfda/beamforming.hpp"
#include "mfda/bsum.hpp"

namespace mfda {

enum class StrategyKind { pa, fda, mfda, perfect_covert, upper_bound };

std::string_view to_string(StrategyKind kind);
/// Accepts the names printed by to_string ("PA", "FDA", "MFDA",
/// "PERFECT_COVERT", "UPPER_BOUND"), case-insensitively.
StrategyKind parse_strategy(std::string_view name);

enum class Stage2Solver { socp, sdr };

/// Stage-1 start for strategies that move antennas.
enum class PositionStart {
  full_aperture,  ///< uniform spacing D_max / (M - 1)
  phased_array,   ///< lambda / 2 spacing
};

struct AoOptions {
  StopRule position_stop;
  StopRule frequency_stop;
  /// Change of the correlation objective between stage-1 rounds, and of the
  /// covert rate between outer iterations, below which a loop stops.
  double tolerance = 1e-6;
  int max_stage1_rounds = 50;
  int max_outer_iterations = 5;
  Stage2Solver solver = Stage2Solver::socp;
  PositionStart position_start = PositionStart::full_aperture;
  int randomization_samples = 1000;
  std::uint64_t seed = 0;
  /// Stage-1 starting point; the strategy's default start when empty.
  std::optional<ArrayLayout> initial_layout;
};

/// Defaults for a scenario: BSUM budgets of 2e4 updates with perfect CSI and
/// 1e5 with an uncertainty grid.
AoOptions default_options(const ScenarioConfig& cfg);

/// One protected point with the quantities the warden would observe.
struct ConstraintEntry {
  int warden = 0;
  PolarCoordinate point;
  double received_w = 0.0;
  double threshold_w = 0.0;
  double kl = 0.0;
  double dep_lower_bound = 1.0;
  /// (received - threshold) / threshold; received / noise for a zero
  /// threshold. Non-positive when the constraint holds.
  double excess = 0.0;
};

struct OptimizationReport {
  StrategyKind strategy = StrategyKind::mfda;
  ScenarioConfig scenario;
  ArrayLayout final_layout;
  Beamformer final_beamformer;
  double covert_rate_bits = 0.0;
  std::vector<double> position_trace;
  std::vector<double> frequency_trace;
  int outer_iterations = 0;
  int stage1_rounds = 0;
  std::vector<ConstraintEntry> constraints;
  SolverDiagnostics solver;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  /// Largest ConstraintEntry::excess; -1 when there are no entries.
  double max_constraint_excess() const;
};

/// log2(1 + |h w|^2 / noise).
double covert_rate(const ChannelVector& h_bob, const Beamformer& w, double noise_w);

/// log2(1 + Lfs(r_b)^2 P_max M / noise), the full array gain with no wardens.
double upper_bound_rate(const ScenarioConfig& cfg);

/// Scaled channels toward Bob and every protected warden point of `cfg`,
/// with thresholds from each owner's noise and cfg.epsilon.
BeamformingProblem build_problem(const ScenarioConfig& cfg, const ArrayLayout& layout);

/// The strategy's starting layout: the phased array for PA, the frequency
/// ramp on phased-array positions for FDA, and the ramp on `start`
/// positions for MFDA and PERFECT_COVERT.
ArrayLayout strategy_start(const ScenarioConfig& cfg, StrategyKind kind,
                           PositionStart start = PositionStart::full_aperture);

/// True when `layout` lies in the strategy's feasible set.
bool layout_allowed(const ScenarioConfig& cfg, StrategyKind kind, const ArrayLayout& layout);

/// Per-point constraint diagnostics for a beamformer on a layout.
std::vector<ConstraintEntry> evaluate_constraints(const ScenarioConfig& cfg, const ArrayLayout& layout,
                                                  const Beamformer& w);

/// Stage 1 then stage 2, repeated until the covert rate settles (at least
/// two outer iterations). UPPER_BOUND returns the closed form with an MRT
/// beamformer on the phased array.
OptimizationReport run_two_stage_ao(const ScenarioConfig& cfg, StrategyKind kind, const AoOptions& options);

/// Re-runs the report's strategy from each candidate layout it admits, both
/// as given and after stage 1 restarted there, and keeps the highest rate.
OptimizationReport warm_start_retry(const ScenarioConfig& cfg, OptimizationReport report,
                                    std::span<const ArrayLayout> candidates, const AoOptions& options);

/// When `looser` (a problem whose feasible set contains that of `tighter`'s)
/// reports a lower rate, retries from the tighter layout and notes it.
OptimizationReport enforce_nesting(const ScenarioConfig& looser_cfg, OptimizationReport looser,
                                   const OptimizationReport& tighter, const AoOptions& options);

/// Runs several strategies on one scenario and restores
/// PA <= FDA <= MFDA and PERFECT_COVERT <= MFDA by warm starts.
std::vector<OptimizationReport> run_strategies(const ScenarioConfig& cfg, std::span<const StrategyKind> kinds,
                                               const AoOptions& options);

struct VerificationResult {
  std::vector<ConstraintEntry> constraints;
  std::vector<std::string> violations;
  double recomputed_rate_bits = 0.0;
  bool covert_exempt = false;  ///< UPPER_BOUND ignores the wardens

  bool passed() const { return violations.empty(); }
};

/// Recomputes every constraint, KL value, DEP bound and the rate from the
/// scenario, layout and beamformer alone. Flags violations beyond 1e-9
/// relative.
VerificationResult verify_report(const OptimizationReport& report, const ScenarioConfig& cfg);
VerificationResult verify_report(const OptimizationReport& report);

std::string render_report(const OptimizationReport& report);
OptimizationReport parse_report(std::string_view text);

}  // namespace mfda
