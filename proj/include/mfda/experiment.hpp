#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfda/orchestrator.hpp"

namespace mfda {

/// Evenly spaced samples lo, ..., hi (n >= 2, both ends included).
struct GridSpan {
  double lo = 0.0;
  double hi = 0.0;
  int n = 2;

  double at(int i) const { return lo + (hi - lo) * i / (n - 1); }
  void validate(const std::string& field) const;
};

/// "lo,hi,n".
GridSpan parse_grid_span(std::string_view text, const std::string& field);

struct BeampatternOptions {
  GridSpan range_m{800.0, 1200.0, 201};
  GridSpan angle_deg{0.0, 60.0, 201};
  /// Multiply by the real Lfs(r) of each cell instead of a fixed reference.
  bool raw_power = false;
};

/// Entry (i, j) = |h(r_i, theta_j) w|^2 with loss-free steering vectors times
/// reference_loss^2, or times Lfs(r_i)^2 of `raw_loss` when given.
RealMatrix beampattern_grid(const ArrayLayout& layout, const Beamformer& w, const GridSpan& range_m,
                            const GridSpan& angle_deg, double reference_loss,
                            const std::optional<LinkLoss>& raw_loss = std::nullopt);

/// Grid for a report: reference loss Lfs(r_b) on Bob's link.
RealMatrix beampattern_grid(const OptimizationReport& report, const BeampatternOptions& options);

/// (r_m, theta_deg, power) rows, range-major.
std::string beampattern_csv(const RealMatrix& grid, const GridSpan& range_m, const GridSpan& angle_deg);

enum class ExperimentKind { trace, rate_vs_m, rate_vs_budget, beampattern, imperfect_sweep };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentSpec {
  ScenarioConfig scenario;
  std::string scenario_source;  ///< path or builtin name, for the manifest
  ExperimentKind kind = ExperimentKind::rate_vs_m;
  /// Antenna counts (trace, rate_vs_m, beampattern), P_max in dBm
  /// (rate_vs_budget) or samples per axis L (imperfect_sweep).
  std::vector<double> sweep;
  std::vector<StrategyKind> strategies{StrategyKind::pa, StrategyKind::fda, StrategyKind::mfda,
                                       StrategyKind::perfect_covert, StrategyKind::upper_bound};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "results";
  int threads = 1;
  Stage2Solver solver = Stage2Solver::socp;
  /// Grid spacing for imperfect_sweep.
  double spacing_r_m = 10.0;
  double spacing_theta_deg = 1.0;
  BeampatternOptions beampattern;

  void validate() const;
};

/// Parses an experiment document. `base_dir` resolves a relative scenario
/// path. The scenario is a path, an inline object, or one of "builtin:low",
/// "builtin:high", "builtin:imperfect".
ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_file(const std::filesystem::path& path);

struct PointFailure {
  std::string point;
  std::string message;
};

struct ExperimentResult {
  std::vector<std::filesystem::path> files;  ///< CSVs and reports, manifest last
  std::vector<PointFailure> failures;
};

/// Runs every sweep point on a worker pool, writes the CSVs in sweep order,
/// then manifest.json. A failing point is recorded and skipped.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Formats with 17 significant digits and a '.' decimal separator.
std::string format_double(double value);

}  // namespace mfda
