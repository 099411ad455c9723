#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mfda/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mfda::ConfigError("", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

mfda::ScenarioConfig scenario_from(const std::string& source, int antennas, int samples) {
  using namespace mfda;
  if (source == "builtin:low") return low_correlation_scenario(antennas);
  if (source == "builtin:high") return high_correlation_scenario(antennas);
  if (source == "builtin:imperfect") return imperfect_csi_scenario(antennas, samples);
  ScenarioConfig cfg = load_scenario_file(source);
  if (antennas > 0) cfg.num_antennas = antennas;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed, int threads) {
  mfda::ExperimentSpec spec = mfda::load_experiment_file(spec_path);
  if (!out.empty()) spec.output_dir = out;
  if (seed)
    for (auto& s : spec.seeds) s += *seed;
  if (threads > 0) spec.threads = threads;
  const auto result = mfda::run_experiment(spec);
  for (const auto& f : result.files) std::cout << f.string() << "\n";
  for (const auto& f : result.failures) std::cerr << "point " << f.point << " failed: " << f.message << "\n";
  return result.failures.empty() ? 0 : 3;
}

int cmd_verify(const std::string& report_path) {
  const mfda::OptimizationReport report = mfda::parse_report(read_file(report_path));
  const mfda::VerificationResult v = mfda::verify_report(report);
  double worst = -1.0;
  for (const auto& c : v.constraints) worst = std::max(worst, c.excess);
  std::cout << "strategy " << mfda::to_string(report.strategy) << "\n"
            << "rate_bits " << mfda::format_double(v.recomputed_rate_bits) << "\n"
            << "constraints " << v.constraints.size() << (v.covert_exempt ? " (not enforced)" : "") << "\n"
            << "max_constraint_margin " << mfda::format_double(worst) << "\n";
  for (const auto& msg : v.violations) std::cout << "violation: " << msg << "\n";
  std::cout << (v.passed() ? "OK" : "FAILED") << "\n";
  return v.passed() ? 0 : 1;
}

int cmd_beampattern(const std::string& report_path, const std::string& grid, bool raw, const std::string& out) {
  const mfda::OptimizationReport report = mfda::parse_report(read_file(report_path));
  mfda::BeampatternOptions o;
  o.raw_power = raw;
  if (!grid.empty()) {
    const auto colon = grid.find(':');
    if (colon == std::string::npos) throw mfda::ConfigError("grid", "expected r_lo,r_hi,n:theta_lo,theta_hi,n");
    o.range_m = mfda::parse_grid_span(grid.substr(0, colon), "grid.range");
    o.angle_deg = mfda::parse_grid_span(grid.substr(colon + 1), "grid.angle");
  }
  const std::string csv = mfda::beampattern_csv(mfda::beampattern_grid(report, o), o.range_m, o.angle_deg);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!(f << csv)) throw std::runtime_error("cannot write " + out);
  }
  return 0;
}

int cmd_optimize(const std::string& source, const std::string& strategy, int antennas, int samples,
                 const std::string& solver, std::uint64_t seed, const std::string& out) {
  const mfda::ScenarioConfig cfg = scenario_from(source, antennas, samples);
  mfda::AoOptions o = mfda::default_options(cfg);
  o.seed = seed;
  if (solver == "sdr") o.solver = mfda::Stage2Solver::sdr;
  const auto report = mfda::run_two_stage_ao(cfg, mfda::parse_strategy(strategy), o);
  const std::string text = mfda::render_report(report) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!(f << text)) throw std::runtime_error("cannot write " + out);
    std::cerr << mfda::to_string(report.strategy) << " rate " << mfda::format_double(report.covert_rate_bits)
              << " bits\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covert beamforming with movable frequency diverse arrays"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment file and write CSVs plus manifest.json");
  run->add_option("spec", spec_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the experiment file)");
  run->add_option("--seed", seed, "Added to every seed in the experiment file");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string report_path;
  auto* verify = app.add_subcommand("verify", "Recompute constraints and rate of a report");
  verify->add_option("report", report_path, "Report JSON")->required()->check(CLI::ExistingFile);

  std::string grid, bp_out;
  bool raw = false;
  auto* beam = app.add_subcommand("beampattern", "Range-angle power grid of a report as CSV");
  beam->add_option("report", report_path, "Report JSON")->required()->check(CLI::ExistingFile);
  beam->add_option("--grid", grid, "r_lo,r_hi,n:theta_lo,theta_hi,n (default 800,1200,201:0,60,201)");
  beam->add_flag("--raw-power", raw, "Use each cell's own path loss instead of Bob's");
  beam->add_option("--out", bp_out, "CSV path (stdout when omitted)");

  std::string source, strategy = "MFDA", solver = "socp", opt_out;
  int antennas = 0, samples = 1;
  std::uint64_t opt_seed = 0;
  auto* opt = app.add_subcommand("optimize", "Optimize one strategy and print the report JSON");
  opt->add_option("scenario", source, "Scenario JSON or builtin:low|high|imperfect")->required();
  opt->add_option("--strategy", strategy, "PA, FDA, MFDA, PERFECT_COVERT or UPPER_BOUND");
  opt->add_option("-M,--antennas", antennas, "Antenna count (builtins default to 10)");
  opt->add_option("-L,--samples", samples, "Uncertainty samples per axis for builtin:imperfect");
  opt->add_option("--solver", solver, "Stage-2 solver")->check(CLI::IsMember({"socp", "sdr"}));
  opt->add_option("--seed", opt_seed, "Randomization seed");
  opt->add_option("--out", opt_out, "Report path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(spec_path, out_dir, seed, threads);
    if (*verify) return cmd_verify(report_path);
    if (*beam) return cmd_beampattern(report_path, grid, raw, bp_out);
    if (*opt) return cmd_optimize(source, strategy, antennas > 0 ? antennas : (source.rfind("builtin:", 0) == 0 ? 10 : 0),
                                  samples, solver, opt_seed, opt_out);
  } catch (const mfda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
